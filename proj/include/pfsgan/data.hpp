#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pfsgan/models.hpp"
#include "pfsgan/tensor.hpp"

namespace pfsgan {

struct ImageSample {
  Tensor pixels;  // (H, W, 3), values in [-1, 1]
  Domain domain_tag = Domain::source;
  std::string name;
};

struct AugmentationConfig {
  float chroma_shift_range = 15.0f;  // max |shift| per chromatic channel, Lab units
  int copies_per_sample = 8;
};

// Source pool, target pool, and the injective target->source index map kappa.
struct PairedDataset {
  std::vector<ImageSample> source_pool;
  std::vector<ImageSample> target_pool;
  std::vector<int> kappa;

  int n_src() const { return static_cast<int>(source_pool.size()); }
  int n_tar() const { return static_cast<int>(target_pool.size()); }

  // Stacks selected pool samples into an (n, H, W, 3) batch.
  Tensor source_batch(const std::vector<int>& indices) const;
  Tensor target_batch(const std::vector<int>& indices) const;
};

// Decodes an image file to (size, size, 3) in [-1, 1], RGB.
Tensor load_image(const std::string& path, int size);
// Writes a [-1, 1] image tensor as a PNG (or whatever the extension names).
void save_image(const Tensor& image, const std::string& path);

// Loads both pools and the pairing manifest. The manifest has one
// `<target_file>\t<source_file>` row per pair; pools are directory listings
// sorted by filename.
PairedDataset load_dataset(const std::string& source_dir, const std::string& target_dir,
                           const std::string& manifest_path, int image_size);

// Shifts the a/b channels in Lab space; L is untouched before gamut clamping.
Tensor lab_chroma_shift(const Tensor& image, float shift_a, float shift_b);
ImageSample lab_chroma_shift(const ImageSample& sample, float shift_a, float shift_b);

// X_tar^aug: copies_per_sample chroma-shifted variants per target sample,
// shifts uniform in [-range, range], deterministic per seed.
std::vector<ImageSample> augment_target_pool(const PairedDataset& d, const AugmentationConfig& cfg,
                                             uint64_t seed);

Tensor stack_samples(const std::vector<ImageSample>& samples, const std::vector<int>& indices);

}  // namespace pfsgan
