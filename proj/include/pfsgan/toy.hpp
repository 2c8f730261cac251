#pragma once

#include <cstdint>
#include <string>

#include "pfsgan/rng.hpp"
#include "pfsgan/tensor.hpp"

namespace pfsgan {

// Content parameters of one toy sample: shape class (circle, triangle,
// square, cross), position, scale and orientation.
struct ToyShapeParams {
  int shape_class = 0;  // 0..3
  float cx = 0.5f, cy = 0.5f;  // center, fraction of image size
  float scale = 0.3f;          // radius, fraction of image size
  float angle = 0.0f;          // radians
};

// Appearance parameters of one toy target sample: fill color and a light
// background tint. Source drawings use a fixed gray fill instead.
struct ToyAppearance {
  float fill_r = 0.8f, fill_g = 0.3f, fill_b = 0.2f;  // in [0,1]
  float bg_r = 1.0f, bg_g = 1.0f, bg_b = 1.0f;
};

ToyShapeParams sample_toy_shape(Rng& rng);
ToyAppearance sample_toy_appearance(Rng& rng);

// Outline drawing on white: gray fill, black outline. Returns (size,size,3)
// in [-1,1].
Tensor render_toy_source(const ToyShapeParams& p, int size);
// Same geometry filled with the appearance color over a light tint.
Tensor render_toy_target(const ToyShapeParams& p, const ToyAppearance& a, int size);

// Silhouette mask used by the pairing checks: pixels whose darkest channel is
// below the paper-white band.
Tensor toy_silhouette(const Tensor& image);
double mask_iou(const Tensor& mask_a, const Tensor& mask_b);

// Writes source/, target/, eval_target/ pools and manifest.tsv under out_dir.
// Target i shares the shape draw of source i; eval_target holds n_eval
// held-out reference samples for metric computation.
void make_toy_dataset(const std::string& out_dir, int n_src, int n_tar, uint64_t seed,
                      int image_size = 32, int n_eval = 500);

}  // namespace pfsgan
