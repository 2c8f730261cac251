#include "pfsgan/data.hpp"

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>
#include <set>
#include <sstream>

#include "pfsgan/color.hpp"
#include "pfsgan/errors.hpp"
#include "pfsgan/rng.hpp"

namespace fs = std::filesystem;

namespace pfsgan {

namespace {

const std::set<std::string> kImageExts = {".png", ".jpg", ".jpeg", ".bmp", ".ppm", ".tif",
                                          ".tiff"};

std::vector<std::string> list_images(const std::string& dir) {
  if (!fs::is_directory(dir)) throw LoadError("not a directory: " + dir);
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
    if (kImageExts.count(ext)) names.push_back(entry.path().filename().string());
  }
  std::sort(names.begin(), names.end());
  return names;
}

}  // namespace

Tensor load_image(const std::string& path, int size) {
  cv::Mat bgr = cv::imread(path, cv::IMREAD_COLOR);
  if (bgr.empty()) throw LoadError("cannot decode image file: " + path);
  cv::Mat resized;
  if (bgr.rows != size || bgr.cols != size) {
    cv::resize(bgr, resized, cv::Size(size, size), 0, 0, cv::INTER_AREA);
  } else {
    resized = bgr;
  }
  Tensor out({size, size, 3});
  for (int y = 0; y < size; ++y) {
    const cv::Vec3b* row = resized.ptr<cv::Vec3b>(y);
    for (int x = 0; x < size; ++x) {
      float* px = out.data() + (static_cast<int64_t>(y) * size + x) * 3;
      px[0] = static_cast<float>(row[x][2]) / 127.5f - 1.0f;  // R
      px[1] = static_cast<float>(row[x][1]) / 127.5f - 1.0f;  // G
      px[2] = static_cast<float>(row[x][0]) / 127.5f - 1.0f;  // B
    }
  }
  return out;
}

void save_image(const Tensor& image, const std::string& path) {
  if (image.rank() != 3 || image.dim(2) != 3) {
    throw ContractError("save_image: expected (H,W,3), got " + shape_str(image.shape()));
  }
  const int h = image.dim(0), w = image.dim(1);
  cv::Mat bgr(h, w, CV_8UC3);
  for (int y = 0; y < h; ++y) {
    cv::Vec3b* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < w; ++x) {
      const float* px = image.data() + (static_cast<int64_t>(y) * w + x) * 3;
      for (int c = 0; c < 3; ++c) {
        const float v = std::clamp((px[2 - c] + 1.0f) * 127.5f, 0.0f, 255.0f);
        row[x][c] = static_cast<uint8_t>(std::lround(v));
      }
    }
  }
  if (!cv::imwrite(path, bgr)) throw LoadError("cannot write image file: " + path);
}

Tensor PairedDataset::source_batch(const std::vector<int>& indices) const {
  return stack_samples(source_pool, indices);
}

Tensor PairedDataset::target_batch(const std::vector<int>& indices) const {
  return stack_samples(target_pool, indices);
}

Tensor stack_samples(const std::vector<ImageSample>& samples, const std::vector<int>& indices) {
  if (indices.empty()) throw ContractError("stack_samples: empty index list");
  const Tensor& first = samples.at(static_cast<size_t>(indices[0])).pixels;
  Tensor batch({static_cast<int>(indices.size()), first.dim(0), first.dim(1), first.dim(2)});
  const int64_t stride = first.size();
  for (size_t i = 0; i < indices.size(); ++i) {
    const Tensor& img = samples.at(static_cast<size_t>(indices[i])).pixels;
    require_same_shape(img, first, "stack_samples");
    std::memcpy(batch.data() + static_cast<int64_t>(i) * stride, img.data(),
                sizeof(float) * stride);
  }
  return batch;
}

PairedDataset load_dataset(const std::string& source_dir, const std::string& target_dir,
                           const std::string& manifest_path, int image_size) {
  PairedDataset d;
  std::map<std::string, int> src_index, tar_index;
  for (const std::string& name : list_images(source_dir)) {
    src_index[name] = d.n_src();
    d.source_pool.push_back(
        {load_image(source_dir + "/" + name, image_size), Domain::source, name});
  }
  for (const std::string& name : list_images(target_dir)) {
    tar_index[name] = d.n_tar();
    d.target_pool.push_back(
        {load_image(target_dir + "/" + name, image_size), Domain::target, name});
  }
  if (d.source_pool.empty()) throw LoadError("no images in source directory " + source_dir);
  if (d.target_pool.empty()) throw LoadError("no images in target directory " + target_dir);

  std::ifstream mf(manifest_path);
  if (!mf) throw LoadError("cannot open manifest: " + manifest_path);
  d.kappa.assign(d.target_pool.size(), -1);
  std::set<int> used_sources;
  std::string line;
  int line_no = 0;
  while (std::getline(mf, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw ManifestError("manifest line " + std::to_string(line_no) +
                          " is not <target>\\t<source>: " + line);
    }
    const std::string tar_name = line.substr(0, tab);
    const std::string src_name = line.substr(tab + 1);
    const auto ti = tar_index.find(tar_name);
    if (ti == tar_index.end()) {
      throw LoadError("manifest line " + std::to_string(line_no) +
                      " references missing target file: " + tar_name);
    }
    const auto si = src_index.find(src_name);
    if (si == src_index.end()) {
      throw LoadError("manifest line " + std::to_string(line_no) +
                      " references missing source file: " + src_name);
    }
    if (d.kappa[static_cast<size_t>(ti->second)] != -1) {
      throw ManifestError("duplicate target file in manifest: " + tar_name);
    }
    if (!used_sources.insert(si->second).second) {
      throw ManifestError("manifest maps two targets to source file " + src_name +
                          " (kappa must be injective)");
    }
    d.kappa[static_cast<size_t>(ti->second)] = si->second;
  }
  for (size_t i = 0; i < d.kappa.size(); ++i) {
    if (d.kappa[i] == -1) {
      throw ManifestError("target file " + d.target_pool[i].name + " has no manifest row");
    }
  }
  if (d.n_tar() > d.n_src()) {
    throw ManifestError("target pool larger than source pool (few-shot setting requires "
                        "N_tar <= N_src)");
  }
  if (d.n_tar() > d.n_src() / 10) {
    std::cerr << "warning: N_tar=" << d.n_tar() << " is not small relative to N_src="
              << d.n_src() << " (expected N_tar << N_src)\n";
  }
  return d;
}

Tensor lab_chroma_shift(const Tensor& image, float shift_a, float shift_b) {
  Tensor lab = image_rgb_to_lab(image);
  for (int64_t p = 0; p < lab.size(); p += 3) {
    lab[p + 1] += shift_a;
    lab[p + 2] += shift_b;
  }
  return image_lab_to_rgb(lab);
}

ImageSample lab_chroma_shift(const ImageSample& sample, float shift_a, float shift_b) {
  return {lab_chroma_shift(sample.pixels, shift_a, shift_b), sample.domain_tag, sample.name};
}

std::vector<ImageSample> augment_target_pool(const PairedDataset& d, const AugmentationConfig& cfg,
                                             uint64_t seed) {
  if (cfg.copies_per_sample <= 0) throw ContractError("copies_per_sample must be positive");
  if (cfg.chroma_shift_range < 0.0f) throw ContractError("chroma_shift_range must be >= 0");
  Rng rng(seed);
  std::vector<ImageSample> out;
  out.reserve(static_cast<size_t>(d.n_tar()) * static_cast<size_t>(cfg.copies_per_sample));
  for (int i = 0; i < d.n_tar(); ++i) {
    for (int c = 0; c < cfg.copies_per_sample; ++c) {
      const float sa =
          static_cast<float>(rng.uniform(-cfg.chroma_shift_range, cfg.chroma_shift_range));
      const float sb =
          static_cast<float>(rng.uniform(-cfg.chroma_shift_range, cfg.chroma_shift_range));
      ImageSample aug = lab_chroma_shift(d.target_pool[static_cast<size_t>(i)], sa, sb);
      aug.name = d.target_pool[static_cast<size_t>(i)].name + "#aug" + std::to_string(c);
      out.push_back(std::move(aug));
    }
  }
  return out;
}

}  // namespace pfsgan
