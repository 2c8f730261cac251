#include "pfsgan/toy.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <opencv2/imgproc.hpp>

#include "pfsgan/data.hpp"
#include "pfsgan/errors.hpp"

namespace fs = std::filesystem;

namespace pfsgan {

namespace {

// All drawing is done without anti-aliasing so a source/target pair rendered
// from one parameter draw rasterizes to exactly the same footprint.
constexpr int kLine = cv::LINE_8;

void draw_shape(cv::Mat& img, const ToyShapeParams& p, const cv::Scalar& fill,
                const cv::Scalar& outline, int size) {
  const float cx = p.cx * static_cast<float>(size);
  const float cy = p.cy * static_cast<float>(size);
  const float r = p.scale * static_cast<float>(size);
  const cv::Point center(static_cast<int>(std::lround(cx)), static_cast<int>(std::lround(cy)));

  auto rotated = [&](std::initializer_list<std::pair<float, float>> pts) {
    std::vector<cv::Point> out;
    const float ca = std::cos(p.angle), sa = std::sin(p.angle);
    for (const auto& [x, y] : pts) {
      const float rx = x * ca - y * sa;
      const float ry = x * sa + y * ca;
      out.emplace_back(static_cast<int>(std::lround(cx + rx * r)),
                       static_cast<int>(std::lround(cy + ry * r)));
    }
    return out;
  };

  switch (p.shape_class) {
    case 0: {  // circle
      cv::circle(img, center, static_cast<int>(std::lround(r)), fill, cv::FILLED, kLine);
      cv::circle(img, center, static_cast<int>(std::lround(r)), outline, 1, kLine);
      break;
    }
    case 1: {  // triangle
      const auto pts = rotated({{0.0f, -1.0f}, {0.866f, 0.5f}, {-0.866f, 0.5f}});
      cv::fillConvexPoly(img, pts, fill, kLine);
      cv::polylines(img, pts, true, outline, 1, kLine);
      break;
    }
    case 2: {  // square
      const auto pts = rotated({{-0.75f, -0.75f}, {0.75f, -0.75f}, {0.75f, 0.75f},
                                {-0.75f, 0.75f}});
      cv::fillConvexPoly(img, pts, fill, kLine);
      cv::polylines(img, pts, true, outline, 1, kLine);
      break;
    }
    case 3: {  // cross: two overlapping bars
      const auto bar1 = rotated({{-1.0f, -0.3f}, {1.0f, -0.3f}, {1.0f, 0.3f}, {-1.0f, 0.3f}});
      const auto bar2 = rotated({{-0.3f, -1.0f}, {0.3f, -1.0f}, {0.3f, 1.0f}, {-0.3f, 1.0f}});
      cv::fillConvexPoly(img, bar1, fill, kLine);
      cv::fillConvexPoly(img, bar2, fill, kLine);
      cv::polylines(img, bar1, true, outline, 1, kLine);
      cv::polylines(img, bar2, true, outline, 1, kLine);
      // Repaint the overlap so the outline does not cut through the cross body.
      cv::fillConvexPoly(img, rotated({{-0.28f, -0.28f}, {0.28f, -0.28f}, {0.28f, 0.28f},
                                       {-0.28f, 0.28f}}),
                         fill, kLine);
      break;
    }
    default:
      throw ContractError("toy shape class out of range: " + std::to_string(p.shape_class));
  }
}

Tensor mat_to_tensor(const cv::Mat& bgr) {
  Tensor out({bgr.rows, bgr.cols, 3});
  for (int y = 0; y < bgr.rows; ++y) {
    const cv::Vec3b* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < bgr.cols; ++x) {
      float* px = out.data() + (static_cast<int64_t>(y) * bgr.cols + x) * 3;
      px[0] = static_cast<float>(row[x][2]) / 127.5f - 1.0f;
      px[1] = static_cast<float>(row[x][1]) / 127.5f - 1.0f;
      px[2] = static_cast<float>(row[x][0]) / 127.5f - 1.0f;
    }
  }
  return out;
}

cv::Scalar bgr_scalar(float r, float g, float b) {
  return cv::Scalar(std::lround(b * 255.0f), std::lround(g * 255.0f), std::lround(r * 255.0f));
}

}  // namespace

ToyShapeParams sample_toy_shape(Rng& rng) {
  ToyShapeParams p;
  p.shape_class = rng.uniform_int(4);
  p.cx = static_cast<float>(rng.uniform(0.32, 0.68));
  p.cy = static_cast<float>(rng.uniform(0.32, 0.68));
  p.scale = static_cast<float>(rng.uniform(0.16, 0.3));
  p.angle = static_cast<float>(rng.uniform(0.0, 2.0 * M_PI));
  return p;
}

ToyAppearance sample_toy_appearance(Rng& rng) {
  // Warm fill family via HSV: hue in the red..yellow band, strong saturation.
  const float h = static_cast<float>(rng.uniform(0.0, 60.0));
  const float s = static_cast<float>(rng.uniform(0.55, 1.0));
  const float v = static_cast<float>(rng.uniform(0.6, 1.0));
  cv::Mat hsv(1, 1, CV_32FC3, cv::Scalar(h, s, v));
  cv::Mat rgb;
  cv::cvtColor(hsv, rgb, cv::COLOR_HSV2RGB);
  const cv::Vec3f c = rgb.at<cv::Vec3f>(0, 0);
  ToyAppearance a;
  a.fill_r = c[0];
  a.fill_g = c[1];
  a.fill_b = c[2];
  // Very light tint so the silhouette threshold never picks up background.
  a.bg_r = static_cast<float>(rng.uniform(0.96, 1.0));
  a.bg_g = static_cast<float>(rng.uniform(0.96, 1.0));
  a.bg_b = static_cast<float>(rng.uniform(0.96, 1.0));
  return a;
}

Tensor render_toy_source(const ToyShapeParams& p, int size) {
  cv::Mat img(size, size, CV_8UC3, bgr_scalar(1.0f, 1.0f, 1.0f));
  draw_shape(img, p, bgr_scalar(0.7f, 0.7f, 0.7f), bgr_scalar(0.0f, 0.0f, 0.0f), size);
  return mat_to_tensor(img);
}

Tensor render_toy_target(const ToyShapeParams& p, const ToyAppearance& a, int size) {
  cv::Mat img(size, size, CV_8UC3, bgr_scalar(a.bg_r, a.bg_g, a.bg_b));
  draw_shape(img, p, bgr_scalar(a.fill_r, a.fill_g, a.fill_b), bgr_scalar(0.0f, 0.0f, 0.0f),
             size);
  return mat_to_tensor(img);
}

Tensor toy_silhouette(const Tensor& image) {
  if (image.rank() != 3 || image.dim(2) != 3) {
    throw ContractError("toy_silhouette: expected (H,W,3)");
  }
  Tensor mask({image.dim(0), image.dim(1)});
  for (int64_t p = 0, q = 0; p < image.size(); p += 3, ++q) {
    const float m = std::min(image[p], std::min(image[p + 1], image[p + 2]));
    mask[q] = m < 0.6f ? 1.0f : 0.0f;
  }
  return mask;
}

double mask_iou(const Tensor& mask_a, const Tensor& mask_b) {
  require_same_shape(mask_a, mask_b, "mask_iou");
  int64_t inter = 0, uni = 0;
  for (int64_t i = 0; i < mask_a.size(); ++i) {
    const bool a = mask_a[i] > 0.5f, b = mask_b[i] > 0.5f;
    inter += (a && b) ? 1 : 0;
    uni += (a || b) ? 1 : 0;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

void make_toy_dataset(const std::string& out_dir, int n_src, int n_tar, uint64_t seed,
                      int image_size, int n_eval) {
  if (n_tar > n_src) throw ConfigError("make_toy_dataset: n_tar must not exceed n_src");
  std::error_code ec;
  fs::create_directories(out_dir + "/source", ec);
  fs::create_directories(out_dir + "/target", ec);
  if (n_eval > 0) fs::create_directories(out_dir + "/eval_target", ec);
  if (!fs::is_directory(out_dir + "/source")) {
    throw LoadError("cannot create toy dataset directory: " + out_dir);
  }

  char name[64];
  Rng rng(seed);
  std::ofstream manifest(out_dir + "/manifest.tsv");
  if (!manifest) throw LoadError("cannot write manifest under " + out_dir);
  for (int i = 0; i < n_src; ++i) {
    const ToyShapeParams p = sample_toy_shape(rng);
    std::snprintf(name, sizeof(name), "src_%05d.png", i);
    save_image(render_toy_source(p, image_size), out_dir + "/source/" + name);
    if (i < n_tar) {
      const ToyAppearance a = sample_toy_appearance(rng);
      char tname[64];
      std::snprintf(tname, sizeof(tname), "tar_%05d.png", i);
      save_image(render_toy_target(p, a, image_size), out_dir + "/target/" + tname);
      manifest << tname << "\t" << name << "\n";
    }
  }
  for (int i = 0; i < n_eval; ++i) {
    const ToyShapeParams p = sample_toy_shape(rng);
    const ToyAppearance a = sample_toy_appearance(rng);
    std::snprintf(name, sizeof(name), "ev_%05d.png", i);
    save_image(render_toy_target(p, a, image_size), out_dir + "/eval_target/" + name);
  }
}

}  // namespace pfsgan
