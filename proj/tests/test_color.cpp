#include <cmath>
#include <opencv2/imgproc.hpp>

#include "doctest.h"
#include "pfsgan/color.hpp"
#include "pfsgan/data.hpp"
#include "test_util.hpp"

using namespace pfsgan;

TEST_CASE("lab anchors") {
  float L, a, b;
  rgb_to_lab(1.0f, 1.0f, 1.0f, &L, &a, &b);
  CHECK(L == doctest::Approx(100.0).epsilon(1e-3));
  CHECK(std::abs(a) < 1e-2);
  CHECK(std::abs(b) < 1e-2);

  rgb_to_lab(0.0f, 0.0f, 0.0f, &L, &a, &b);
  CHECK(L == doctest::Approx(0.0).epsilon(1e-3));

  // sRGB mid gray, standard D65 value.
  rgb_to_lab(0.5f, 0.5f, 0.5f, &L, &a, &b);
  CHECK(L == doctest::Approx(53.389).epsilon(1e-2));
}

TEST_CASE("lab round trip over an rgb grid") {
  for (int ri = 0; ri <= 4; ++ri)
    for (int gi = 0; gi <= 4; ++gi)
      for (int bi = 0; bi <= 4; ++bi) {
        const float r = ri / 4.0f, g = gi / 4.0f, b = bi / 4.0f;
        float L, A, B, r2, g2, b2;
        rgb_to_lab(r, g, b, &L, &A, &B);
        lab_to_rgb(L, A, B, &r2, &g2, &b2);
        CHECK(std::abs(r - r2) < 1e-3f);
        CHECK(std::abs(g - g2) < 1e-3f);
        CHECK(std::abs(b - b2) < 1e-3f);
      }
}

TEST_CASE("lab matches the OpenCV conversion") {
  // Independent oracle: cv::cvtColor on float RGB.
  cv::Mat rgb(1, 64, CV_32FC3);
  Rng rng(21);
  for (int i = 0; i < 64; ++i) {
    auto& px = rgb.at<cv::Vec3f>(0, i);
    px[0] = static_cast<float>(rng.uniform());
    px[1] = static_cast<float>(rng.uniform());
    px[2] = static_cast<float>(rng.uniform());
  }
  cv::Mat lab;
  cv::cvtColor(rgb, lab, cv::COLOR_RGB2Lab);
  for (int i = 0; i < 64; ++i) {
    const auto& px = rgb.at<cv::Vec3f>(0, i);
    const auto& expect = lab.at<cv::Vec3f>(0, i);
    float L, a, b;
    rgb_to_lab(px[0], px[1], px[2], &L, &a, &b);
    // OpenCV rounds the CIE constants (903.3, 0.008856), giving a small
    // systematic offset; the bound still catches scale or channel mix-ups.
    CHECK(std::abs(L - expect[0]) < 0.4f);
    CHECK(std::abs(a - expect[1]) < 0.6f);
    CHECK(std::abs(b - expect[2]) < 0.6f);
  }
}

TEST_CASE("chroma shift keeps L and moves a by s on gray images") {
  // 4x4 gray test image: a = b = 0 in Lab, so shift_a = s must land a = s.
  Tensor img({4, 4, 3});
  Rng rng(22);
  for (int p = 0; p < 16; ++p) {
    const float v = static_cast<float>(rng.uniform(-0.5, 0.5));
    img[p * 3 + 0] = img[p * 3 + 1] = img[p * 3 + 2] = v;
  }
  const float s = 9.0f;
  const Tensor shifted = lab_chroma_shift(img, s, 0.0f);
  const Tensor lab_in = image_rgb_to_lab(img);
  const Tensor lab_out = image_rgb_to_lab(shifted);
  for (int p = 0; p < 16; ++p) {
    CHECK(std::abs(lab_out[p * 3 + 0] - lab_in[p * 3 + 0]) < 0.05f);
    CHECK(lab_out[p * 3 + 1] == doctest::Approx(lab_in[p * 3 + 1] + s).epsilon(0.02));
    CHECK(std::abs(lab_out[p * 3 + 2] - lab_in[p * 3 + 2]) < 0.05f);
  }
}

TEST_CASE("image lab round trip in the [-1,1] convention") {
  Rng rng(23);
  Tensor img = testutil::random_tensor({4, 4, 3}, rng, 0.4);
  const Tensor back = image_lab_to_rgb(image_rgb_to_lab(img));
  for (int64_t i = 0; i < img.size(); ++i) CHECK(std::abs(img[i] - back[i]) < 2e-3f);
}
