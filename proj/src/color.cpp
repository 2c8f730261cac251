#include "pfsgan/color.hpp"

#include <algorithm>
#include <cmath>

#include "pfsgan/errors.hpp"

namespace pfsgan {

namespace {

// D65 reference white.
constexpr float kXn = 0.95047f;
constexpr float kYn = 1.0f;
constexpr float kZn = 1.08883f;
constexpr float kDelta = 6.0f / 29.0f;

float srgb_to_linear(float c) {
  return c <= 0.04045f ? c / 12.92f : std::pow((c + 0.055f) / 1.055f, 2.4f);
}

float linear_to_srgb(float c) {
  return c <= 0.0031308f ? 12.92f * c : 1.055f * std::pow(c, 1.0f / 2.4f) - 0.055f;
}

float lab_f(float t) {
  return t > kDelta * kDelta * kDelta ? std::cbrt(t)
                                      : t / (3.0f * kDelta * kDelta) + 4.0f / 29.0f;
}

float lab_f_inv(float t) {
  return t > kDelta ? t * t * t : 3.0f * kDelta * kDelta * (t - 4.0f / 29.0f);
}

}  // namespace

void rgb_to_lab(float r, float g, float b, float* L, float* a, float* lab_b) {
  const float rl = srgb_to_linear(r);
  const float gl = srgb_to_linear(g);
  const float bl = srgb_to_linear(b);
  const float x = 0.4124564f * rl + 0.3575761f * gl + 0.1804375f * bl;
  const float y = 0.2126729f * rl + 0.7151522f * gl + 0.0721750f * bl;
  const float z = 0.0193339f * rl + 0.1191920f * gl + 0.9503041f * bl;
  const float fx = lab_f(x / kXn);
  const float fy = lab_f(y / kYn);
  const float fz = lab_f(z / kZn);
  *L = 116.0f * fy - 16.0f;
  *a = 500.0f * (fx - fy);
  *lab_b = 200.0f * (fy - fz);
}

void lab_to_rgb(float L, float a, float lab_b, float* r, float* g, float* b) {
  const float fy = (L + 16.0f) / 116.0f;
  const float fx = fy + a / 500.0f;
  const float fz = fy - lab_b / 200.0f;
  const float x = kXn * lab_f_inv(fx);
  const float y = kYn * lab_f_inv(fy);
  const float z = kZn * lab_f_inv(fz);
  const float rl = 3.2404542f * x - 1.5371385f * y - 0.4985314f * z;
  const float gl = -0.9692660f * x + 1.8760108f * y + 0.0415560f * z;
  const float bl = 0.0556434f * x - 0.2040259f * y + 1.0572252f * z;
  *r = std::clamp(linear_to_srgb(std::max(rl, 0.0f)), 0.0f, 1.0f);
  *g = std::clamp(linear_to_srgb(std::max(gl, 0.0f)), 0.0f, 1.0f);
  *b = std::clamp(linear_to_srgb(std::max(bl, 0.0f)), 0.0f, 1.0f);
}

Tensor image_rgb_to_lab(const Tensor& image) {
  if (image.rank() != 3 || image.dim(2) != 3) {
    throw ContractError("image_rgb_to_lab: expected (H,W,3), got " + shape_str(image.shape()));
  }
  Tensor lab(image.shape());
  for (int64_t p = 0; p < image.size(); p += 3) {
    const float r = std::clamp((image[p] + 1.0f) * 0.5f, 0.0f, 1.0f);
    const float g = std::clamp((image[p + 1] + 1.0f) * 0.5f, 0.0f, 1.0f);
    const float b = std::clamp((image[p + 2] + 1.0f) * 0.5f, 0.0f, 1.0f);
    rgb_to_lab(r, g, b, &lab[p], &lab[p + 1], &lab[p + 2]);
  }
  return lab;
}

Tensor image_lab_to_rgb(const Tensor& lab) {
  if (lab.rank() != 3 || lab.dim(2) != 3) {
    throw ContractError("image_lab_to_rgb: expected (H,W,3), got " + shape_str(lab.shape()));
  }
  Tensor image(lab.shape());
  for (int64_t p = 0; p < lab.size(); p += 3) {
    float r, g, b;
    lab_to_rgb(lab[p], lab[p + 1], lab[p + 2], &r, &g, &b);
    image[p] = r * 2.0f - 1.0f;
    image[p + 1] = g * 2.0f - 1.0f;
    image[p + 2] = b * 2.0f - 1.0f;
  }
  return image;
}

}  // namespace pfsgan
