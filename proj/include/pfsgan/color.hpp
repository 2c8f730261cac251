#pragma once

#include "pfsgan/tensor.hpp"

namespace pfsgan {

// sRGB (D65 white, standard companding) <-> CIE Lab, per pixel. RGB components
// are in [0, 1]; L in [0, 100], a/b roughly in [-128, 128].
void rgb_to_lab(float r, float g, float b, float* L, float* a, float* lab_b);
// Out-of-gamut results are clamped to [0, 1].
void lab_to_rgb(float L, float a, float lab_b, float* r, float* g, float* b);

// Whole-image conversions for (H, W, 3) tensors; RGB side uses the [-1, 1]
// pixel convention.
Tensor image_rgb_to_lab(const Tensor& image);
Tensor image_lab_to_rgb(const Tensor& lab);

}  // namespace pfsgan
