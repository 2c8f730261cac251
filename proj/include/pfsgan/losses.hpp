#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pfsgan/data.hpp"
#include "pfsgan/models.hpp"
#include "pfsgan/tensor.hpp"

namespace pfsgan {

// Named scalar record of every active loss term at one optimization step.
struct LossReport {
  int64_t step = 0;
  std::string stage;
  std::vector<std::pair<std::string, double>> entries;

  void add(const std::string& name, double value);
  bool has(const std::string& name) const;
  double get(const std::string& name) const;
  // One line of `step=<k> stage=<s> name=value ...` for log scraping.
  std::string to_line() const;
  // Throws NumericError naming the first non-finite term.
  void check_finite() const;
};

// Mean absolute deviation over all elements; gradients are the sign pattern
// scaled by 1/size. Used for image, feature, and latent reconstructions.
float mad_loss(const Tensor& a, const Tensor& b, Tensor* grad_a = nullptr,
               Tensor* grad_b = nullptr);

// Closed-form KL(q || N(0, I)) for a diagonal Gaussian, summed over dimensions
// and averaged over the batch.
// free_bits > 0 exempts per-sample dimensions whose KL is already below the
// floor: they contribute the floor value and no gradient.
float kl_loss(const Gaussian& q, Gaussian* grad = nullptr, float free_bits = 0.0f);

// mean_real[1 - s]_+ + mean_fake[1 + s]_+
float hinge_d_loss(const std::vector<float>& scores_real, const std::vector<float>& scores_fake,
                   std::vector<float>* grad_real = nullptr,
                   std::vector<float>* grad_fake = nullptr);

// -mean_fake[s]
float hinge_g_loss(const std::vector<float>& scores_fake, std::vector<float>* grad = nullptr);

// MAD between frozen-extractor features of the two images.
float perceptual_loss(const ModelBundle& m, const Tensor& x1, const Tensor& x2,
                      Tensor* grad_x1 = nullptr, Tensor* grad_x2 = nullptr);

// D_c: Euclidean distance between content-posterior means of x_src_j and of
// the source correspondence of target sample tar_i.
float content_distance(const ModelBundle& m, const PairedDataset& d, int src_j, int tar_i);

// L^RT over a batch of (src_j, tar_i) pairs with j != kappa(i). When backprop
// is set, accumulates gradients into R only.
float relation_train_loss(ModelBundle& m, const std::vector<std::pair<int, int>>& pairs,
                          const PairedDataset& d, bool backprop = false);

// L^RG over generated cross-domain pairs. Regression target is the Euclidean
// distance between the content codes that produced the pair; R is treated as
// frozen and grad_x_tar receives d loss / d x_tar_gen for the G_tar update.
float relation_gen_loss(ModelBundle& m, const Tensor& x_src_gen, const Tensor& x_tar_gen,
                        const Tensor& zc_i, const Tensor& zc_j,
                        const std::vector<int>& indices_i, const std::vector<int>& indices_j,
                        Tensor* grad_x_tar = nullptr);

// Row-wise Euclidean distances between two (N, d) code matrices.
std::vector<float> rowwise_l2(const Tensor& a, const Tensor& b);

// (N, 1) score tensor <-> flat vector adapters for the hinge losses.
std::vector<float> scores_to_vector(const Tensor& scores);
Tensor vector_to_scores(const std::vector<float>& v);

}  // namespace pfsgan
