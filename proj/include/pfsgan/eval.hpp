#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "pfsgan/data.hpp"
#include "pfsgan/losses.hpp"
#include "pfsgan/models.hpp"
#include "pfsgan/train.hpp"

namespace pfsgan {

// Gaussian fit to a pooled feature set: sample mean and unbiased covariance.
struct FeatureMoments {
  Eigen::VectorXd mu;
  Eigen::MatrixXd sigma;
  int n = 0;
};

enum class SynthesisManner { Rand, Syn };

std::string manner_name(SynthesisManner m);
SynthesisManner manner_from_string(const std::string& s);

// Pooled features of a batch of (H, W, 3) images, one row per image.
Eigen::MatrixXd extract_features(const std::vector<Tensor>& images, const Net& f_eval);

FeatureMoments moments_from_features(const Eigen::MatrixXd& feats);
FeatureMoments extract_moments(const std::vector<Tensor>& images, const Net& f_eval);

// Frechet distance between the two Gaussian fits. Matrix square root by
// eigendecomposition of the symmetrized product; eigenvalues below -eps are a
// NumericError, small negatives are clamped to zero.
double fid(const FeatureMoments& m1, const FeatureMoments& m2);

// Unbiased MMD^2 with the cubic polynomial kernel (x'y/f + 1)^3; within-set
// sums exclude the diagonal, so a slightly negative estimate is possible.
double kid(const Eigen::MatrixXd& feats1, const Eigen::MatrixXd& feats2);

// Standard error of the unbiased KID estimator, from the variance of the
// per-pair kernel contributions (used by the self-distance sanity bound).
double kid_standard_error(const Eigen::MatrixXd& feats1, const Eigen::MatrixXd& feats2);

// Draws n target-domain samples. Rand takes both codes from N(0, I); Syn
// samples content from E^C_src over the source pool and appearance from
// E^A_tar over the target pool (dataset required).
std::vector<Tensor> synthesize(const ModelBundle& bundle, SynthesisManner manner, int n,
                               uint64_t seed, const PairedDataset* dataset = nullptr);

// BaselineS: a hinge GAN with the same G_tar/D_tar architectures trained from
// scratch on the target pool only.
TrainState train_baseline_s(const std::vector<ImageSample>& target_pool, const NetConfig& nc,
                            const TrainConfig& tc, std::vector<LossReport>* log = nullptr);
LossReport baseline_s_step(TrainState& state, const std::vector<ImageSample>& target_pool,
                           const TrainConfig& tc);

// Tiles rows*cols images row-major into one raster file.
void emit_grid(const std::vector<Tensor>& images, int rows, int cols, const std::string& path);

struct MetricsRow {
  std::string manner;
  std::string metric;
  double value = 0.0;
  int n_gen = 0;
  int n_real = 0;
  std::string extractor_id;
  uint64_t seed = 0;
};

void write_metrics_report(const std::vector<MetricsRow>& rows, const std::string& path);

}  // namespace pfsgan
