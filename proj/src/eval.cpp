#include "pfsgan/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "pfsgan/errors.hpp"
#include "pfsgan/rng.hpp"

namespace pfsgan {

std::string manner_name(SynthesisManner m) { return m == SynthesisManner::Rand ? "rand" : "syn"; }

SynthesisManner manner_from_string(const std::string& s) {
  if (s == "Rand" || s == "rand") return SynthesisManner::Rand;
  if (s == "Syn" || s == "syn") return SynthesisManner::Syn;
  throw ConfigError("unknown synthesis manner: " + s + " (expected Rand or Syn)");
}

Eigen::MatrixXd extract_features(const std::vector<Tensor>& images, const Net& f_eval) {
  if (images.empty()) throw ContractError("extract_features: empty image list");
  const int chunk = 64;
  const int n = static_cast<int>(images.size());
  Eigen::MatrixXd feats;
  for (int start = 0; start < n; start += chunk) {
    const int count = std::min(chunk, n - start);
    const Tensor& first = images[static_cast<size_t>(start)];
    Tensor batch({count, first.dim(0), first.dim(1), first.dim(2)});
    for (int i = 0; i < count; ++i) {
      const Tensor& img = images[static_cast<size_t>(start + i)];
      require_same_shape(img, first, "extract_features");
      std::memcpy(batch.data() + static_cast<int64_t>(i) * img.size(), img.data(),
                  sizeof(float) * img.size());
    }
    const Tensor out = f_eval.forward(batch);
    if (feats.size() == 0) feats.resize(n, out.dim(1));
    for (int i = 0; i < count; ++i) {
      for (int k = 0; k < out.dim(1); ++k) {
        feats(start + i, k) = out[static_cast<int64_t>(i) * out.dim(1) + k];
      }
    }
  }
  return feats;
}

FeatureMoments moments_from_features(const Eigen::MatrixXd& feats) {
  const int n = static_cast<int>(feats.rows());
  if (n < 2) throw ContractError("moments need at least 2 samples, got " + std::to_string(n));
  FeatureMoments m;
  m.n = n;
  m.mu = feats.colwise().mean();
  const Eigen::MatrixXd centered = feats.rowwise() - m.mu.transpose();
  m.sigma = centered.transpose() * centered / static_cast<double>(n - 1);
  return m;
}

FeatureMoments extract_moments(const std::vector<Tensor>& images, const Net& f_eval) {
  if (images.size() < 2) {
    throw ContractError("extract_moments: need at least 2 images, got " +
                        std::to_string(images.size()));
  }
  return moments_from_features(extract_features(images, f_eval));
}

namespace {

// Symmetric PSD square root with negative-eigenvalue clamping.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& a, double* min_eig = nullptr) {
  const Eigen::MatrixXd sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  if (es.info() != Eigen::Success) throw NumericError("eigendecomposition failed in fid");
  Eigen::VectorXd ev = es.eigenvalues();
  if (min_eig) *min_eig = ev.minCoeff();
  for (int i = 0; i < ev.size(); ++i) ev(i) = std::sqrt(std::max(ev(i), 0.0));
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

double fid(const FeatureMoments& m1, const FeatureMoments& m2) {
  if (m1.mu.size() != m2.mu.size()) {
    throw ContractError("fid: feature dimension mismatch " + std::to_string(m1.mu.size()) +
                        " vs " + std::to_string(m2.mu.size()));
  }
  const double mean_term = (m1.mu - m2.mu).squaredNorm();
  const Eigen::MatrixXd s1_sqrt = psd_sqrt(m1.sigma);
  double min_eig = 0.0;
  const Eigen::MatrixXd cross = psd_sqrt(s1_sqrt * m2.sigma * s1_sqrt, &min_eig);
  const double scale = std::max({m1.sigma.norm(), m2.sigma.norm(), 1.0});
  if (min_eig < -1e-6 * scale) {
    throw NumericError("fid: matrix square root produced eigenvalue " + std::to_string(min_eig) +
                       " beyond tolerance");
  }
  const double trace_term = m1.sigma.trace() + m2.sigma.trace() - 2.0 * cross.trace();
  const double value = mean_term + trace_term;
  return value < 0.0 ? 0.0 : value;
}

namespace {

Eigen::MatrixXd poly3_gram(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const double f = static_cast<double>(a.cols());
  Eigen::MatrixXd g = (a * b.transpose()) / f;
  g.array() += 1.0;
  return g.array().cube();
}

}  // namespace

double kid(const Eigen::MatrixXd& feats1, const Eigen::MatrixXd& feats2) {
  const int m = static_cast<int>(feats1.rows());
  const int n = static_cast<int>(feats2.rows());
  if (m < 2 || n < 2) throw ContractError("kid: each feature set needs at least 2 elements");
  if (feats1.cols() != feats2.cols()) throw ContractError("kid: feature dimension mismatch");
  const Eigen::MatrixXd kxx = poly3_gram(feats1, feats1);
  const Eigen::MatrixXd kyy = poly3_gram(feats2, feats2);
  const Eigen::MatrixXd kxy = poly3_gram(feats1, feats2);
  const double sum_xx = kxx.sum() - kxx.trace();
  const double sum_yy = kyy.sum() - kyy.trace();
  const double sum_xy = kxy.sum();
  return sum_xx / (static_cast<double>(m) * (m - 1)) +
         sum_yy / (static_cast<double>(n) * (n - 1)) -
         2.0 * sum_xy / (static_cast<double>(m) * n);
}

double kid_standard_error(const Eigen::MatrixXd& feats1, const Eigen::MatrixXd& feats2) {
  // Conservative plug-in bound: variance of the off-diagonal kernel values
  // divided by the number of independent-ish pairs.
  const Eigen::MatrixXd kxx = poly3_gram(feats1, feats1);
  const Eigen::MatrixXd kyy = poly3_gram(feats2, feats2);
  const Eigen::MatrixXd kxy = poly3_gram(feats1, feats2);
  std::vector<double> vals;
  for (int i = 0; i < kxx.rows(); ++i) {
    for (int j = 0; j < kxx.cols(); ++j) {
      if (i != j) vals.push_back(kxx(i, j));
    }
  }
  for (int i = 0; i < kyy.rows(); ++i) {
    for (int j = 0; j < kyy.cols(); ++j) {
      if (i != j) vals.push_back(kyy(i, j));
    }
  }
  for (int i = 0; i < kxy.rows(); ++i) {
    for (int j = 0; j < kxy.cols(); ++j) vals.push_back(kxy(i, j));
  }
  double mean = 0.0;
  for (double v : vals) mean += v;
  mean /= static_cast<double>(vals.size());
  double var = 0.0;
  for (double v : vals) var += (v - mean) * (v - mean);
  var /= static_cast<double>(vals.size() - 1);
  const double n_eff = std::min(feats1.rows(), feats2.rows());
  return std::sqrt(var / n_eff) * 2.0;
}

std::vector<Tensor> synthesize(const ModelBundle& bundle, SynthesisManner manner, int n,
                               uint64_t seed, const PairedDataset* dataset) {
  if (n <= 0) throw ContractError("synthesize: n must be positive");
  if (manner == SynthesisManner::Syn && dataset == nullptr) {
    throw ContractError("synthesize: Syn manner requires dataset access");
  }
  Rng rng(seed);
  std::vector<Tensor> out;
  out.reserve(static_cast<size_t>(n));
  const int chunk = 64;
  for (int start = 0; start < n; start += chunk) {
    const int count = std::min(chunk, n - start);
    Tensor zc({count, bundle.cfg.d_c});
    Tensor za({count, bundle.cfg.d_a});
    if (manner == SynthesisManner::Rand) {
      for (int64_t i = 0; i < zc.size(); ++i) zc[i] = static_cast<float>(rng.normal());
      for (int64_t i = 0; i < za.size(); ++i) za[i] = static_cast<float>(rng.normal());
    } else {
      std::vector<int> src_idx(static_cast<size_t>(count)), tar_idx(static_cast<size_t>(count));
      for (int i = 0; i < count; ++i) {
        src_idx[static_cast<size_t>(i)] = rng.uniform_int(dataset->n_src());
        tar_idx[static_cast<size_t>(i)] = rng.uniform_int(dataset->n_tar());
      }
      zc = sample_gaussian(bundle.encode_content(dataset->source_batch(src_idx)), rng);
      za = sample_gaussian(
          bundle.encode_appearance(dataset->target_batch(tar_idx), Domain::target), rng);
    }
    const Tensor batch = bundle.generate(zc, za, Domain::target);
    const int64_t stride = static_cast<int64_t>(batch.dim(1)) * batch.dim(2) * batch.dim(3);
    for (int i = 0; i < count; ++i) {
      Tensor img({batch.dim(1), batch.dim(2), batch.dim(3)});
      std::memcpy(img.data(), batch.data() + static_cast<int64_t>(i) * stride,
                  sizeof(float) * stride);
      out.push_back(std::move(img));
    }
  }
  return out;
}

LossReport baseline_s_step(TrainState& state, const std::vector<ImageSample>& target_pool,
                           const TrainConfig& tc) {
  ModelBundle& m = state.models;
  const int n_tar = static_cast<int>(target_pool.size());
  const int nb = std::min(tc.stage2_batch, n_tar);
  LossReport report;
  report.step = state.step;
  report.stage = "baseline_s";

  auto sample_latents = [&](int count) {
    Tensor z({count, m.cfg.d_c + m.cfg.d_a});
    for (int64_t i = 0; i < z.size(); ++i) z[i] = static_cast<float>(state.rng.normal());
    return z;
  };

  {
    const Tensor real = stack_samples(target_pool, sample_indices(state.rng, n_tar, nb));
    const Tensor fake = m.gen_tar.forward(sample_latents(nb));
    Trace tr_real, tr_fake;
    const Tensor s_real = m.dis_tar.forward(real, &tr_real);
    const Tensor s_fake = m.dis_tar.forward(fake, &tr_fake);
    std::vector<float> g_real, g_fake;
    const float loss = hinge_d_loss(scores_to_vector(s_real), scores_to_vector(s_fake), &g_real,
                                    &g_fake);
    m.dis_tar.zero_grad();
    m.dis_tar.backward(tr_real, vector_to_scores(g_real));
    m.dis_tar.backward(tr_fake, vector_to_scores(g_fake));
    state.optimizer_for(m.dis_tar).step(m.dis_tar.params());
    report.add("L_IA_D", loss);
  }
  {
    Trace tr_g, tr_d;
    const Tensor fake = m.gen_tar.forward(sample_latents(nb), &tr_g);
    const Tensor s_fake = m.dis_tar.forward(fake, &tr_d);
    std::vector<float> g_s;
    const float loss = hinge_g_loss(scores_to_vector(s_fake), &g_s);
    const bool was = m.dis_tar.trainable();
    m.dis_tar.set_trainable(false);
    const Tensor g_img = m.dis_tar.backward(tr_d, vector_to_scores(g_s));
    m.dis_tar.set_trainable(was);
    m.gen_tar.zero_grad();
    m.gen_tar.backward(tr_g, g_img);
    state.optimizer_for(m.gen_tar).step(m.gen_tar.params());
    report.add("L_IA_G", loss);
  }
  report.check_finite();
  ++state.step;
  return report;
}

TrainState train_baseline_s(const std::vector<ImageSample>& target_pool, const NetConfig& nc,
                            const TrainConfig& tc, std::vector<LossReport>* log) {
  if (target_pool.empty()) throw ContractError("train_baseline_s: empty target pool");
  TrainState state = make_train_state(nc, tc);
  for (int s = 0; s < tc.stage2_steps; ++s) {
    LossReport r = baseline_s_step(state, target_pool, tc);
    if (log) log->push_back(std::move(r));
  }
  return state;
}

void emit_grid(const std::vector<Tensor>& images, int rows, int cols, const std::string& path) {
  if (rows <= 0 || cols <= 0) throw ContractError("emit_grid: rows and cols must be positive");
  if (static_cast<size_t>(rows) * static_cast<size_t>(cols) > images.size()) {
    throw ContractError("emit_grid: rows*cols exceeds image count");
  }
  const Tensor& first = images[0];
  const int h = first.dim(0), w = first.dim(1), c = first.dim(2);
  Tensor grid({rows * h, cols * w, c});
  for (int r = 0; r < rows; ++r) {
    for (int col = 0; col < cols; ++col) {
      const Tensor& img = images[static_cast<size_t>(r) * cols + col];
      require_same_shape(img, first, "emit_grid");
      for (int y = 0; y < h; ++y) {
        std::memcpy(grid.data() + ((static_cast<int64_t>(r) * h + y) * cols * w +
                                   static_cast<int64_t>(col) * w) *
                                      c,
                    img.data() + static_cast<int64_t>(y) * w * c, sizeof(float) * w * c);
      }
    }
  }
  save_image(grid, path);
}

void write_metrics_report(const std::vector<MetricsRow>& rows, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw LoadError("cannot write metrics report: " + path);
  os << "manner\tmetric\tvalue\tn_gen\tn_real\textractor_id\tseed\n";
  os.precision(10);
  for (const auto& r : rows) {
    os << r.manner << "\t" << r.metric << "\t" << r.value << "\t" << r.n_gen << "\t" << r.n_real
       << "\t" << r.extractor_id << "\t" << r.seed << "\n";
  }
}

}  // namespace pfsgan
