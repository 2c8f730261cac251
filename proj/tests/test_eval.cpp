#include <Eigen/Dense>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "pfsgan/errors.hpp"
#include "pfsgan/eval.hpp"
#include "test_util.hpp"

using namespace pfsgan;
using testutil::small_net_config;

namespace {

// Independent KID oracle: scalar double-sum evaluation of the unbiased
// MMD^2 estimator with the cubic polynomial kernel.
double kid_brute_force(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  const double f = static_cast<double>(x.cols());
  auto k = [f](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const double v = a.dot(b) / f + 1.0;
    return v * v * v;
  };
  const auto m = x.rows(), n = y.rows();
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j)
      if (i != j) sxx += k(x.row(i), x.row(j));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (i != j) syy += k(y.row(i), y.row(j));
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < n; ++j) sxy += k(x.row(i), y.row(j));
  return sxx / (static_cast<double>(m) * (m - 1)) + syy / (static_cast<double>(n) * (n - 1)) -
         2.0 * sxy / (static_cast<double>(m) * n);
}

Eigen::MatrixXd random_features(int n, int d, uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  Eigen::MatrixXd m(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = rng.normal() * scale;
  return m;
}

}  // namespace

TEST_CASE("moments closed form on the two-point set") {
  Eigen::MatrixXd feats(2, 1);
  feats << 0.0, 2.0;
  const FeatureMoments m = moments_from_features(feats);
  CHECK(m.mu(0) == doctest::Approx(1.0));
  CHECK(m.sigma(0, 0) == doctest::Approx(2.0));  // unbiased
  CHECK(m.n == 2);
  CHECK_THROWS_AS((void)moments_from_features(Eigen::MatrixXd(1, 3)), ContractError);
}

TEST_CASE("fid closed forms") {
  const int f = 6;
  FeatureMoments a, b;
  a.mu = Eigen::VectorXd::Zero(f);
  a.sigma = Eigen::MatrixXd::Identity(f, f);
  a.n = 100;
  b = a;
  CHECK(fid(a, a) <= 1e-6);

  b.mu(0) = 1.0;  // unit mean shift, equal covariances
  CHECK(fid(a, b) == doctest::Approx(1.0).epsilon(1e-6));

  b.mu = a.mu;
  b.sigma = 4.0 * Eigen::MatrixXd::Identity(f, f);
  CHECK(fid(a, b) == doctest::Approx(static_cast<double>(f)).epsilon(1e-6));
  CHECK(fid(b, a) == doctest::Approx(fid(a, b)).epsilon(1e-9));
}

TEST_CASE("fid on random gaussian fits is symmetric and nonnegative") {
  const auto x = random_features(300, 5, 81);
  const auto y = random_features(280, 5, 82, 1.4);
  const auto mx = moments_from_features(x);
  const auto my = moments_from_features(y);
  const double d1 = fid(mx, my);
  const double d2 = fid(my, mx);
  CHECK(d1 >= 0.0);
  CHECK(d1 == doctest::Approx(d2).epsilon(1e-7));
  CHECK(fid(mx, mx) <= 1e-6);
}

TEST_CASE("kid equals the brute-force double sum on small sets") {
  for (int m = 2; m <= 8; m += 2) {
    for (int n = 2; n <= 8; n += 3) {
      const auto x = random_features(m, 4, 100 + static_cast<uint64_t>(m));
      const auto y = random_features(n, 4, 200 + static_cast<uint64_t>(n), 1.3);
      CHECK(std::abs(kid(x, y) - kid_brute_force(x, y)) <= 1e-10);
    }
  }
}

TEST_CASE("kid exact zero on identical singleton-dim sets") {
  Eigen::MatrixXd a(2, 1), b(2, 1);
  a << 1.0, 1.0;
  b << 1.0, 1.0;
  CHECK(kid(a, b) == 0.0);
}

TEST_CASE("kid self-distance within 3 standard errors on 500-sample splits") {
  const auto pool = random_features(1000, 8, 301);
  const Eigen::MatrixXd x = pool.topRows(500);
  const Eigen::MatrixXd y = pool.bottomRows(500);
  const double v = kid(x, y);
  const double se = kid_standard_error(x, y);
  CHECK(se > 0.0);
  CHECK(std::abs(v) <= 3.0 * se);
}

TEST_CASE("extract_features shape and determinism") {
  const auto nc = small_net_config();
  const Net f_eval = make_eval_extractor(nc, 900913);
  Rng rng(83);
  std::vector<Tensor> imgs;
  for (int i = 0; i < 5; ++i)
    imgs.push_back(testutil::random_tensor({nc.image_size, nc.image_size, 3}, rng, 0.3));
  const auto f1 = extract_features(imgs, f_eval);
  const auto f2 = extract_features(imgs, f_eval);
  CHECK(f1.rows() == 5);
  CHECK(f1.cols() > 1);
  CHECK((f1 - f2).cwiseAbs().maxCoeff() == 0.0);
  const Net f_other = make_eval_extractor(nc, 900914);
  const auto f3 = extract_features(imgs, f_other);
  CHECK((f1 - f3).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("synthesize contracts and determinism") {
  const auto nc = small_net_config();
  ModelBundle m = ModelBundle::create(nc, 30);
  CHECK_THROWS_AS((void)synthesize(m, SynthesisManner::Syn, 4, 1), ContractError);

  const auto s1 = synthesize(m, SynthesisManner::Rand, 6, 5);
  const auto s2 = synthesize(m, SynthesisManner::Rand, 6, 5);
  const auto s3 = synthesize(m, SynthesisManner::Rand, 6, 6);
  REQUIRE(s1.size() == 6);
  CHECK(s1[0].shape() == std::vector<int>{nc.image_size, nc.image_size, 3});
  bool same = true, differs = false;
  for (size_t i = 0; i < s1.size(); ++i) {
    same = same && testutil::tensors_equal(s1[i], s2[i]);
    differs = differs || !testutil::tensors_equal(s1[i], s3[i]);
  }
  CHECK(same);
  CHECK(differs);

  const auto d = testutil::tiny_dataset(5, 3, nc.image_size, 31);
  const auto syn = synthesize(m, SynthesisManner::Syn, 4, 9, &d);
  CHECK(syn.size() == 4);
}

TEST_CASE("baseline trainer touches only the target pair of nets") {
  const auto nc = small_net_config();
  TrainConfig tc;
  tc.stage2_steps = 3;
  tc.stage2_batch = 3;
  tc.seed = 4;
  const auto d = testutil::tiny_dataset(5, 3, nc.image_size, 32);
  std::vector<LossReport> log;
  TrainState s = train_baseline_s(d.target_pool, nc, tc, &log);
  CHECK(log.size() == 3);
  CHECK(log[0].has("L_IA_D"));
  CHECK(log[0].has("L_IA_G"));
  CHECK(log[0].stage == "baseline_s");
  CHECK(s.step == 3);
}

TEST_CASE("emit_grid contract") {
  const auto dir = testutil::fresh_dir("grid");
  Rng rng(84);
  std::vector<Tensor> imgs;
  for (int i = 0; i < 4; ++i) imgs.push_back(testutil::random_tensor({8, 8, 3}, rng, 0.3));
  emit_grid(imgs, 2, 2, dir + "/g.png");
  CHECK(std::filesystem::exists(dir + "/g.png"));
  CHECK_THROWS_AS(emit_grid(imgs, 2, 3, dir + "/h.png"), ContractError);
}

TEST_CASE("metrics report format") {
  const auto dir = testutil::fresh_dir("metrics");
  write_metrics_report({{"rand", "FID", 12.5, 100, 200, "conv-random-1", 7}}, dir + "/m.tsv");
  std::ifstream is(dir + "/m.tsv");
  std::string header, row;
  std::getline(is, header);
  std::getline(is, row);
  CHECK(header.find("manner") != std::string::npos);
  CHECK(header.find("extractor_id") != std::string::npos);
  CHECK(row.rfind("rand\tFID\t", 0) == 0);
}

TEST_CASE("manner names") {
  CHECK(manner_name(SynthesisManner::Rand) == "rand");
  CHECK(manner_name(SynthesisManner::Syn) == "syn");
  CHECK(manner_from_string("syn") == SynthesisManner::Syn);
  CHECK_THROWS_AS((void)manner_from_string("weird"), ConfigError);
}
