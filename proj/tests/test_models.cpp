#include <cmath>
#include <set>

#include "doctest.h"
#include "pfsgan/errors.hpp"
#include "pfsgan/models.hpp"
#include "test_util.hpp"

using namespace pfsgan;
using testutil::random_tensor;
using testutil::small_net_config;

TEST_CASE("bundle shape contracts") {
  const auto nc = small_net_config();
  ModelBundle m = ModelBundle::create(nc, 1);
  Rng rng(61);
  const Tensor batch = random_tensor({3, nc.image_size, nc.image_size, 3}, rng, 0.3);

  const Gaussian qc = m.encode_content(batch);
  CHECK(qc.mean.shape() == std::vector<int>{3, nc.d_c});
  CHECK(qc.logvar.shape() == std::vector<int>{3, nc.d_c});
  const Gaussian qa = m.encode_appearance(batch, Domain::target);
  CHECK(qa.mean.shape() == std::vector<int>{3, nc.d_a});

  const Tensor zc = random_tensor({3, nc.d_c}, rng);
  const Tensor za = random_tensor({3, nc.d_a}, rng);
  const Tensor img = m.generate(zc, za, Domain::source);
  CHECK(img.shape() == std::vector<int>{3, nc.image_size, nc.image_size, 3});

  const Tensor scores = m.discriminate(batch, Domain::target);
  CHECK(scores.shape() == std::vector<int>{3, 1});
  const Tensor rel = m.relation_score(batch, batch);
  CHECK(rel.shape() == std::vector<int>{3, 1});
  const Tensor feats = m.perceptual_features(batch);
  CHECK(feats.dim(0) == 3);
}

TEST_CASE("generator output stays within the tanh output range over many latents") {
  const auto nc = small_net_config();
  ModelBundle m = ModelBundle::create(nc, 2);
  Rng rng(62);
  for (int chunk = 0; chunk < 4; ++chunk) {
    const Tensor zc = random_tensor({64, nc.d_c}, rng, 1.5);
    const Tensor za = random_tensor({64, nc.d_a}, rng, 1.5);
    const Tensor img = m.generate(zc, za, Domain::target);
    CHECK(img.min_value() >= -1.1f);
    CHECK(img.max_value() <= 1.1f);
  }
}

TEST_CASE("relation scores are nonnegative") {
  const auto nc = small_net_config();
  ModelBundle m = ModelBundle::create(nc, 3);
  Rng rng(63);
  const Tensor a = random_tensor({8, nc.image_size, nc.image_size, 3}, rng, 0.3);
  const Tensor b = random_tensor({8, nc.image_size, nc.image_size, 3}, rng, 0.3);
  const Tensor s = m.relation_score(a, b);
  CHECK(s.min_value() >= 0.0f);
}

TEST_CASE("zero-initialized heads produce exactly zero outputs") {
  const auto nc = small_net_config();
  ModelBundle m = ModelBundle::create(nc, 4);
  Rng rng(64);
  const Tensor batch = random_tensor({2, nc.image_size, nc.image_size, 3}, rng, 0.3);

  auto ps = m.enc_content.params();
  ps[ps.size() - 2]->value.fill(0.0f);
  ps.back()->value.fill(0.0f);
  const Gaussian q = m.encode_content(batch);
  CHECK(q.mean.abs_max() == 0.0f);
  CHECK(q.logvar.abs_max() == 0.0f);

  auto pd = m.dis_src.params();
  pd[pd.size() - 2]->value.fill(0.0f);
  pd.back()->value.fill(0.0f);
  CHECK(m.discriminate(batch, Domain::source).abs_max() == 0.0f);
}

TEST_CASE("nets hold disjoint parameter storage") {
  const auto nc = small_net_config();
  ModelBundle m = ModelBundle::create(nc, 5);
  std::set<const float*> seen;
  for (Net* net : m.all_nets()) {
    for (Param* p : net->params()) {
      CHECK(seen.insert(p->value.data()).second);
    }
  }
  CHECK(m.nets().size() == 8);
  CHECK(m.all_nets().size() == 9);
}

TEST_CASE("distinct init seeds give distinct parameters, same seed identical") {
  const auto nc = small_net_config();
  ModelBundle a = ModelBundle::create(nc, 10);
  ModelBundle b = ModelBundle::create(nc, 10);
  ModelBundle c = ModelBundle::create(nc, 11);
  const auto pa = a.gen_tar.params(), pb = b.gen_tar.params(), pc = c.gen_tar.params();
  CHECK(testutil::tensors_equal(pa[0]->value, pb[0]->value));
  CHECK(!testutil::tensors_equal(pa[0]->value, pc[0]->value));
  // Per-net streams differ within one bundle.
  CHECK(!testutil::tensors_equal(a.gen_src.params()[0]->value, a.gen_tar.params()[0]->value));
}

TEST_CASE("warm start copies appearance encoder parameters") {
  const auto nc = small_net_config();
  ModelBundle m = ModelBundle::create(nc, 6);
  const auto before_src = m.enc_app_src.params(), before_tar = m.enc_app_tar.params();
  CHECK(!testutil::tensors_equal(before_src[0]->value, before_tar[0]->value));
  m.warm_start_target_appearance();
  const auto src = m.enc_app_src.params(), tar = m.enc_app_tar.params();
  REQUIRE(src.size() == tar.size());
  for (size_t i = 0; i < src.size(); ++i) {
    CHECK(testutil::tensors_equal(src[i]->value, tar[i]->value));
    CHECK(src[i]->value.data() != tar[i]->value.data());
  }
}

TEST_CASE("posterior split and merge round trip") {
  Rng rng(65);
  const Tensor head = random_tensor({3, 8}, rng);
  const Gaussian q = split_posterior(head);
  CHECK(q.dim() == 4);
  CHECK(q.mean[0] == head[0]);
  CHECK(q.logvar[0] ==
        doctest::Approx(kLogvarBound * std::tanh(head[4] / kLogvarBound)).epsilon(1e-6));
  Gaussian g;
  g.mean = random_tensor({3, 4}, rng);
  g.logvar = random_tensor({3, 4}, rng);
  const Tensor merged = merge_posterior_grad(g, q);
  CHECK(merged.shape() == std::vector<int>{3, 8});
  CHECK(merged[0] == g.mean[0]);
  // The logvar slot carries the squash Jacobian; verify it against a central
  // finite difference of split_posterior with respect to the raw head value.
  const float eps = 1e-3f;
  Tensor hp = head, hm = head;
  hp[4] += eps;
  hm[4] -= eps;
  const float fd =
      (split_posterior(hp).logvar[0] - split_posterior(hm).logvar[0]) / (2.0f * eps);
  CHECK(merged[4] == doctest::Approx(g.logvar[0] * fd).epsilon(1e-3));
}

TEST_CASE("concat and split helpers invert each other") {
  Rng rng(66);
  const Tensor a = random_tensor({2, 3}, rng);
  const Tensor b = random_tensor({2, 5}, rng);
  const Tensor c = concat_cols(a, b);
  CHECK(c.shape() == std::vector<int>{2, 8});
  Tensor ga, gb;
  split_cols(c, 3, &ga, &gb);
  CHECK(testutil::tensors_equal(ga, a));
  CHECK(testutil::tensors_equal(gb, b));

  const Tensor ia = random_tensor({2, 4, 4, 3}, rng);
  const Tensor ib = random_tensor({2, 4, 4, 3}, rng);
  const Tensor ic = concat_channels(ia, ib);
  CHECK(ic.shape() == std::vector<int>{2, 4, 4, 6});
  Tensor sa, sb;
  split_channels(ic, 3, &sa, &sb);
  CHECK(testutil::tensors_equal(sa, ia));
  CHECK(testutil::tensors_equal(sb, ib));
}

TEST_CASE("image batch validation") {
  const auto nc = small_net_config();
  ModelBundle m = ModelBundle::create(nc, 7);
  CHECK_THROWS_AS(m.check_image_batch(Tensor({2, 8, 8, 3}), "test"), ContractError);
  CHECK_THROWS_AS(m.check_image_batch(Tensor({nc.image_size, nc.image_size, 3}), "test"),
                  ContractError);
  m.check_image_batch(Tensor({1, nc.image_size, nc.image_size, 3}), "test");
}
