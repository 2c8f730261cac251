#include <string>
#include <vector>

#include "doctest.h"
#include "pfsgan/checkpoint.hpp"
#include "pfsgan/errors.hpp"
#include "pfsgan/train.hpp"
#include "test_util.hpp"

using namespace pfsgan;
using testutil::small_net_config;
using testutil::tiny_dataset;

namespace {

TrainConfig small_train_config() {
  TrainConfig tc;
  tc.batch_size = 4;
  tc.stage2_batch = 3;
  tc.aug.copies_per_sample = 3;
  tc.seed = 17;
  return tc;
}

std::vector<Tensor> snapshot_params(Net& net) {
  std::vector<Tensor> out;
  for (Param* p : net.params()) out.push_back(p->value);
  return out;
}

bool params_equal(Net& net, const std::vector<Tensor>& snap) {
  const auto ps = net.params();
  if (ps.size() != snap.size()) return false;
  for (size_t i = 0; i < ps.size(); ++i)
    if (!testutil::tensors_equal(ps[i]->value, snap[i])) return false;
  return true;
}

bool bundles_equal(ModelBundle& a, ModelBundle& b) {
  auto na = a.all_nets(), nb = b.all_nets();
  for (size_t i = 0; i < na.size(); ++i) {
    auto pa = na[i]->params(), pb = nb[i]->params();
    if (pa.size() != pb.size()) return false;
    for (size_t j = 0; j < pa.size(); ++j)
      if (!testutil::tensors_equal(pa[j]->value, pb[j]->value)) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("stage1 determinism and term names") {
  const auto nc = small_net_config();
  const auto tc = small_train_config();
  const auto d = tiny_dataset(8, 3, nc.image_size, 50);

  TrainState s1 = make_train_state(nc, tc);
  TrainState s2 = make_train_state(nc, tc);
  for (int step = 0; step < 3; ++step) {
    const auto idx1 = sample_indices(s1.rng, d.n_src(), tc.batch_size);
    const auto idx2 = sample_indices(s2.rng, d.n_src(), tc.batch_size);
    CHECK(idx1 == idx2);
    const LossReport r1 = train_stage1_step(s1, d.source_batch(idx1), tc);
    const LossReport r2 = train_stage1_step(s2, d.source_batch(idx2), tc);
    CHECK(r1.to_line() == r2.to_line());
    for (const char* name : {"L_IA_D", "L_IA_G", "L_IR", "L_KL", "L_P", "L_AR"}) {
      CHECK(r1.has(name));
    }
    CHECK(r1.stage == "stage1");
  }
  CHECK(bundles_equal(s1.models, s2.models));
  CHECK(s1.step == 3);
}

TEST_CASE("stage1 reconstruction falls over a short run") {
  const auto nc = small_net_config();
  auto tc = small_train_config();
  const auto d = tiny_dataset(16, 4, nc.image_size, 51);
  double first = 0.0, last = 0.0;
  TrainState s = make_train_state(nc, tc);
  for (int step = 0; step < 120; ++step) {
    const auto idx = sample_indices(s.rng, d.n_src(), tc.batch_size);
    const LossReport r = train_stage1_step(s, d.source_batch(idx), tc);
    if (step == 0) first = r.get("L_IR");
    last = r.get("L_IR");
  }
  CHECK(last < first);
}

TEST_CASE("relation training combinatorics and errors") {
  const auto nc = small_net_config();
  const auto tc = small_train_config();
  TrainState s = make_train_state(nc, tc);

  PairedDataset single = tiny_dataset(4, 1, nc.image_size, 52);
  CHECK_THROWS_AS((void)train_relation(s, single, tc, 1), ConfigError);

  const auto d = tiny_dataset(6, 3, nc.image_size, 53);
  auto frozen = snapshot_params(s.models.gen_src);
  auto frozen_enc = snapshot_params(s.models.enc_content);
  const float probe = train_relation(s, d, tc, 10);
  CHECK(probe >= 0.0f);
  // Only R moves.
  CHECK(params_equal(s.models.gen_src, frozen));
  CHECK(params_equal(s.models.enc_content, frozen_enc));
}

TEST_CASE("ablation flag validation") {
  TrainConfig tc = small_train_config();
  tc.disable_stage2_adversarial = true;
  CHECK_THROWS_AS(tc.validate(), ConfigError);
  tc.disable_relation_loss = true;
  tc.validate();
}

TEST_CASE("stage2 freeze contracts and term names") {
  const auto nc = small_net_config();
  auto tc = small_train_config();
  const auto d = tiny_dataset(8, 3, nc.image_size, 54);
  TrainState s = make_train_state(nc, tc);
  for (int step = 0; step < 2; ++step) {
    const auto idx = sample_indices(s.rng, d.n_src(), tc.batch_size);
    train_stage1_step(s, d.source_batch(idx), tc);
  }
  train_relation(s, d, tc, 5);
  prepare_stage2(s, tc);
  CHECK(params_equal(s.models.enc_app_tar,
                     snapshot_params(s.models.enc_app_src)));  // warm start default

  auto frozen_enc = snapshot_params(s.models.enc_content);
  auto frozen_gen = snapshot_params(s.models.gen_src);
  auto frozen_rel = snapshot_params(s.models.relation);
  const auto aug = augment_target_pool(d, tc.aug, 99);
  LossReport r;
  for (int step = 0; step < 3; ++step) r = train_stage2_step(s, d, aug, tc);
  for (const char* name : {"L_IA_D", "L_IA_G", "L_IR", "L_KL", "L_AR", "L_RG"}) {
    CHECK(r.has(name));
  }
  CHECK(!r.has("L_P"));  // stage-2 perceptual is off by default
  CHECK(r.stage == "stage2");
  CHECK(params_equal(s.models.enc_content, frozen_enc));
  CHECK(params_equal(s.models.gen_src, frozen_gen));
  CHECK(params_equal(s.models.relation, frozen_rel));
}

TEST_CASE("ablations drop their terms") {
  const auto nc = small_net_config();
  auto tc = small_train_config();
  const auto d = tiny_dataset(8, 3, nc.image_size, 55);
  const auto aug = augment_target_pool(d, tc.aug, 98);

  tc.disable_relation_loss = true;
  TrainState s1 = make_train_state(nc, tc);
  prepare_stage2(s1, tc);
  const LossReport r1 = train_stage2_step(s1, d, aug, tc);
  CHECK(!r1.has("L_RG"));
  CHECK(r1.has("L_IA_G"));

  tc.disable_stage2_adversarial = true;
  tc.validate();
  TrainState s2 = make_train_state(nc, tc);
  prepare_stage2(s2, tc);
  const LossReport r2 = train_stage2_step(s2, d, aug, tc);
  CHECK(!r2.has("L_RG"));
  CHECK(!r2.has("L_IA_G"));
  CHECK(!r2.has("L_IA_D"));
  CHECK(r2.has("L_IR"));
}

TEST_CASE("checkpoint round trip restores everything") {
  const auto nc = small_net_config();
  const auto tc = small_train_config();
  const auto d = tiny_dataset(8, 3, nc.image_size, 56);
  const std::string dir = testutil::fresh_dir("ckpt_rt");

  TrainState s = make_train_state(nc, tc);
  for (int step = 0; step < 2; ++step) {
    const auto idx = sample_indices(s.rng, d.n_src(), tc.batch_size);
    train_stage1_step(s, d.source_batch(idx), tc);
  }
  save_checkpoint(s, tc, "stage1", dir + "/a.ckpt");
  LoadedCheckpoint lc = load_checkpoint(dir + "/a.ckpt", &nc);
  CHECK(lc.phase == "stage1");
  CHECK(lc.state.step == 2);
  CHECK(lc.train_config.seed == tc.seed);
  CHECK(bundles_equal(s.models, lc.state.models));
  CHECK(lc.state.rng.serialize() == s.rng.serialize());

  // Wrong dimensions are a checkpoint error.
  NetConfig other = nc;
  other.d_c = 16;
  CHECK_THROWS_AS((void)load_checkpoint(dir + "/a.ckpt", &other), CheckpointError);
  CHECK_THROWS_AS((void)load_checkpoint(dir + "/nope.ckpt"), CheckpointError);
}

TEST_CASE("resume reproduces the uninterrupted step stream") {
  const auto nc = small_net_config();
  const auto tc = small_train_config();
  const auto d = tiny_dataset(8, 3, nc.image_size, 57);
  const std::string dir = testutil::fresh_dir("ckpt_resume");

  // Uninterrupted: 3 + 5 steps.
  TrainState full = make_train_state(nc, tc);
  std::vector<std::string> expected;
  for (int step = 0; step < 8; ++step) {
    const auto idx = sample_indices(full.rng, d.n_src(), tc.batch_size);
    const LossReport r = train_stage1_step(full, d.source_batch(idx), tc);
    if (step >= 3) expected.push_back(r.to_line());
  }

  TrainState part = make_train_state(nc, tc);
  for (int step = 0; step < 3; ++step) {
    const auto idx = sample_indices(part.rng, d.n_src(), tc.batch_size);
    train_stage1_step(part, d.source_batch(idx), tc);
  }
  save_checkpoint(part, tc, "stage1", dir + "/k.ckpt");
  TrainState resumed = std::move(load_checkpoint(dir + "/k.ckpt", &nc).state);
  for (int step = 0; step < 5; ++step) {
    const auto idx = sample_indices(resumed.rng, d.n_src(), tc.batch_size);
    const LossReport r = train_stage1_step(resumed, d.source_batch(idx), tc);
    CHECK(r.to_line() == expected[static_cast<size_t>(step)]);
  }
  CHECK(bundles_equal(resumed.models, full.models));
}

TEST_CASE("sample_indices draws distinct in-range indices") {
  Rng rng(7);
  const auto idx = sample_indices(rng, 10, 10);
  std::vector<bool> seen(10, false);
  for (int i : idx) {
    CHECK(i >= 0);
    CHECK(i < 10);
    CHECK(!seen[static_cast<size_t>(i)]);
    seen[static_cast<size_t>(i)] = true;
  }
  const auto rep = sample_indices(rng, 3, 8, true);
  CHECK(rep.size() == 8);
  CHECK_THROWS_AS((void)sample_indices(rng, 3, 8), ContractError);
}
