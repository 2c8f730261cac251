#include "pfsgan/runner.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "pfsgan/checkpoint.hpp"
#include "pfsgan/data.hpp"
#include "pfsgan/errors.hpp"
#include "pfsgan/train.hpp"

namespace fs = std::filesystem;

namespace pfsgan {

namespace {

void write_text(const std::string& path, const std::string& content) {
  std::ofstream os(path);
  if (!os) throw LoadError("cannot write " + path);
  os << content;
}

std::vector<Tensor> pool_images(const std::vector<ImageSample>& pool) {
  std::vector<Tensor> out;
  out.reserve(pool.size());
  for (const auto& s : pool) out.push_back(s.pixels);
  return out;
}

void append_loss_log(const std::string& path, const std::vector<LossReport>& reports) {
  std::ofstream os(path, std::ios::app);
  for (const auto& r : reports) os << r.to_line() << "\n";
}

}  // namespace

PhaseSelection parse_phase(const std::string& phase) {
  PhaseSelection p;
  if (phase == "all") {
    p.stage1 = p.relation = p.stage2 = true;
  } else if (phase == "stage1") {
    p.stage1 = true;
  } else if (phase == "relation") {
    p.relation = true;
  } else if (phase == "stage2") {
    p.stage2 = true;
  } else if (phase == "baseline-s") {
    p.baseline_s = true;
  } else {
    throw ConfigError("unknown phase: " + phase +
                      " (expected all, stage1, relation, stage2 or baseline-s)");
  }
  return p;
}

std::string run_training(const RunConfig& cfg, const std::string& run_dir,
                         const PhaseSelection& phases) {
  const NetConfig nc = cfg.net_config();
  const TrainConfig tc = cfg.train_config();
  fs::create_directories(run_dir);
  write_text(run_dir + "/config.ini", cfg.snapshot());

  const std::string stage1_ckpt = run_dir + "/stage1.ckpt";
  const std::string relation_ckpt = run_dir + "/relation.ckpt";
  const std::string stage2_ckpt = run_dir + "/stage2.ckpt";
  const std::string baseline_ckpt = run_dir + "/baseline_s.ckpt";
  std::string last_ckpt;

  if (phases.baseline_s) {
    const PairedDataset d = load_configured_dataset(cfg);
    std::vector<LossReport> log;
    TrainState state = train_baseline_s(d.target_pool, nc, tc, &log);
    append_loss_log(run_dir + "/loss_baseline_s.log", log);
    save_checkpoint(state, tc, "baseline_s", baseline_ckpt);
    return baseline_ckpt;
  }

  const bool needs_data = phases.stage1 || phases.relation || phases.stage2;
  PairedDataset dataset;
  if (needs_data) dataset = load_configured_dataset(cfg);

  TrainState state;
  bool have_state = false;

  if (phases.stage1) {
    state = make_train_state(nc, tc);
    have_state = true;
    std::vector<LossReport> log;
    log.reserve(static_cast<size_t>(tc.stage1_steps));
    for (int s = 0; s < tc.stage1_steps; ++s) {
      const auto idx =
          sample_indices(state.rng, dataset.n_src(), tc.batch_size, tc.batch_size > dataset.n_src());
      log.push_back(train_stage1_step(state, dataset.source_batch(idx), tc));
      if (tc.checkpoint_every > 0 && (s + 1) % tc.checkpoint_every == 0) {
        save_checkpoint(state, tc, "stage1", run_dir + "/stage1_step" + std::to_string(s + 1) +
                                                 ".ckpt");
      }
    }
    append_loss_log(run_dir + "/loss_stage1.log", log);
    save_checkpoint(state, tc, "stage1", stage1_ckpt);
    last_ckpt = stage1_ckpt;
  }

  if (phases.relation) {
    if (!have_state) {
      if (!fs::exists(stage1_ckpt)) {
        throw ConfigError("phase-order error: relation phase requires a stage-1 checkpoint at " +
                          stage1_ckpt);
      }
      state = load_checkpoint(stage1_ckpt, &nc).state;
      have_state = true;
    }
    std::vector<LossReport> log;
    const float probe = train_relation(state, dataset, tc, tc.relation_steps, &log);
    append_loss_log(run_dir + "/loss_relation.log", log);
    std::ofstream(run_dir + "/relation_probe.txt") << probe << "\n";
    save_checkpoint(state, tc, "relation", relation_ckpt);
    last_ckpt = relation_ckpt;
  }

  if (phases.stage2) {
    if (!have_state) {
      // The relation checkpoint is the normal prerequisite; the ablations that
      // drop L^RG can start from stage 1 directly.
      const std::string prereq = fs::exists(relation_ckpt)               ? relation_ckpt
                                 : tc.disable_relation_loss && fs::exists(stage1_ckpt)
                                     ? stage1_ckpt
                                     : "";
      if (prereq.empty()) {
        throw ConfigError("phase-order error: stage 2 requires a relation checkpoint at " +
                          relation_ckpt + (tc.disable_relation_loss
                                               ? " or a stage-1 checkpoint at " + stage1_ckpt
                                               : ""));
      }
      state = load_checkpoint(prereq, &nc).state;
      have_state = true;
    }
    prepare_stage2(state, tc);
    const auto augmented =
        augment_target_pool(dataset, tc.aug, tc.seed ^ 0xAB12CD34ull);
    std::vector<LossReport> log;
    log.reserve(static_cast<size_t>(tc.stage2_steps));
    for (int s = 0; s < tc.stage2_steps; ++s) {
      log.push_back(train_stage2_step(state, dataset, augmented, tc));
    }
    append_loss_log(run_dir + "/loss_stage2.log", log);
    save_checkpoint(state, tc, "stage2", stage2_ckpt);
    last_ckpt = stage2_ckpt;
  }

  return last_ckpt;
}

PairedDataset load_configured_dataset(const RunConfig& cfg) {
  const std::string src = cfg.get_str("data.source_dir");
  const std::string tar = cfg.get_str("data.target_dir");
  const std::string manifest = cfg.get_str("data.manifest");
  if (src.empty() || tar.empty() || manifest.empty()) {
    throw ConfigError("data.source_dir, data.target_dir and data.manifest must be set");
  }
  return load_dataset(src, tar, manifest, cfg.get_int("data.image_size"));
}

void run_generate(const RunConfig& cfg, const std::string& checkpoint_path,
                  SynthesisManner manner, int n, uint64_t seed, const std::string& out_dir) {
  const NetConfig nc = cfg.net_config();
  LoadedCheckpoint ck = load_checkpoint(checkpoint_path, &nc);
  PairedDataset dataset;
  const PairedDataset* dptr = nullptr;
  if (manner == SynthesisManner::Syn) {
    dataset = load_configured_dataset(cfg);
    dptr = &dataset;
  }
  const auto samples = synthesize(ck.state.models, manner, n, seed, dptr);
  fs::create_directories(out_dir);
  char name[64];
  for (int i = 0; i < n; ++i) {
    std::snprintf(name, sizeof(name), "sample_%05d.png", i);
    save_image(samples[static_cast<size_t>(i)], out_dir + "/" + name);
  }
  const int side = std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(n)))));
  emit_grid(samples, side, side, out_dir + "/grid.png");
}

EvalResult run_evaluate(const RunConfig& cfg, const std::string& checkpoint_path,
                        SynthesisManner manner, uint64_t seed, const std::string& report_path) {
  const NetConfig nc = cfg.net_config();
  LoadedCheckpoint ck = load_checkpoint(checkpoint_path, &nc);
  const PairedDataset dataset = load_configured_dataset(cfg);

  EvalResult res;
  res.n_gen = cfg.get_int("eval.n_gen");

  // Reference pool: an explicit held-out directory when configured, otherwise
  // the augmented target pool (flagged in the report).
  std::vector<Tensor> real;
  const std::string real_dir = cfg.get_str("eval.real_dir");
  if (!real_dir.empty()) {
    for (const auto& entry : fs::directory_iterator(real_dir)) {
      if (entry.is_regular_file()) {
        real.push_back(load_image(entry.path().string(), nc.image_size));
      }
    }
    if (real.size() < 2) throw LoadError("eval.real_dir holds fewer than 2 images: " + real_dir);
  } else {
    const auto augmented = augment_target_pool(dataset, cfg.aug_config(), seed ^ 0x5EED5EEDull);
    for (const auto& s : augmented) real.push_back(s.pixels);
    res.used_augmented_reference = true;
  }
  res.n_real = static_cast<int>(real.size());

  const uint64_t extractor_seed = cfg.get_u64("eval.extractor_seed");
  const Net f_eval = make_eval_extractor(nc, extractor_seed);
  res.extractor_id = "conv-random-" + std::to_string(extractor_seed);

  const PairedDataset* dptr = manner == SynthesisManner::Syn ? &dataset : nullptr;
  const auto gen = synthesize(ck.state.models, manner, res.n_gen, seed, dptr);

  const Eigen::MatrixXd feats_gen = extract_features(gen, f_eval);
  const Eigen::MatrixXd feats_real = extract_features(real, f_eval);
  res.fid_value = fid(moments_from_features(feats_gen), moments_from_features(feats_real));
  res.kid_value = kid(feats_gen, feats_real);

  if (!report_path.empty()) {
    std::vector<MetricsRow> rows;
    rows.push_back({manner_name(manner), "FID", res.fid_value, res.n_gen, res.n_real,
                    res.extractor_id, seed});
    rows.push_back({manner_name(manner), "KID", res.kid_value, res.n_gen, res.n_real,
                    res.extractor_id, seed});
    write_metrics_report(rows, report_path);
    if (res.used_augmented_reference) {
      std::ofstream os(report_path, std::ios::app);
      os << "# real_reference=augmented_target_pool\n";
    }
  }
  return res;
}

}  // namespace pfsgan
