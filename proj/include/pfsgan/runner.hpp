#pragma once

#include <string>
#include <vector>

#include "pfsgan/config.hpp"
#include "pfsgan/eval.hpp"

namespace pfsgan {

// Which training phases a `train` invocation executes.
struct PhaseSelection {
  bool stage1 = false;
  bool relation = false;
  bool stage2 = false;
  bool baseline_s = false;
};

PhaseSelection parse_phase(const std::string& phase);

// Executes the selected phases in order (stage1 -> relation -> stage2),
// loading the prerequisite checkpoint for any phase that is not run in the
// same invocation. Writes the config snapshot, per-phase loss logs and
// checkpoints into run_dir. Returns the path of the last checkpoint written.
std::string run_training(const RunConfig& cfg, const std::string& run_dir,
                         const PhaseSelection& phases);

// Draws n samples from a stage-2 (or BaselineS) checkpoint, saving each sample
// and one row-major grid image under out_dir.
void run_generate(const RunConfig& cfg, const std::string& checkpoint_path,
                  SynthesisManner manner, int n, uint64_t seed, const std::string& out_dir);

struct EvalResult {
  double fid_value = 0.0;
  double kid_value = 0.0;
  int n_gen = 0;
  int n_real = 0;
  std::string extractor_id;
  bool used_augmented_reference = false;
};

// Computes FID and KID for one synthesis manner against the reference pool
// (eval.real_dir when configured, otherwise the augmented target pool) and
// writes the metrics report.
EvalResult run_evaluate(const RunConfig& cfg, const std::string& checkpoint_path,
                        SynthesisManner manner, uint64_t seed, const std::string& report_path);

// Loads the dataset named by [data] keys.
PairedDataset load_configured_dataset(const RunConfig& cfg);

}  // namespace pfsgan
