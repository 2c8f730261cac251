#pragma once

#include <string>

#include "pfsgan/train.hpp"

namespace pfsgan {

// Single-file binary archive: metadata record (dims, step, training
// hyperparameters, phase tag), all parameter arrays keyed by network name,
// optimizer moments, and the RNG stream state.
void save_checkpoint(TrainState& state, const TrainConfig& tc, const std::string& phase,
                     const std::string& path);

struct LoadedCheckpoint {
  TrainState state;
  TrainConfig train_config;
  std::string phase;
};

// Restores a checkpoint. When `expected` is given, any dimension mismatch is a
// CheckpointError.
LoadedCheckpoint load_checkpoint(const std::string& path, const NetConfig* expected = nullptr);

}  // namespace pfsgan
