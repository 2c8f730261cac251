#pragma once

#include <map>
#include <string>

#include "pfsgan/data.hpp"
#include "pfsgan/models.hpp"
#include "pfsgan/train.hpp"

namespace pfsgan {

// Flat sectioned key-value configuration. Every key has a default; files and
// CLI overrides may only touch known keys. The effective config snapshots into
// the run directory.
class RunConfig {
 public:
  RunConfig();

  static RunConfig from_file(const std::string& path);
  void load_file(const std::string& path);
  // key is dotted: "train.seed". value is the textual form.
  void set(const std::string& key, const std::string& value);

  std::string get_str(const std::string& key) const;
  int get_int(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  uint64_t get_u64(const std::string& key) const;

  NetConfig net_config() const;
  TrainConfig train_config() const;
  AugmentationConfig aug_config() const;

  // INI-style dump, stable key order.
  std::string snapshot() const;

 private:
  std::map<std::string, std::string> kv_;
};

}  // namespace pfsgan
