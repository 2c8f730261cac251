#include "pfsgan/config.hpp"

#include <fstream>
#include <sstream>

#include "pfsgan/errors.hpp"

namespace pfsgan {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace

RunConfig::RunConfig() {
  kv_ = {
      {"data.source_dir", ""},
      {"data.target_dir", ""},
      {"data.manifest", ""},
      {"data.image_size", "32"},
      {"data.chroma_shift_range", "15"},
      {"data.copies_per_sample", "8"},
      {"nets.d_c", "128"},
      {"nets.d_a", "8"},
      {"nets.base_width", "16"},
      {"nets.feat_width", "8"},
      {"losses.s1_ir", "10"},
      {"losses.s1_kl", "0.1"},
      {"losses.s1_p", "2"},
      {"losses.s1_ar", "1"},
      {"losses.s1_adv", "0.3"},
      {"losses.s2_ir", "10"},
      {"losses.s2_kl", "0.1"},
      {"losses.s2_p", "1"},
      {"losses.s2_ar", "1"},
      {"losses.s2_adv", "1"},
      {"losses.s2_rg", "1"},
      {"train.stage1_steps", "2000"},
      {"train.relation_steps", "1200"},
      {"train.stage2_steps", "600"},
      {"train.batch_size", "32"},
      {"train.stage2_batch", "16"},
      {"train.lr", "0.001"},
      {"train.beta1", "0.5"},
      {"train.kl_free_bits", "0.05"},
      {"train.beta2", "0.999"},
      {"train.seed", "1"},
      {"train.disable_relation_loss", "false"},
      {"train.disable_stage2_adversarial", "false"},
      {"train.stage2_perceptual", "false"},
      {"train.warm_start_enc_app_tar", "true"},
      {"train.freeze_relation_stage2", "true"},
      {"train.checkpoint_every", "0"},
      {"eval.n_gen", "1000"},
      {"eval.seed", "1"},
      {"eval.extractor_seed", "900913"},
      {"eval.real_dir", ""},
  };
}

RunConfig RunConfig::from_file(const std::string& path) {
  RunConfig cfg;
  cfg.load_file(path);
  return cfg;
}

void RunConfig::load_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file: " + path);
  std::string line, section;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[' && line.back() == ']') {
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path + ":" + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    set(section.empty() ? key : section + "." + key, value);
  }
}

void RunConfig::set(const std::string& key, const std::string& value) {
  auto it = kv_.find(key);
  if (it == kv_.end()) throw ConfigError("unknown config key: " + key);
  it->second = value;
}

std::string RunConfig::get_str(const std::string& key) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) throw ConfigError("unknown config key: " + key);
  return it->second;
}

int RunConfig::get_int(const std::string& key) const {
  try {
    return std::stoi(get_str(key));
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + " is not an integer: " + get_str(key));
  }
}

double RunConfig::get_double(const std::string& key) const {
  try {
    return std::stod(get_str(key));
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + " is not a number: " + get_str(key));
  }
}

uint64_t RunConfig::get_u64(const std::string& key) const {
  try {
    return std::stoull(get_str(key));
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + " is not an unsigned integer: " + get_str(key));
  }
}

bool RunConfig::get_bool(const std::string& key) const {
  const std::string v = get_str(key);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config key " + key + " is not a boolean: " + v);
}

NetConfig RunConfig::net_config() const {
  NetConfig nc;
  nc.image_size = get_int("data.image_size");
  nc.d_c = get_int("nets.d_c");
  nc.d_a = get_int("nets.d_a");
  nc.base_width = get_int("nets.base_width");
  nc.feat_width = get_int("nets.feat_width");
  return nc;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig tc;
  tc.stage1_steps = get_int("train.stage1_steps");
  tc.relation_steps = get_int("train.relation_steps");
  tc.stage2_steps = get_int("train.stage2_steps");
  tc.batch_size = get_int("train.batch_size");
  tc.stage2_batch = get_int("train.stage2_batch");
  tc.lr = static_cast<float>(get_double("train.lr"));
  tc.beta1 = static_cast<float>(get_double("train.beta1"));
  tc.beta2 = static_cast<float>(get_double("train.beta2"));
  tc.kl_free_bits = static_cast<float>(get_double("train.kl_free_bits"));
  tc.seed = get_u64("train.seed");
  tc.disable_relation_loss = get_bool("train.disable_relation_loss");
  tc.disable_stage2_adversarial = get_bool("train.disable_stage2_adversarial");
  tc.stage2_perceptual = get_bool("train.stage2_perceptual");
  tc.warm_start_enc_app_tar = get_bool("train.warm_start_enc_app_tar");
  tc.freeze_relation_stage2 = get_bool("train.freeze_relation_stage2");
  tc.checkpoint_every = get_int("train.checkpoint_every");
  tc.weights_stage1.ir = static_cast<float>(get_double("losses.s1_ir"));
  tc.weights_stage1.kl = static_cast<float>(get_double("losses.s1_kl"));
  tc.weights_stage1.p = static_cast<float>(get_double("losses.s1_p"));
  tc.weights_stage1.ar = static_cast<float>(get_double("losses.s1_ar"));
  tc.weights_stage1.adv = static_cast<float>(get_double("losses.s1_adv"));
  tc.weights_stage2.ir = static_cast<float>(get_double("losses.s2_ir"));
  tc.weights_stage2.kl = static_cast<float>(get_double("losses.s2_kl"));
  tc.weights_stage2.p = static_cast<float>(get_double("losses.s2_p"));
  tc.weights_stage2.ar = static_cast<float>(get_double("losses.s2_ar"));
  tc.weights_stage2.adv = static_cast<float>(get_double("losses.s2_adv"));
  tc.weights_stage2.rg = static_cast<float>(get_double("losses.s2_rg"));
  tc.aug = aug_config();
  tc.validate();
  return tc;
}

AugmentationConfig RunConfig::aug_config() const {
  AugmentationConfig ac;
  ac.chroma_shift_range = static_cast<float>(get_double("data.chroma_shift_range"));
  ac.copies_per_sample = get_int("data.copies_per_sample");
  if (ac.chroma_shift_range < 0.0f || ac.chroma_shift_range > 110.0f) {
    throw ConfigError("chroma_shift_range must be within the Lab gamut band [0, 110]");
  }
  if (ac.copies_per_sample <= 0) throw ConfigError("copies_per_sample must be positive");
  return ac;
}

std::string RunConfig::snapshot() const {
  std::ostringstream os;
  std::string section;
  for (const auto& [key, value] : kv_) {
    const auto dot = key.find('.');
    const std::string sec = key.substr(0, dot);
    if (sec != section) {
      if (!section.empty()) os << "\n";
      os << "[" << sec << "]\n";
      section = sec;
    }
    os << key.substr(dot + 1) << " = " << value << "\n";
  }
  return os.str();
}

}  // namespace pfsgan
