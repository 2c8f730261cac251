#include "pfsgan/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <json.hpp>

#include "pfsgan/errors.hpp"

namespace pfsgan {

namespace {

constexpr char kMagic[8] = {'P', 'F', 'S', 'G', 'C', 'K', 'P', 'T'};
constexpr uint32_t kVersion = 1;

void write_u32(std::ostream& os, uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); }
void write_i64(std::ostream& os, int64_t v) { os.write(reinterpret_cast<const char*>(&v), 8); }

uint32_t read_u32(std::istream& is) {
  uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), 4);
  return v;
}

int64_t read_i64(std::istream& is) {
  int64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), 8);
  return v;
}

void write_string(std::ostream& os, const std::string& s) {
  write_u32(os, static_cast<uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& is) {
  const uint32_t n = read_u32(is);
  std::string s(n, '\0');
  is.read(s.data(), n);
  return s;
}

void write_tensor(std::ostream& os, const Tensor& t) {
  write_u32(os, static_cast<uint32_t>(t.rank()));
  for (int i = 0; i < t.rank(); ++i) write_u32(os, static_cast<uint32_t>(t.dim(i)));
  os.write(reinterpret_cast<const char*>(t.data()),
           static_cast<std::streamsize>(t.size() * sizeof(float)));
}

Tensor read_tensor(std::istream& is) {
  const uint32_t rank = read_u32(is);
  std::vector<int> shape(rank);
  for (uint32_t i = 0; i < rank; ++i) shape[i] = static_cast<int>(read_u32(is));
  Tensor t(shape);
  is.read(reinterpret_cast<char*>(t.data()),
          static_cast<std::streamsize>(t.size() * sizeof(float)));
  return t;
}

nlohmann::json net_config_json(const NetConfig& c) {
  return {{"image_size", c.image_size},
          {"d_c", c.d_c},
          {"d_a", c.d_a},
          {"base_width", c.base_width},
          {"feat_width", c.feat_width}};
}

NetConfig net_config_from_json(const nlohmann::json& j) {
  NetConfig c;
  c.image_size = j.at("image_size");
  c.d_c = j.at("d_c");
  c.d_a = j.at("d_a");
  c.base_width = j.at("base_width");
  c.feat_width = j.at("feat_width");
  return c;
}

}  // namespace

void save_checkpoint(TrainState& state, const TrainConfig& tc, const std::string& phase,
                     const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw CheckpointError("cannot open checkpoint for writing: " + path);
  os.write(kMagic, 8);
  write_u32(os, kVersion);

  nlohmann::json meta;
  meta["net"] = net_config_json(state.models.cfg);
  meta["step"] = state.step;
  meta["phase"] = phase;
  meta["seed"] = tc.seed;
  meta["lr"] = tc.lr;
  meta["beta1"] = tc.beta1;
  meta["beta2"] = tc.beta2;
  meta["disable_relation_loss"] = tc.disable_relation_loss;
  meta["disable_stage2_adversarial"] = tc.disable_stage2_adversarial;
  meta["stage2_perceptual"] = tc.stage2_perceptual;
  meta["warm_start_enc_app_tar"] = tc.warm_start_enc_app_tar;
  meta["freeze_relation_stage2"] = tc.freeze_relation_stage2;
  write_string(os, meta.dump());
  write_string(os, state.rng.serialize());

  const auto nets = state.models.all_nets();
  write_u32(os, static_cast<uint32_t>(nets.size()));
  for (Net* net : nets) {
    write_string(os, net->name());
    write_u32(os, net->trainable() ? 1u : 0u);
    const auto params = net->params();
    write_u32(os, static_cast<uint32_t>(params.size()));
    for (Param* p : params) {
      write_string(os, p->name);
      write_tensor(os, p->value);
    }
    const auto it = state.optimizers.find(net->name());
    if (it == state.optimizers.end()) {
      write_u32(os, 0);
    } else {
      write_u32(os, 1);
      write_i64(os, it->second.t());
      write_u32(os, static_cast<uint32_t>(it->second.moments1().size()));
      for (const Tensor& m : it->second.moments1()) write_tensor(os, m);
      for (const Tensor& v : it->second.moments2()) write_tensor(os, v);
    }
  }
  write_i64(os, state.step);
  if (!os) throw CheckpointError("write failure on checkpoint: " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path, const NetConfig* expected) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CheckpointError("cannot open checkpoint: " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kMagic, 8) != 0) {
    throw CheckpointError("not a checkpoint file: " + path);
  }
  const uint32_t version = read_u32(is);
  if (version != kVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  }
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(read_string(is));
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("corrupt checkpoint metadata: ") + e.what());
  }
  const NetConfig nc = net_config_from_json(meta.at("net"));
  if (expected && !(nc == *expected)) {
    throw CheckpointError("checkpoint dimensions (image_size=" + std::to_string(nc.image_size) +
                          ", d_c=" + std::to_string(nc.d_c) + ", d_a=" + std::to_string(nc.d_a) +
                          ", base_width=" + std::to_string(nc.base_width) +
                          ") do not match the configured model");
  }

  LoadedCheckpoint out;
  TrainConfig& tc = out.train_config;
  tc.seed = meta.at("seed");
  tc.lr = meta.at("lr");
  tc.beta1 = meta.at("beta1");
  tc.beta2 = meta.at("beta2");
  tc.disable_relation_loss = meta.at("disable_relation_loss");
  tc.disable_stage2_adversarial = meta.at("disable_stage2_adversarial");
  tc.stage2_perceptual = meta.at("stage2_perceptual");
  tc.warm_start_enc_app_tar = meta.at("warm_start_enc_app_tar");
  tc.freeze_relation_stage2 = meta.at("freeze_relation_stage2");
  out.phase = meta.at("phase");

  const std::string rng_state = read_string(is);
  out.state = make_train_state(nc, tc);
  out.state.rng.deserialize(rng_state);

  const uint32_t net_count = read_u32(is);
  auto nets = out.state.models.all_nets();
  if (net_count != nets.size()) throw CheckpointError("checkpoint network count mismatch");
  for (Net* net : nets) {
    const std::string name = read_string(is);
    if (name != net->name()) {
      throw CheckpointError("checkpoint network order mismatch: expected " + net->name() +
                            ", found " + name);
    }
    net->set_trainable(read_u32(is) != 0);
    const uint32_t param_count = read_u32(is);
    auto params = net->params();
    if (param_count != params.size()) {
      throw CheckpointError("parameter count mismatch in network " + name);
    }
    for (Param* p : params) {
      const std::string pname = read_string(is);
      Tensor value = read_tensor(is);
      if (pname != p->name || !value.same_shape(p->value)) {
        throw CheckpointError("parameter mismatch: " + pname + " vs " + p->name);
      }
      p->value = std::move(value);
    }
    const uint32_t has_opt = read_u32(is);
    if (has_opt) {
      const int64_t t = read_i64(is);
      const uint32_t slots = read_u32(is);
      std::vector<Tensor> m(slots), v(slots);
      for (uint32_t i = 0; i < slots; ++i) m[i] = read_tensor(is);
      for (uint32_t i = 0; i < slots; ++i) v[i] = read_tensor(is);
      auto it = out.state.optimizers.find(name);
      if (it != out.state.optimizers.end()) it->second.restore(t, std::move(m), std::move(v));
    }
  }
  out.state.step = read_i64(is);
  if (!is) throw CheckpointError("truncated checkpoint: " + path);
  return out;
}

}  // namespace pfsgan
