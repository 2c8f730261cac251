#include <cstdint>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pfsgan/config.hpp"
#include "pfsgan/errors.hpp"
#include "pfsgan/runner.hpp"
#include "pfsgan/toy.hpp"

namespace {

pfsgan::RunConfig build_config(const std::string& config_path,
                               const std::vector<std::string>& overrides) {
  pfsgan::RunConfig cfg;
  if (!config_path.empty()) cfg.load_file(config_path);
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw pfsgan::ConfigError("override must look like section.key=value: " + kv);
    }
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"paired few-shot cross-domain image generation toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "INI config file")->capture_default_str();
  app.add_option("--override", overrides, "config override, section.key=value (repeatable)");

  // make-toy
  auto* toy = app.add_subcommand("make-toy", "write the synthetic paired shape dataset");
  std::string toy_out = "toy_data";
  int toy_src = 400, toy_tar = 10, toy_size = 32, toy_eval = 500;
  uint64_t toy_seed = 1;
  toy->add_option("--out", toy_out, "output directory");
  toy->add_option("--n-source", toy_src, "source pool size");
  toy->add_option("--n-target", toy_tar, "paired target pool size");
  toy->add_option("--n-eval", toy_eval, "held-out real target pool size");
  toy->add_option("--image-size", toy_size, "square image side");
  toy->add_option("--seed", toy_seed, "dataset seed");

  // train
  auto* train = app.add_subcommand("train", "run training phases");
  std::string train_dir = "runs/default";
  std::string phase = "all";
  train->add_option("--run-dir", train_dir, "run directory for checkpoints and logs");
  train->add_option("--phase", phase, "all, stage1, relation, stage2 or baseline-s");

  // generate
  auto* gen = app.add_subcommand("generate", "draw samples from a checkpoint");
  std::string gen_ckpt, gen_out = "samples", gen_manner = "rand";
  int gen_n = 64;
  uint64_t gen_seed = 7;
  gen->add_option("--checkpoint", gen_ckpt, "checkpoint path")->required();
  gen->add_option("--out", gen_out, "output directory");
  gen->add_option("--manner", gen_manner, "rand or syn");
  gen->add_option("--n", gen_n, "number of samples");
  gen->add_option("--seed", gen_seed, "sampling seed");

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "compute FID and KID for a checkpoint");
  std::string ev_ckpt, ev_report = "metrics.tsv", ev_manner = "rand";
  uint64_t ev_seed = 7;
  ev->add_option("--checkpoint", ev_ckpt, "checkpoint path")->required();
  ev->add_option("--report", ev_report, "metrics report path (TSV)");
  ev->add_option("--manner", ev_manner, "rand or syn");
  ev->add_option("--seed", ev_seed, "sampling seed");

  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*toy) {
      pfsgan::make_toy_dataset(toy_out, toy_src, toy_tar, toy_seed, toy_size, toy_eval);
      std::cout << "wrote " << toy_out << " (" << toy_src << " source, " << toy_tar
                << " paired target, " << toy_eval << " held-out)\n";
    } else if (*train) {
      const auto cfg = build_config(config_path, overrides);
      const auto ckpt = pfsgan::run_training(cfg, train_dir, pfsgan::parse_phase(phase));
      std::cout << "last checkpoint: " << ckpt << "\n";
    } else if (*gen) {
      const auto cfg = build_config(config_path, overrides);
      pfsgan::run_generate(cfg, gen_ckpt, pfsgan::manner_from_string(gen_manner), gen_n,
                           gen_seed, gen_out);
      std::cout << "wrote " << gen_n << " samples to " << gen_out << "\n";
    } else if (*ev) {
      const auto cfg = build_config(config_path, overrides);
      const auto res = pfsgan::run_evaluate(cfg, ev_ckpt, pfsgan::manner_from_string(ev_manner),
                                            ev_seed, ev_report);
      std::cout << "FID=" << res.fid_value << " KID=" << res.kid_value << " n_gen=" << res.n_gen
                << " n_real=" << res.n_real
                << (res.used_augmented_reference ? " (augmented reference)" : "") << "\n";
    }
  } catch (const pfsgan::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
