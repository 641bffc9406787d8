#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "godnf/commands.hpp"
#include "godnf/types.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir = "./out";
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
};

void add_common(CLI::App* sub, CommonArgs& args) {
  sub->add_option("--config", args.config_path, "JSON config file");
  sub->add_option("--out", args.out_dir, "output directory")
      ->capture_default_str();
  sub->add_option("--seed", args.seed, "override the config seed");
  sub->add_option("--threads", args.threads, "override the thread count");
}

godnf::Json load_config(const CommonArgs& args) {
  godnf::Json cfg = godnf::Json::object();
  if (!args.config_path.empty()) {
    std::ifstream in(args.config_path);
    if (!in) throw godnf::ConfigError("cannot open config: " + args.config_path);
    try {
      cfg = godnf::Json::parse(in);
    } catch (const godnf::Json::parse_error& e) {
      throw godnf::ConfigError("config is not valid JSON: " +
                               std::string(e.what()));
    }
    if (!cfg.is_object()) throw godnf::ConfigError("config must be an object");
  }
  if (args.seed) cfg["seed"] = *args.seed;
  if (args.threads) cfg["threads"] = *args.threads;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sparse opinion diffusion toolkit"};
  app.require_subcommand(1);

  CommonArgs diffuse_args, train_nc_args, train_ie_args, simulate_args,
      demo_args, bench_args;
  CLI::App* diffuse = app.add_subcommand("diffuse", "run the diffusion loop");
  add_common(diffuse, diffuse_args);
  CLI::App* train_nc =
      app.add_subcommand("train-nc", "train node classification");
  add_common(train_nc, train_nc_args);
  CLI::App* train_ie =
      app.add_subcommand("train-ie", "train influence regression");
  add_common(train_ie, train_ie_args);
  CLI::App* simulate =
      app.add_subcommand("simulate", "Monte Carlo cascade ground truth");
  add_common(simulate, simulate_args);
  CLI::App* demo =
      app.add_subcommand("consensus-demo", "canned consensus scenarios");
  add_common(demo, demo_args);
  CLI::App* bench = app.add_subcommand("bench", "step-cost scaling sweep");
  add_common(bench, bench_args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (diffuse->parsed())
      return godnf::cmd_diffuse(load_config(diffuse_args),
                                diffuse_args.out_dir);
    if (train_nc->parsed())
      return godnf::cmd_train_nc(load_config(train_nc_args),
                                 train_nc_args.out_dir);
    if (train_ie->parsed())
      return godnf::cmd_influence(load_config(train_ie_args),
                                  train_ie_args.out_dir);
    if (simulate->parsed())
      return godnf::cmd_simulate(load_config(simulate_args),
                                 simulate_args.out_dir);
    if (demo->parsed())
      return godnf::cmd_consensus_demo(load_config(demo_args),
                                       demo_args.out_dir);
    if (bench->parsed())
      return godnf::cmd_bench(load_config(bench_args), bench_args.out_dir);
  } catch (const godnf::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const godnf::DivergenceError& e) {
    std::cerr << "diverged: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
