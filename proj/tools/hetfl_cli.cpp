// hetfl: command-line front end for the heterogeneous federated-learning simulator.

#include <cstdio>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "hetfl/data.hpp"
#include "hetfl/errors.hpp"
#include "hetfl/reporting.hpp"

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

bool is_validation_error(const std::exception& e) {
  return dynamic_cast<const hetfl::ValidationError*>(&e) || dynamic_cast<const hetfl::ConfigError*>(&e) ||
         dynamic_cast<const hetfl::ParseError*>(&e);
}

void print_result(const hetfl::ExperimentResult& r) {
  const auto& cfg = r.config;
  std::printf("noise=%s mu=%s method=%s seed=%llu\n", hetfl::to_string(cfg.noise_kind).c_str(),
              hetfl::format_number(cfg.noise_rate).c_str(), hetfl::method_name(cfg).c_str(),
              static_cast<unsigned long long>(cfg.seed));
  if (!r.ok()) {
    std::printf("  FAILED: %s\n", r.error.c_str());
    return;
  }
  for (std::size_t p = 0; p < r.final_accuracy.size(); ++p) {
    std::printf("  client %zu %-12s acc %.2f%%\n", p, r.arch_ids[p].c_str(), 100.0 * r.final_accuracy[p]);
  }
  std::printf("  average          acc %.2f%%\n", 100.0 * r.final_average);
}

// "classes=13,dim=64,n=2600,seed=1,separation=1"
hetfl::SyntheticParams parse_gen_params(const std::string& text) {
  hetfl::SyntheticParams params;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw hetfl::ValidationError("gen-data parameter '" + item + "' is not key=value");
    const std::string key = item.substr(0, eq), value = item.substr(eq + 1);
    try {
      if (key == "classes") {
        params.num_classes = std::stoul(value);
      } else if (key == "dim") {
        params.dim = std::stoul(value);
      } else if (key == "n") {
        params.samples = std::stoul(value);
      } else if (key == "seed") {
        params.seed = std::stoull(value);
      } else if (key == "separation") {
        params.separation = std::stod(value);
      } else {
        throw hetfl::ValidationError("unknown gen-data parameter '" + key + "' (classes, dim, n, seed, separation)");
      }
    } catch (const std::logic_error&) {
      throw hetfl::ValidationError("gen-data parameter '" + key + "' has a bad value '" + value + "'");
    }
  }
  return params;
}

int run_command(const std::string& config_path, const std::string& out_dir) {
  hetfl::FederationConfig config;
  try {
    config = hetfl::parse_config(config_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return is_validation_error(e) ? kExitValidation : kExitRuntime;
  }
  try {
    auto result = hetfl::run_federation(config);
    print_result(result);
    hetfl::emit_metrics({result}, out_dir);
    std::printf("metrics written to %s\n", out_dir.c_str());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}

int grid_command(const std::string& config_path, const std::vector<double>& mus, const std::vector<std::string>& kinds,
                 const std::vector<std::string>& methods, const std::vector<std::uint64_t>& seeds,
                 const std::string& out_dir) {
  hetfl::FederationConfig base;
  hetfl::GridAxes axes;
  try {
    base = hetfl::parse_config(config_path);
    axes.mus = mus;
    for (const auto& k : kinds) axes.kinds.push_back(hetfl::parse_noise_kind(k));
    for (const auto& m : methods) axes.methods.push_back(hetfl::parse_method(m));
    for (const auto& cell : hetfl::grid_cells(base, axes)) cell.validate();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return is_validation_error(e) ? kExitValidation : kExitRuntime;
  }

  std::vector<hetfl::ExperimentResult> results;
  const std::vector<std::uint64_t> replicate_seeds = seeds.empty() ? std::vector<std::uint64_t>{base.seed} : seeds;
  for (auto seed : replicate_seeds) {
    auto seeded = base;
    seeded.seed = seed;
    for (auto& r : hetfl::run_grid(seeded, axes)) {
      print_result(r);
      results.push_back(std::move(r));
    }
  }
  try {
    hetfl::emit_metrics(results, out_dir);
    std::printf("metrics written to %s\n", out_dir.c_str());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  for (const auto& r : results) {
    if (!r.ok()) return kExitRuntime;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated learning simulator for heterogeneous models on noisy, non-IID data"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "hetfl-out";

  auto* run = app.add_subcommand("run", "Run one federation experiment");
  run->add_option("config", config_path, "Config file (key = value)")->required();
  run->add_option("--out", out_dir, "Output directory");

  std::vector<double> mus;
  std::vector<std::string> kinds, methods;
  std::vector<std::uint64_t> seeds;
  auto* grid = app.add_subcommand("grid", "Run the noise-rate x noise-kind x method ablation grid");
  grid->add_option("config", config_path, "Base config file")->required();
  grid->add_option("--mu", mus, "Noise rates, comma separated")->required()->delimiter(',');
  grid->add_option("--kind", kinds, "Noise kinds: none, pair, symmetric")->required()->delimiter(',');
  grid->add_option("--method", methods, "Methods: full, sl-local, ce-collab, ce-local")->required()->delimiter(',');
  grid->add_option("--seeds", seeds, "Replicate the grid over these base seeds")->delimiter(',');
  grid->add_option("--out", out_dir, "Output directory");

  auto* validate = app.add_subcommand("validate", "Parse and validate a config, printing the resolved values");
  validate->add_option("config", config_path, "Config file")->required();

  std::string gen_params, gen_out;
  auto* gen = app.add_subcommand("gen-data", "Write a synthetic dataset file");
  gen->add_option("params", gen_params, "classes=13,dim=64,n=2600,seed=0,separation=1")->required();
  gen->add_option("out-path", gen_out, "Output dataset path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  if (*run) return run_command(config_path, out_dir);
  if (*grid) return grid_command(config_path, mus, kinds, methods, seeds, out_dir);
  if (*validate) {
    try {
      std::cout << hetfl::format_config(hetfl::parse_config(config_path));
      return 0;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return is_validation_error(e) ? kExitValidation : kExitRuntime;
    }
  }
  if (*gen) {
    try {
      const auto params = parse_gen_params(gen_params);
      hetfl::save_dataset(hetfl::generate_synthetic(params), gen_out);
      std::printf("wrote %zu samples to %s\n", params.samples, gen_out.c_str());
      return 0;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return is_validation_error(e) ? kExitValidation : kExitRuntime;
    }
  }
  return kExitValidation;
}
