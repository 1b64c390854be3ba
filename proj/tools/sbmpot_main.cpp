#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "sbmpot/common.hpp"
#include "sbmpot/config.hpp"

// Configuration-driven entry point. A run is described by a flat key-value
// config file plus command-line overrides; flags always win over file keys.
int main(int argc, char** argv) {
  CLI::App app{"numerical potential theory for subordinate Brownian motions"};
  app.require_subcommand(0, 1);

  std::string config_path;
  app.add_option("--config", config_path, "key = value configuration file");

  sbm::KeyValues overrides;
  auto add_common = [&](CLI::App* sub) {
    auto opt = [&](const std::string& flag, const std::string& key) {
      sub->add_option_function<std::string>(
          flag, [&overrides, key](const std::string& v) { overrides[key] = v; });
    };
    opt("--kind", "process.kind");
    opt("--alpha", "process.alpha");
    opt("--alphas", "process.alphas");
    opt("--weights", "process.weights");
    opt("--process-mass", "process.mass");
    opt("--d", "process.d");
    opt("--domain", "domain");
    opt("--seed", "seed");
    opt("--workers", "workers");
    opt("--output-dir", "output_dir");
    opt("--n-paths", "n_paths");
    opt("--method", "method");
    opt("--dt", "dt");
    opt("--at", "at");
    return opt;
  };

  {
    auto* sub = app.add_subcommand("simulate", "sample exit positions");
    add_common(sub);
    sub->callback([&] { overrides["command"] = "simulate"; });
  }
  {
    auto* sub = app.add_subcommand("estimate", "potential-theory estimators");
    auto opt = add_common(sub);
    opt("--quantity", "quantity");
    opt("--y", "y");
    opt("--charge-breaks", "charge.breaks");
    opt("--charge-values", "charge.values");
    opt("--charge-atom", "charge.atom");
    opt("--charge-atom-mass", "charge.atom_mass");
    opt("--dt-levels", "dt_levels");
    opt("--inner-radius", "inner_radius");
    sub->callback([&] { overrides["command"] = "estimate"; });
  }
  {
    auto* sub = app.add_subcommand("martin", "Martin boundary numerics");
    auto opt = add_common(sub);
    opt("--mode", "mode");
    opt("--z", "z");
    opt("--x0", "x0");
    opt("--stages", "stages");
    opt("--bins", "bins");
    opt("--trace-u", "trace_u");
    opt("--charge-breaks", "charge.breaks");
    opt("--charge-values", "charge.values");
    sub->callback([&] { overrides["command"] = "martin"; });
  }
  {
    auto* sub = app.add_subcommand("verify", "theorem harness suites");
    auto opt = add_common(sub);
    opt("--suite", "suite");
    opt("--mc-scale", "mc_scale");
    sub->callback([&] { overrides["command"] = "verify"; });
  }
  {
    auto* sub = app.add_subcommand("audit", "scaling/transience assumptions");
    add_common(sub);
    sub->callback([&] { overrides["command"] = "audit"; });
  }

  CLI11_PARSE(app, argc, argv);

  try {
    sbm::KeyValues kv;
    if (!config_path.empty()) kv = sbm::parse_config_file(config_path);
    for (const auto& [k, v] : overrides) kv[k] = v;
    return sbm::run_command(kv);
  } catch (const sbm::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "failed: " << e.what() << "\n";
    return 1;
  }
}
