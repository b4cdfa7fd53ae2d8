#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "parabolicity/cli_reporting.hpp"

namespace pb = parabolicity;

namespace {

std::vector<double> parse_p_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw pb::ConfigError("--p: bad number '" + item + "'");
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical p-parabolicity certificates from radial curvature lower bounds"};
  app.require_subcommand(1);

  std::string config_path, out_dir, formats, p_list, sweep_spec;
  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON run config")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory (overrides output.dir)");
    sub->add_option("--format", formats, "comma-separated subset of csv,json");
    sub->add_option("--p", p_list, "comma-separated p values (overrides config p)");
    sub->add_option("--sweep", sweep_spec, "geometric p grid, e.g. p=1.01:20:64");
  };
  CLI::App* certify = app.add_subcommand("certify", "certificate JSON; exit 0 iff every p is certified");
  CLI::App* solve = app.add_subcommand("solve", "comparison solution CSV (r, phi, dphi)");
  CLI::App* volume = app.add_subcommand("volume", "volume bound CSV (r, vbar, dvbar)");
  CLI::App* sweep = app.add_subcommand("sweep", "numeric vs analytic threshold CSV over (alpha, n)");
  CLI::App* validate = app.add_subcommand("validate", "comparison checks against exact model manifolds");
  for (CLI::App* sub : {certify, solve, volume, sweep, validate}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    pb::RunConfig config = pb::load_config(config_path);
    if (!out_dir.empty()) config.output.dir = out_dir;
    if (!formats.empty()) {
      config.output.csv = config.output.json = false;
      std::stringstream ss(formats);
      std::string f;
      while (std::getline(ss, f, ',')) {
        if (f == "csv") {
          config.output.csv = true;
        } else if (f == "json") {
          config.output.json = true;
        } else {
          throw pb::ConfigError("--format: expected csv and/or json, got '" + f + "'");
        }
      }
    }
    if (!p_list.empty()) config.p = parse_p_list(p_list);
    if (!sweep_spec.empty()) config.p_sweep = pb::detail::parse_p_sweep_string(sweep_spec);
    pb::validate_config(config);

    pb::CommandResult result;
    if (certify->parsed()) {
      result = pb::cmd_certify(config);
    } else if (solve->parsed()) {
      result = pb::cmd_solve(config);
    } else if (volume->parsed()) {
      result = pb::cmd_volume(config);
    } else if (sweep->parsed()) {
      result = pb::cmd_sweep(config);
    } else {
      result = pb::cmd_validate(config);
    }
    std::cout << result.summary << '\n';
    return result.exit_code;
  } catch (const pb::Error& e) {
    std::cerr << "error";
    if (!e.stage().empty()) std::cerr << " [" << e.stage() << "]";
    std::cerr << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
