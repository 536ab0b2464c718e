#include "run.hpp"

#include "maxsmooth/error.hpp"
#include "maxsmooth/version.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <functional>
#include <iostream>
#include <map>

namespace {

using maxsmooth::ExitCode;
using nlohmann::json;

int fail(ExitCode code, const char* kind, const std::string& command, const std::string& msg) {
  json e{{"status", "error"}, {"kind", kind}, {"exit_code", static_cast<int>(code)}, {"command", command},
         {"message", msg}};
  std::cerr << e.dump() << '\n';
  return static_cast<int>(code);
}

}  // namespace

int main(int argc, char** argv) {
  namespace cli = maxsmooth::cli;

  CLI::App app{"Max-and-Smooth flood frequency modelling"};
  app.set_version_flag("--version", std::string(maxsmooth::kVersion));
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::string output;
  bool quiet = false;

  const std::map<std::string, std::function<int(cli::Run&)>> commands{
      {"simulate", cli::cmd_simulate},   {"fit-sites", cli::cmd_fit_sites},
      {"select", cli::cmd_select},       {"fit", cli::cmd_fit},
      {"predict", cli::cmd_predict},     {"return-levels", cli::cmd_return_levels},
      {"cv", cli::cmd_cv},               {"aggregate", cli::cmd_aggregate},
  };
  const std::map<std::string, std::string> help{
      {"simulate", "Write a synthetic scenario: maxima, descriptors and truth"},
      {"fit-sites", "Site-wise generalized ML fits with observed information"},
      {"select", "Forward covariate selection by cross-validated RMSE"},
      {"fit", "Posterior sampling of the latent Gaussian model"},
      {"predict", "Parameter summaries for gauged and ungauged sites, covariate effects"},
      {"return-levels", "Return-level curves with credible intervals"},
      {"cv", "Log-score cross-validation of model variants"},
      {"aggregate", "Rank-reordered aggregate return levels"},
  };
  for (const auto& [name, fn] : commands) {
    CLI::App* sub = app.add_subcommand(name, help.at(name));
    sub->add_option("-c,--config", config_path, "Run configuration (JSON)")->required();
    sub->add_option("--seed", seed, "Override the configured seed");
    sub->add_option("--threads", threads, "Override the configured thread count");
    sub->add_option("-o,--output", output, "Override the output directory");
    sub->add_flag("-q,--quiet", quiet, "No progress messages");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(ExitCode::kConfigError, "usage", "", e.what());
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    json overrides = json::object();
    if (app.get_subcommands().front()->count("--seed")) overrides["seed"] = seed;
    if (app.get_subcommands().front()->count("--threads")) overrides["threads"] = threads;
    if (!output.empty()) overrides["output"] = std::filesystem::absolute(output).string();
    const cli::RunConfig cfg = cli::load_config(config_path, overrides);
    cli::Run run(command, cfg, quiet);
    return commands.at(command)(run);
  } catch (const maxsmooth::ConfigError& e) {
    return fail(ExitCode::kConfigError, "config_error", command, e.what());
  } catch (const maxsmooth::DataError& e) {
    return fail(ExitCode::kDataError, "data_error", command, e.what());
  } catch (const maxsmooth::InputError& e) {
    return fail(ExitCode::kDataError, "data_error", command, e.what());
  } catch (const maxsmooth::DomainError& e) {
    return fail(ExitCode::kDataError, "data_error", command, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(ExitCode::kDataError, "io_error", command, e.what());
  } catch (const maxsmooth::NumericalError& e) {
    return fail(ExitCode::kNumericalFailure, "numerical_failure", command, e.what());
  } catch (const std::exception& e) {
    return fail(ExitCode::kNumericalFailure, "internal_error", command, e.what());
  }
}
