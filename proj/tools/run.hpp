#pragma once

#include "config.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace maxsmooth::cli {

/// Bookkeeping for one subcommand: stamped artifacts written atomically into
/// the output directory and a manifest listing inputs and outputs with digests.
class Run {
 public:
  Run(std::string command, const RunConfig& cfg, bool quiet);

  [[nodiscard]] const RunConfig& config() const { return cfg_; }
  /// Comment lines carrying the command, config hash and seed.
  [[nodiscard]] std::string stamp() const;

  void input(const std::filesystem::path& p);
  /// Writes `content` to <output>/<name>.
  void write(const std::string& name, const std::string& content);
  /// Same with the stamp prepended.
  void write_table(const std::string& name, const std::string& content);
  void note(const std::string& msg);
  void progress(const std::string& msg) const;
  /// Writes <command>.manifest.json; call last.
  void finish();

 private:
  std::string command_;
  const RunConfig& cfg_;
  bool quiet_;
  nlohmann::json inputs_ = nlohmann::json::array();
  nlohmann::json outputs_ = nlohmann::json::array();
  std::vector<std::string> notes_;
};

nlohmann::json versions();

int cmd_simulate(Run& run);
int cmd_fit_sites(Run& run);
int cmd_select(Run& run);
int cmd_fit(Run& run);
int cmd_predict(Run& run);
int cmd_return_levels(Run& run);
int cmd_cv(Run& run);
int cmd_aggregate(Run& run);

}  // namespace maxsmooth::cli
