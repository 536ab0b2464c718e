#include "run.hpp"

#include "maxsmooth/io.hpp"
#include "maxsmooth/version.hpp"

#include <iostream>

namespace maxsmooth::cli {

using nlohmann::json;
namespace fs = std::filesystem;

json versions() {
  json v;
  v["maxsmooth"] = kVersion;
  for (const char* m : {"gev_core", "site_ml", "spatial_gmrf", "latent_model", "model_selection", "prediction",
                        "evaluation", "copula_postprocess", "simulator", "data_io_cli"})
    v["modules"][m] = kVersion;
  v["formats"] = {{"draws", kDrawsFormat}, {"mesh", kMeshFormat}};
  return v;
}

Run::Run(std::string command, const RunConfig& cfg, bool quiet)
    : command_(std::move(command)), cfg_(cfg), quiet_(quiet) {}

std::string Run::stamp() const {
  return "# command=" + command_ + "\n# config_hash=" + cfg_.hash + "\n# seed=" + std::to_string(cfg_.seed) +
         "\n# version=" + kVersion + "\n";
}

void Run::input(const fs::path& p) {
  inputs_.push_back({{"path", p.string()}, {"sha256", sha256_hex(read_file(p.string()))}});
}

void Run::write(const std::string& name, const std::string& content) {
  const fs::path p = cfg_.output / name;
  write_file_atomic(p.string(), content);
  outputs_.push_back({{"path", name}, {"sha256", sha256_hex(content)}});
  progress("wrote " + p.string());
}

void Run::write_table(const std::string& name, const std::string& content) { write(name, stamp() + content); }

void Run::note(const std::string& msg) {
  notes_.push_back(msg);
  progress(msg);
}

void Run::progress(const std::string& msg) const {
  if (!quiet_) std::cerr << "maxsmooth " << command_ << ": " << msg << '\n';
}

void Run::finish() {
  json m;
  m["command"] = command_;
  m["status"] = "ok";
  m["seed"] = cfg_.seed;
  m["config_hash"] = cfg_.hash;
  m["config"] = cfg_.canonical;
  m["versions"] = versions();
  m["inputs"] = inputs_;
  m["outputs"] = outputs_;
  m["notes"] = notes_;
  const std::string name = command_ + ".manifest.json";
  write_file_atomic((cfg_.output / name).string(), m.dump(2) + "\n");
  progress("wrote " + (cfg_.output / name).string());
}

}  // namespace maxsmooth::cli
