#pragma once

#include "hilbex/config.hpp"

namespace hilbex {

struct StageStatus {
  std::string name;
  std::string status;  // "ok", "skipped", "failed"
  std::string detail;
};

struct RunRecord {
  nlohmann::json manifest;
  std::vector<StageStatus> stages;
  std::vector<std::pair<std::string, std::string>> files;  // name, sha1
  int exit_code = 0;

  nlohmann::json to_json() const;
};

struct RunOptions {
  std::string out_override;
  int threads = 0;  // 0: config / HILBEX_THREADS
  bool validate_only = false;
  int verbosity = 0;
};

RunRecord run_scenario(const Scenario& scenario, const RunOptions& opt = {});

extern const char* kToolVersion;

}  // namespace hilbex
