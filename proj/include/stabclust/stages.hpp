#pragma once

#include <optional>
#include <string>
#include <utility>

#include "stabclust/config.hpp"

namespace stabclust {

// Shared CLI-level options; each stage writes artifacts plus a manifest
// under <cfg.out_dir>/<stage>/. Stages communicate only through files, so
// any prefix of the pipeline can be rerun from its manifests.
struct StageOptions {
  RunConfig cfg;
  int threads = 1;
  bool reproducible = false;  // suppress timing/timestamps for byte-identical output
  std::optional<std::pair<std::string, int>> override_selection;  // method label, k
  bool self_check = false;  // validate with test = train and a memorizing forest
  bool self_test = false;   // explore adds an identity embedding to the curves
};

void cmd_prepare(const StageOptions& opts);
void cmd_explore(const StageOptions& opts);
void cmd_search(const StageOptions& opts);
void cmd_validate(const StageOptions& opts);
void cmd_report(const std::string& run_dir);

// Reads a Dataset written by write_dataset_csv (identity role names).
Dataset load_prepared(const std::string& path);

}  // namespace stabclust
