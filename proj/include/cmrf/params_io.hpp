#pragma once

#include <filesystem>
#include <string>

#include "cmrf/inference.hpp"
#include "cmrf/keyvalue.hpp"
#include "cmrf/matching.hpp"
#include "cmrf/model.hpp"
#include "cmrf/segmentation.hpp"

namespace cmrf {

/// Everything a pipeline run is parameterized by.
struct RunConfig {
  ModelParams model;
  PcbpConfig pcbp;
  SlicConfig slic;
  MatchConfig match;
};

/// Overrides the fields named in `kv`. Unknown keys or unparsable values
/// throw std::runtime_error; the result is range-checked.
void apply_overrides(RunConfig& cfg, const KeyValues& kv);

RunConfig load_run_config(const std::filesystem::path& path);

/// Every key with its current value, one `key = value` line each, in a form
/// load_run_config accepts.
std::string format_run_config(const RunConfig& cfg);

}  // namespace cmrf
