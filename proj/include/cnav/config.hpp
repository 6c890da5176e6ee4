#pragma once

#include <string>

#include "cnav/sim.hpp"

// Run configuration: a single JSON file with one section per module
// parameter set. Unknown keys are rejected; values are validated against the
// module invariants before any run.

namespace cnav {

struct RunConfig {
  TrialSpec trial;          // includes model/mapping/planner/sensor/gains
  std::string out_dir;      // empty = no artifacts
  bool dump_map = false;
  bool dump_sdf = false;
  double sdf_slice_z = 0.1;  // m, z level exported by dump-sdf

  void validate() const;  // throws std::invalid_argument with a path
};

/// Task defaults (fixtures) with everything else at library defaults.
RunConfig default_config(Task task, double param);

/// Parse from JSON text. Missing keys keep defaults for the named task;
/// unknown keys raise std::invalid_argument naming the key.
RunConfig parse_config(const std::string& json_text);

/// Serialize; parse_config(serialize_config(c)) reproduces c exactly.
std::string serialize_config(const RunConfig& config);

RunConfig load_config_file(const std::string& path);

}  // namespace cnav
