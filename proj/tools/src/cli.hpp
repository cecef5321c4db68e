#pragma once

#include "mgpbd/scenes.hpp"

#include <json.hpp>

#include <iosfwd>

namespace mgpbd::cli {

enum ExitCode : int {
  ok = 0,
  solver_abort = 1,
  usage_error = 2,
  unknown_preset = 3,
  output_unwritable = 4,
  spectrum_unavailable = 5,
  io_error = 6,
};

/// Entry point shared by the executable and the tests.
int run_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

nlohmann::ordered_json config_to_json(const SimConfig& c);
/// Inverse of config_to_json; missing keys keep the values already in `c`.
void config_from_json(const nlohmann::json& j, SimConfig& c);

/// Source revision the tool was built from.
const char* revision();

}  // namespace mgpbd::cli
