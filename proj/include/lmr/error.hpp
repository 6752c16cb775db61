#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lmr {

/// Failure categories raised by the library. Each maps to a distinct,
/// recoverable condition that callers (the simulator, the CLI) may branch on.
enum class Errc {
  missing_file,
  malformed_metadata,
  disconnected_free_space,
  start_in_wall,
  origin_in_wall,
  self_intersecting,
  width_too_small,
  invalid_argument,
  degenerate_line,
  extraction_failure,
  infeasible,
  solver_failure,
  io_error,
  empty_trajectory,
};

std::string_view to_string(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what);

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace lmr
