#include "lmr/error.hpp"

namespace lmr {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::missing_file: return "missing_file";
    case Errc::malformed_metadata: return "malformed_metadata";
    case Errc::disconnected_free_space: return "disconnected_free_space";
    case Errc::start_in_wall: return "start_in_wall";
    case Errc::origin_in_wall: return "origin_in_wall";
    case Errc::self_intersecting: return "self_intersecting";
    case Errc::width_too_small: return "width_too_small";
    case Errc::invalid_argument: return "invalid_argument";
    case Errc::degenerate_line: return "degenerate_line";
    case Errc::extraction_failure: return "extraction_failure";
    case Errc::infeasible: return "infeasible";
    case Errc::solver_failure: return "solver_failure";
    case Errc::io_error: return "io_error";
    case Errc::empty_trajectory: return "empty_trajectory";
  }
  return "unknown";
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

}  // namespace lmr
