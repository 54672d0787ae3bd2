#pragma once

#include <stdexcept>
#include <string>

namespace casa {

// Error conditions surfaced by the library. The CLI maps these onto exit
// codes: io_error -> 3, everything else -> 2 (data error).
enum class errc {
  no_tissue,
  degenerate_stains,
  singular_system,
  dimension_mismatch,
  invalid_beta,
  empty_input,
  empty_map,
  degenerate_mean,
  null_column,
  antipodal,
  invalid_config,
  empty_group,
  io_error,
};

inline const char* errc_name(errc code) {
  switch (code) {
    case errc::no_tissue: return "NoTissue";
    case errc::degenerate_stains: return "DegenerateStains";
    case errc::singular_system: return "SingularSystem";
    case errc::dimension_mismatch: return "DimensionMismatch";
    case errc::invalid_beta: return "InvalidBeta";
    case errc::empty_input: return "EmptyInput";
    case errc::empty_map: return "EmptyMap";
    case errc::degenerate_mean: return "DegenerateMean";
    case errc::null_column: return "NullColumn";
    case errc::antipodal: return "Antipodal";
    case errc::invalid_config: return "InvalidConfig";
    case errc::empty_group: return "EmptyGroup";
    case errc::io_error: return "IoError";
  }
  return "Unknown";
}

class CasaError : public std::runtime_error {
 public:
  CasaError(errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message),
        code_(code) {}

  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

[[noreturn]] inline void raise(errc code, const std::string& message) {
  throw CasaError(code, message);
}

}  // namespace casa
