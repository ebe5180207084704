#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace jsat {

/// Error with a stable machine-readable category, used verbatim by the CLI
/// for the single-line stderr report and exit-code mapping.
class Error : public std::runtime_error {
 public:
  Error(std::string category, const std::string& message)
      : std::runtime_error(category + ": " + message), category_(std::move(category)) {}

  const std::string& category() const noexcept { return category_; }

 private:
  std::string category_;
};

inline Error parse_error(const std::string& msg) { return {"ParseError", msg}; }
inline Error validation_error(const std::string& msg) { return {"ValidationError", msg}; }
inline Error unknown_key(const std::string& msg) { return {"UnknownKey", msg}; }
inline Error io_error(const std::string& msg) { return {"IoError", msg}; }
inline Error degenerate_grid(const std::string& msg) { return {"DegenerateGrid", msg}; }
inline Error zero_amplitude(const std::string& msg) { return {"ZeroAmplitude", msg}; }
inline Error off_grid_seed(const std::string& msg) { return {"OffGridSeed", msg}; }
inline Error trace_too_short(const std::string& msg) { return {"TraceTooShort", msg}; }
inline Error grid_mismatch(const std::string& msg) { return {"GridMismatch", msg}; }
inline Error no_stationary_region(const std::string& msg) { return {"NoStationaryRegion", msg}; }
inline Error stripe_outside_support(const std::string& msg) { return {"StripeOutsideSupport", msg}; }

}  // namespace jsat
