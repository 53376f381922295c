#pragma once

#include <stdexcept>
#include <string>

namespace ncelab {

/// Failure classes map one-to-one onto CLI exit codes so that scripted
/// callers can distinguish "the data violates the smallness hypotheses"
/// from "the solver stalled" without parsing messages.
enum class ErrorClass {
  internal = 1,     // unexpected condition, defect or environment problem
  config = 2,       // bad config file, bad field file, invalid argument
  hypothesis = 3,   // structural hypothesis check failed (coercivity, smallness)
  geometry = 4,     // no mountain-pass geometry found (degenerate instance)
  solver = 5,       // iteration failed to converge / line search exhausted
  certificate = 6,  // a computed solution violates its a-posteriori certificate
};

class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, const std::string& msg) : std::runtime_error(msg), cls_(cls) {}
  ErrorClass cls() const { return cls_; }

 private:
  ErrorClass cls_;
};

inline Error internal_error(const std::string& m) { return Error(ErrorClass::internal, m); }
inline Error config_error(const std::string& m) { return Error(ErrorClass::config, m); }
inline Error hypothesis_error(const std::string& m) { return Error(ErrorClass::hypothesis, m); }
inline Error geometry_error(const std::string& m) { return Error(ErrorClass::geometry, m); }
inline Error solver_error(const std::string& m) { return Error(ErrorClass::solver, m); }
inline Error certificate_error(const std::string& m) { return Error(ErrorClass::certificate, m); }

inline int exit_code(ErrorClass c) { return static_cast<int>(c); }

inline const char* class_name(ErrorClass c) {
  switch (c) {
    case ErrorClass::internal: return "internal";
    case ErrorClass::config: return "config";
    case ErrorClass::hypothesis: return "hypothesis";
    case ErrorClass::geometry: return "geometry";
    case ErrorClass::solver: return "solver";
    case ErrorClass::certificate: return "certificate";
  }
  return "unknown";
}

}  // namespace ncelab
