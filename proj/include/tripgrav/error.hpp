#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tripgrav {

enum class ErrorKind {
  validation,
  schema,
  parse,
  domain,
  io,
  coverage,
  imputation,
  singular_fit,
  undefined_metric,
  training,
  unsupported,
};

inline constexpr std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::validation: return "validation error";
    case ErrorKind::schema: return "schema error";
    case ErrorKind::parse: return "parse error";
    case ErrorKind::domain: return "domain error";
    case ErrorKind::io: return "io error";
    case ErrorKind::coverage: return "coverage error";
    case ErrorKind::imputation: return "imputation error";
    case ErrorKind::singular_fit: return "singular-fit error";
    case ErrorKind::undefined_metric: return "undefined-metric error";
    case ErrorKind::training: return "training error";
    case ErrorKind::unsupported: return "unsupported-model error";
  }
  return "error";
}

/// Library-wide exception. `what()` renders as "module: kind: detail" so the
/// CLI can forward it to stderr unchanged.
class Error : public std::runtime_error {
 public:
  Error(std::string module, ErrorKind kind, const std::string& detail)
      : std::runtime_error(module + ": " + std::string(to_string(kind)) + ": " + detail),
        module_(std::move(module)),
        kind_(kind) {}

  const std::string& module() const noexcept { return module_; }
  ErrorKind kind() const noexcept { return kind_; }

 private:
  std::string module_;
  ErrorKind kind_;
};

}  // namespace tripgrav
