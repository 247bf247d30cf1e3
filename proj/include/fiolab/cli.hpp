#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "fiolab/error.hpp"

namespace fiolab::cli {

/// Config value that violates the schema; `field` is the dotted path.
class ConfigError : public ValidationError {
 public:
  ConfigError(std::string field, const std::string& message)
      : ValidationError("config: " + (field.empty() ? std::string() : "field '" + field + "' ") + message),
        field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitCompute = 1;
inline constexpr int kExitValidation = 2;

const std::vector<std::string>& commands();

/// args excludes the program name. Reports go to the output path or to `out`;
/// errors go to `err` as one JSON object.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fiolab::cli
