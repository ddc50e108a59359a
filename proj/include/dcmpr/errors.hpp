#pragma once

#include <stdexcept>
#include <string>

namespace dcmpr {

/// Base of every error the library throws. `name()` is the stable error
/// identifier printed by the command-line tool.
class Error : public std::runtime_error {
 public:
  Error(std::string name, const std::string& message)
      : std::runtime_error(message), name_(std::move(name)) {}

  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

/// A parameter or configuration value is out of its domain. `field()` names
/// the offending field.
class InvalidParameter : public Error {
 public:
  InvalidParameter(std::string field, const std::string& message)
      : Error("InvalidParameter", field + ": " + message), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

#define DCMPR_DEFINE_ERROR(Type)                                             \
  class Type : public Error {                                                \
   public:                                                                   \
    explicit Type(const std::string& message) : Error(#Type, message) {}     \
  }

DCMPR_DEFINE_ERROR(DegreeMismatch);
DCMPR_DEFINE_ERROR(DimensionMismatch);
DCMPR_DEFINE_ERROR(ResampleLimitExceeded);
DCMPR_DEFINE_ERROR(NoRoot);
DCMPR_DEFINE_ERROR(EmptyGraph);
DCMPR_DEFINE_ERROR(DepthExceeded);
DCMPR_DEFINE_ERROR(TooLarge);
DCMPR_DEFINE_ERROR(IoError);

#undef DCMPR_DEFINE_ERROR

}  // namespace dcmpr
