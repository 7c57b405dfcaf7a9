#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace forge {

/// Root of every error raised by the engine. `kind()` is a stable short tag
/// used by the CLI for exit-code mapping and by the Python layer.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define FORGE_DEFINE_ERROR(Name)                                           \
  class Name : public Error {                                              \
   public:                                                                 \
    explicit Name(const std::string& what) : Error(#Name, what) {}         \
  }

// Data model
FORGE_DEFINE_ERROR(UnknownField);
FORGE_DEFINE_ERROR(FieldTypeError);
FORGE_DEFINE_ERROR(SchemaError);
FORGE_DEFINE_ERROR(IoError);
// Operators and registry
FORGE_DEFINE_ERROR(DuplicateName);
FORGE_DEFINE_ERROR(ConflictingStatKey);
FORGE_DEFINE_ERROR(MissingStat);
FORGE_DEFINE_ERROR(ParamError);
// Recipes
FORGE_DEFINE_ERROR(UnknownOp);
FORGE_DEFINE_ERROR(TypeMismatch);
// State
FORGE_DEFINE_ERROR(CorruptCache);
FORGE_DEFINE_ERROR(UnknownCodecTag);
FORGE_DEFINE_ERROR(DiskFull);
// Execution
FORGE_DEFINE_ERROR(WorkerPanic);
// Quality / sampling
FORGE_DEFINE_ERROR(Degenerate);
FORGE_DEFINE_ERROR(UnknownDimension);

#undef FORGE_DEFINE_ERROR

/// Configuration text could not be parsed. Line and column are 1-based;
/// zero means the position is unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0, std::size_t column = 0)
      : Error("ParseError", format(what, line, column)), line_(line), column_(column) {}
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  static std::string format(const std::string& what, std::size_t line, std::size_t column) {
    if (line == 0) return what;
    return "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what;
  }
  std::size_t line_;
  std::size_t column_;
};

}  // namespace forge
