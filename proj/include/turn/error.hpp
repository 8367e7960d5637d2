#pragma once

#include <stdexcept>
#include <string>

namespace turn {

struct SourceLoc {
  int line = 0;
  int column = 0;

  bool operator==(const SourceLoc&) const = default;
};

std::string to_string(SourceLoc loc);

// Base of every error the toolchain raises. `kind()` is the stable class name
// ("ParseError", "CapabilityError", ...) surfaced to Turn programs and the CLI.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, std::string message)
      : std::runtime_error(kind + ": " + message), kind_(std::move(kind)), message_(std::move(message)) {}

  const std::string& kind() const noexcept { return kind_; }
  const std::string& message() const noexcept { return message_; }

 private:
  std::string kind_;
  std::string message_;
};

// Lexing, parsing, schema expansion and analysis failures. Always carry the
// location of the offending source construct.
class CompileError : public Error {
 public:
  CompileError(std::string kind, SourceLoc loc, std::string message)
      : Error(std::move(kind), std::move(message)), loc_(loc) {}

  SourceLoc loc() const noexcept { return loc_; }

 private:
  SourceLoc loc_;
};

class LexError : public CompileError {
 public:
  LexError(SourceLoc loc, std::string message) : CompileError("LexError", loc, std::move(message)) {}
};

class ParseError : public CompileError {
 public:
  ParseError(SourceLoc loc, std::string expected, std::string found)
      : CompileError("ParseError", loc, "expected " + expected + ", found " + found),
        expected_(std::move(expected)),
        found_(std::move(found)) {}

  const std::string& expected() const noexcept { return expected_; }
  const std::string& found() const noexcept { return found_; }

 private:
  std::string expected_;
  std::string found_;
};

class AnalysisError : public CompileError {
 public:
  AnalysisError(SourceLoc loc, std::string message) : CompileError("AnalysisError", loc, std::move(message)) {}
};

}  // namespace turn
