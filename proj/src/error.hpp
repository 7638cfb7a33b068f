#pragma once

#include <stdexcept>
#include <string>

namespace scoopflow {

enum class ErrorCode {
  InvalidInput = 1,
  ParseError,
  DegenerateFeature,
  ShapeMismatch,
  DegenerateTransport,
  NumericalDivergence,
  IoError,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t offset, const std::string& what)
      : Error(ErrorCode::ParseError,
              what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset),
        detail_(what) {}

  std::size_t offset() const noexcept { return offset_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::size_t offset_;
  std::string detail_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace scoopflow
