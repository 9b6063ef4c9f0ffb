#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ellidyn {

// Base for every error raised by the library. Each subclass names one
// failure mode so callers can flag a curve without parsing messages.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line_no, std::string reason)
      : Error("line " + std::to_string(line_no) + ": " + reason),
        line_no_(line_no),
        reason_(std::move(reason)) {}

  std::size_t line_no() const noexcept { return line_no_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  std::size_t line_no_;
  std::string reason_;
};

class SampleError : public Error {
 public:
  using Error::Error;
};

class BadReduction : public Error {
 public:
  explicit BadReduction(long p)
      : Error("bad reduction at p=" + std::to_string(p)), p_(p) {}
  long prime() const noexcept { return p_; }

 private:
  long p_;
};

class GoodReduction : public Error {
 public:
  explicit GoodReduction(long p)
      : Error("good reduction at p=" + std::to_string(p)), p_(p) {}
  long prime() const noexcept { return p_; }

 private:
  long p_;
};

class NotSemistable : public Error {
 public:
  using Error::Error;
};

class CoefficientOverflow : public Error {
 public:
  using Error::Error;
};

class CacheCorrupt : public Error {
 public:
  explicit CacheCorrupt(std::string path)
      : Error("corrupt coefficient cache: " + path), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

class InsufficientDecay : public Error {
 public:
  using Error::Error;
};

class InsufficientSurvivors : public Error {
 public:
  using Error::Error;
};

class Saturated : public Error {
 public:
  using Error::Error;
};

class BranchOverflow : public Error {
 public:
  using Error::Error;
};

class DegenerateInput : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace ellidyn
