#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace finece {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller passed something outside an operation's domain (k == 0, n <= 0, ...).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// Bad configuration: unknown question in a world, gold answer with no numeral.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Backend cannot provide what was asked (logprobs, entropy).
class UnsupportedCapability : public Error {
 public:
  using Error::Error;
};

class TransportError : public Error {
 public:
  TransportError(const std::string& what, int attempts)
      : Error(what), attempts_(attempts) {}
  int attempts() const noexcept { return attempts_; }

 private:
  int attempts_;
};

class DecodeError : public Error {
 public:
  DecodeError(const std::string& what, std::string excerpt)
      : Error(what), excerpt_(std::move(excerpt)) {}
  const std::string& excerpt() const noexcept { return excerpt_; }

 private:
  std::string excerpt_;
};

class TruncationInfeasible : public Error {
 public:
  using Error::Error;
};

class UndefinedMetric : public Error {
 public:
  using Error::Error;
};

}  // namespace finece
