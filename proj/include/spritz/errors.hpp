// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
#pragma once

#include <stdexcept>
#include <string>

namespace spritz {

class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class InvalidParameter : public Error {
  public:
    using Error::Error;
};

class Unreachable : public Error {
  public:
    using Error::Error;
};

class DisconnectedAfterFailure : public Error {
  public:
    using Error::Error;
};

class NoViablePath : public Error {
  public:
    using Error::Error;
};

class EmptySamples : public Error {
  public:
    using Error::Error;
};

class InfeasibleMatching : public Error {
  public:
    using Error::Error;
};

class InvalidParticipants : public Error {
  public:
    using Error::Error;
};

// Raised for malformed or inconsistent experiment configuration; `field` names the offending key path.
class ConfigError : public Error {
  public:
    ConfigError(std::string field, const std::string &msg)
        : Error(field + ": " + msg), field_(std::move(field)) {}
    const std::string &field() const { return field_; }

  private:
    std::string field_;
};

} // namespace spritz
