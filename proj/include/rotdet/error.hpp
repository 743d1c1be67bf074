// Copyright 2026 The rotdet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rotdet {

// Base of every error thrown by the library. Callers that only care about
// "bad input vs. bug" can catch this and std::logic_error separately.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A box, mask, threshold or other argument violates its documented invariant.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Input geometry has zero area (collinear quad, zero-size box).
class DegenerateInput : public Error {
 public:
  using Error::Error;
};

// A numeric result would leave the representable range (e.g. exp overflow).
class OutOfRange : public Error {
 public:
  using Error::Error;
};

// Malformed text input. Carries the offending file and 1-based line number.
class ParseError : public Error {
 public:
  ParseError(std::string file, std::size_t line, const std::string& what)
      : Error(file + ":" + std::to_string(line) + ": " + what),
        file_(std::move(file)),
        line_(line) {}

  const std::string& file() const noexcept { return file_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string file_;
  std::size_t line_;
};

// Missing or unreadable file.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace rotdet
