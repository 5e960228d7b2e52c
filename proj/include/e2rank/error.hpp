#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace e2rank {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class ZeroNormError : public Error {
 public:
  using Error::Error;
};

// Binary checkpoint / index payload problems.
class BinaryFormatError : public Error {
 public:
  enum class Kind { BadMagic, BadVersion, Truncated, InvalidHeader, NonFinite, Empty, TrailingBytes };

  BinaryFormatError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

// Text formats (JSON-lines, TREC files, config files). line() is 1-based, 0 if unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : Error(source + (line ? ":" + std::to_string(line) : std::string()) + ": " + what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class EmbeddingSetError : public Error {
 public:
  enum class Kind { DimMismatch, DuplicateId, NonFinite, MissingId };

  EmbeddingSetError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

class PermutationError : public Error {
 public:
  enum class Kind { NoIndices, OutOfRange, Duplicate, Missing };

  PermutationError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

}  // namespace e2rank
