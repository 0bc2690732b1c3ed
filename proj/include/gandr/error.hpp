#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gandr {

// Base of every error this library throws. Callers that only need to report
// can catch this; each subclass names one failure mode.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MalformedParse : public Error {
 public:
  MalformedParse(const std::string& what, std::size_t offset)
      : Error(what + " (at offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

class EmptyCorpus : public Error {
 public:
  EmptyCorpus() : Error("empty corpus") {}
};

class DuplicateId : public Error {
 public:
  explicit DuplicateId(long long id)
      : Error("duplicate exemplar id " + std::to_string(id)), id_(id) {}
  long long id() const { return id_; }

 private:
  long long id_;
};

// An exemplar refused by the store (malformed gold parse or separator clash).
class RejectedExemplar : public Error {
 public:
  RejectedExemplar(long long id, const std::string& why)
      : Error("exemplar " + std::to_string(id) + " rejected: " + why), id_(id) {}
  long long id() const { return id_; }

 private:
  long long id_;
};

class MissingPrediction : public Error {
 public:
  MissingPrediction() : Error("alpha > 0 requires a query prediction") {}
};

class StoreTooSmall : public Error {
 public:
  StoreTooSmall(std::size_t have, std::size_t need)
      : Error("store has " + std::to_string(have) + " candidates, need " +
              std::to_string(need)) {}
};

class QueryExceedsBudget : public Error {
 public:
  QueryExceedsBudget(std::size_t tokens, std::size_t budget)
      : Error("query alone has " + std::to_string(tokens) +
              " tokens, budget is " + std::to_string(budget)) {}
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

enum class RowErrorKind { MalformedRow, SeparatorCollision };

class RowError : public Error {
 public:
  RowError(RowErrorKind kind, std::size_t line, const std::string& why)
      : Error(std::string(kind == RowErrorKind::MalformedRow
                              ? "malformed row"
                              : "separator collision") +
              " at line " + std::to_string(line) + ": " + why),
        kind_(kind),
        line_(line) {}
  RowErrorKind kind() const { return kind_; }
  std::size_t line() const { return line_; }

 private:
  RowErrorKind kind_;
  std::size_t line_;
};

class CountExceedsCorpus : public Error {
 public:
  CountExceedsCorpus(std::size_t n, std::size_t size)
      : Error("requested " + std::to_string(n) + " of " + std::to_string(size) +
              " exemplars") {}
};

class VersionMismatch : public Error {
 public:
  using Error::Error;
};

class CorruptFile : public Error {
 public:
  using Error::Error;
};

class MissingGold : public Error {
 public:
  explicit MissingGold(long long sample_id)
      : Error("record " + std::to_string(sample_id) + " has no gold parse") {}
};

class NotFound : public Error {
 public:
  using Error::Error;
};

}  // namespace gandr
