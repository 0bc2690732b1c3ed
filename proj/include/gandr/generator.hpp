#pragma once

// Text-in/text-out generation behind one interface. The model itself lives
// outside this library; Remote talks to it over HTTP, the other kinds are
// deterministic local stand-ins.

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "gandr/error.hpp"

namespace gandr {

enum class GenerationErrorKind { Timeout, RemoteError, Exhausted, ReplayMiss, LookupMiss };

std::string to_string(GenerationErrorKind kind);

struct GenerationFailure {
  GenerationErrorKind kind = GenerationErrorKind::RemoteError;
  int status = 0;  // HTTP status for RemoteError, 0 otherwise
  std::string message;
};

class GenerationError : public Error {
 public:
  explicit GenerationError(GenerationFailure failure)
      : Error(to_string(failure.kind) + ": " + failure.message), failure_(std::move(failure)) {}
  const GenerationFailure& failure() const { return failure_; }
  GenerationErrorKind kind() const { return failure_.kind; }

 private:
  GenerationFailure failure_;
};

struct GenerationOutcome {
  std::optional<std::string> output;
  std::optional<GenerationFailure> failure;
  std::chrono::microseconds latency{0};

  bool ok() const { return output.has_value(); }
};

// One outcome per input, in input order.
struct GenerationResponse {
  std::vector<GenerationOutcome> items;
};

class Generator {
 public:
  virtual ~Generator() = default;

  // Per-item failures are reported in the response, never thrown.
  virtual GenerationResponse generate(std::span<const std::string> inputs) = 0;

  // Human-readable endpoint description, echoed into run configs.
  virtual std::string describe() const = 0;

  // Outputs only; throws GenerationError for the first failed item.
  std::vector<std::string> generate_or_throw(std::span<const std::string> inputs);
};

class StaticGenerator final : public Generator {
 public:
  explicit StaticGenerator(std::string output) : output_(std::move(output)) {}
  GenerationResponse generate(std::span<const std::string> inputs) override;
  std::string describe() const override { return "static:" + output_; }

 private:
  std::string output_;
};

// Answers with the gold parse of the query that leads the augmented input
// (the text before the first " || ").
class OracleLookupGenerator final : public Generator {
 public:
  OracleLookupGenerator(std::unordered_map<std::string, std::string> gold_by_query,
                        std::string description = "oracle");
  GenerationResponse generate(std::span<const std::string> inputs) override;
  std::string describe() const override { return description_; }

 private:
  std::unordered_map<std::string, std::string> gold_by_query_;
  std::string description_;
};

// Byte-exact input -> output lookup from a JSONL log of
// {"input": ..., "output": ...} objects.
class ReplayGenerator final : public Generator {
 public:
  // Duplicate inputs with identical outputs are accepted; conflicting ones
  // throw CorruptFile. Missing file throws IoError.
  static std::shared_ptr<ReplayGenerator> from_log(const std::filesystem::path& path);

  explicit ReplayGenerator(std::unordered_map<std::string, std::string> table,
                           std::string description = "replay");
  GenerationResponse generate(std::span<const std::string> inputs) override;
  std::string describe() const override { return description_; }
  std::size_t size() const { return table_.size(); }

 private:
  std::unordered_map<std::string, std::string> table_;
  std::string description_;
};

struct RetryPolicy {
  std::size_t retries = 2;
  // Delay before retry i is backoff[min(i, size - 1)]; empty means no delay.
  std::vector<std::chrono::milliseconds> backoff{std::chrono::milliseconds(200),
                                                 std::chrono::milliseconds(1000)};
};

// HTTP POST of {"inputs": [...]} expecting {"outputs": [...]} back. Inputs
// are sent in chunks of at most max_batch; a failed chunk only fails its own
// items.
class RemoteGenerator final : public Generator {
 public:
  struct Options {
    std::string address;  // http://host:port/path
    std::chrono::milliseconds timeout{30000};
    std::size_t max_batch = 32;
    RetryPolicy retry;
    std::size_t max_in_flight = 4;
  };

  explicit RemoteGenerator(Options options);
  ~RemoteGenerator() override;
  GenerationResponse generate(std::span<const std::string> inputs) override;
  std::string describe() const override { return options_.address; }

 private:
  struct Target;
  void acquire();
  void release();

  Options options_;
  std::unique_ptr<Target> target_;
  std::mutex mutex_;
  std::condition_variable_any slot_free_;
  std::size_t in_flight_ = 0;
};

// Forwards to another generator and appends every successful pair to a
// replay log.
class RecordingGenerator final : public Generator {
 public:
  RecordingGenerator(std::shared_ptr<Generator> inner, const std::filesystem::path& log_path);
  GenerationResponse generate(std::span<const std::string> inputs) override;
  std::string describe() const override { return inner_->describe(); }

 private:
  std::shared_ptr<Generator> inner_;
  std::mutex mutex_;
  std::ofstream log_;
};

enum class EndpointKind { Remote, OracleLookup, Static, Replay };

struct GeneratorEndpoint {
  EndpointKind kind = EndpointKind::Static;
  // URL for Remote, dataset path for OracleLookup, log path for Replay,
  // output text for Static.
  std::string address;
  std::chrono::milliseconds timeout{30000};
  std::size_t max_batch = 32;
  RetryPolicy retry;
  std::size_t max_in_flight = 4;

  // Throws ConfigError.
  void validate() const;
};

// "http://..." | "static:<text>" | "oracle:<dataset>" | "replay:<log>".
GeneratorEndpoint parse_endpoint(const std::string& spec);
std::string describe(const GeneratorEndpoint& endpoint);

std::shared_ptr<Generator> make_generator(const GeneratorEndpoint& endpoint);

std::shared_ptr<ReplayGenerator> replay_log(const std::filesystem::path& path);

}  // namespace gandr
