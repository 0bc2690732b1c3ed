#include "gandr/generator.hpp"

#include <algorithm>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "gandr/augment.hpp"
#include "gandr/data_io.hpp"

namespace gandr {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

std::string to_string(GenerationErrorKind kind) {
  switch (kind) {
    case GenerationErrorKind::Timeout:
      return "timeout";
    case GenerationErrorKind::RemoteError:
      return "remote error";
    case GenerationErrorKind::Exhausted:
      return "retries exhausted";
    case GenerationErrorKind::ReplayMiss:
      return "replay miss";
    case GenerationErrorKind::LookupMiss:
      return "lookup miss";
  }
  return "unknown";
}

std::vector<std::string> Generator::generate_or_throw(std::span<const std::string> inputs) {
  auto response = generate(inputs);
  std::vector<std::string> outputs;
  outputs.reserve(response.items.size());
  for (auto& item : response.items) {
    if (!item.ok()) throw GenerationError(*item.failure);
    outputs.push_back(std::move(*item.output));
  }
  return outputs;
}

GenerationResponse StaticGenerator::generate(std::span<const std::string> inputs) {
  GenerationResponse response;
  response.items.resize(inputs.size());
  for (auto& item : response.items) item.output = output_;
  return response;
}

OracleLookupGenerator::OracleLookupGenerator(
    std::unordered_map<std::string, std::string> gold_by_query, std::string description)
    : gold_by_query_(std::move(gold_by_query)), description_(std::move(description)) {}

GenerationResponse OracleLookupGenerator::generate(std::span<const std::string> inputs) {
  GenerationResponse response;
  response.items.resize(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const std::string query(augmented_query(inputs[i]));
    auto it = gold_by_query_.find(query);
    if (it == gold_by_query_.end()) {
      response.items[i].failure =
          GenerationFailure{GenerationErrorKind::LookupMiss, 0, "no gold parse for '" + query + "'"};
    } else {
      response.items[i].output = it->second;
    }
  }
  return response;
}

ReplayGenerator::ReplayGenerator(std::unordered_map<std::string, std::string> table,
                                 std::string description)
    : table_(std::move(table)), description_(std::move(description)) {}

std::shared_ptr<ReplayGenerator> ReplayGenerator::from_log(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open replay log " + path.string());
  std::unordered_map<std::string, std::string> table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::string input;
    std::string output;
    try {
      const json row = json::parse(line);
      input = row.at("input").get<std::string>();
      output = row.at("output").get<std::string>();
    } catch (const json::exception& e) {
      throw CorruptFile("replay log " + path.string() + " line " + std::to_string(line_no) + ": " +
                        e.what());
    }
    auto [it, inserted] = table.try_emplace(std::move(input), output);
    if (!inserted && it->second != output) {
      throw CorruptFile("replay log " + path.string() + " line " + std::to_string(line_no) +
                        ": conflicting outputs for the same input");
    }
  }
  return std::make_shared<ReplayGenerator>(std::move(table), "replay:" + path.string());
}

GenerationResponse ReplayGenerator::generate(std::span<const std::string> inputs) {
  GenerationResponse response;
  response.items.resize(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    auto it = table_.find(inputs[i]);
    if (it == table_.end()) {
      response.items[i].failure =
          GenerationFailure{GenerationErrorKind::ReplayMiss, 0, "input not in replay log"};
    } else {
      response.items[i].output = it->second;
    }
  }
  return response;
}

std::shared_ptr<ReplayGenerator> replay_log(const std::filesystem::path& path) {
  return ReplayGenerator::from_log(path);
}

// Scheme+authority for the client and the request path.
struct RemoteGenerator::Target {
  std::string base;
  std::string path;
};

RemoteGenerator::RemoteGenerator(Options options)
    : options_(std::move(options)), target_(std::make_unique<Target>()) {
  const auto& url = options_.address;
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("remote address needs a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  target_->base = url.substr(0, path_start);
  target_->path = path_start == std::string::npos ? "/" : url.substr(path_start);
  if (options_.max_batch == 0) throw ConfigError("max_batch must be at least 1");
  if (options_.max_in_flight == 0) options_.max_in_flight = 1;
}

RemoteGenerator::~RemoteGenerator() = default;

void RemoteGenerator::acquire() {
  std::unique_lock lock(mutex_);
  slot_free_.wait(lock, [&] { return in_flight_ < options_.max_in_flight; });
  ++in_flight_;
}

void RemoteGenerator::release() {
  {
    std::lock_guard lock(mutex_);
    --in_flight_;
  }
  slot_free_.notify_one();
}

namespace {

struct Attempt {
  std::optional<std::vector<std::string>> outputs;
  GenerationFailure failure;
  bool retryable = false;
};

Attempt post_chunk(const std::string& base, const std::string& path,
                   std::chrono::milliseconds timeout, std::span<const std::string> chunk) {
  httplib::Client client(base);
  const auto sec = static_cast<time_t>(timeout.count() / 1000);
  const auto usec = static_cast<time_t>((timeout.count() % 1000) * 1000);
  client.set_connection_timeout(sec, usec);
  client.set_read_timeout(sec, usec);
  client.set_write_timeout(sec, usec);

  const json body = {{"inputs", std::vector<std::string>(chunk.begin(), chunk.end())}};
  auto res = client.Post(path, body.dump(), "application/json");

  Attempt attempt;
  if (!res) {
    const auto err = res.error();
    const bool timed_out = err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout;
    attempt.failure = {timed_out ? GenerationErrorKind::Timeout : GenerationErrorKind::RemoteError, 0,
                       httplib::to_string(err)};
    attempt.retryable = true;
    return attempt;
  }
  if (res->status != 200) {
    attempt.failure = {GenerationErrorKind::RemoteError, res->status,
                       "HTTP " + std::to_string(res->status)};
    attempt.retryable = res->status >= 500;
    return attempt;
  }
  try {
    const json reply = json::parse(res->body);
    auto outputs = reply.at("outputs").get<std::vector<std::string>>();
    if (outputs.size() != chunk.size()) {
      attempt.failure = {GenerationErrorKind::RemoteError, res->status,
                         "response has " + std::to_string(outputs.size()) + " outputs for " +
                             std::to_string(chunk.size()) + " inputs"};
      return attempt;
    }
    attempt.outputs = std::move(outputs);
  } catch (const json::exception& e) {
    attempt.failure = {GenerationErrorKind::RemoteError, res->status,
                       std::string("malformed response: ") + e.what()};
  }
  return attempt;
}

}  // namespace

GenerationResponse RemoteGenerator::generate(std::span<const std::string> inputs) {
  GenerationResponse response;
  response.items.resize(inputs.size());
  const auto& retry = options_.retry;
  for (std::size_t start = 0; start < inputs.size(); start += options_.max_batch) {
    const auto chunk = inputs.subspan(start, std::min(options_.max_batch, inputs.size() - start));
    const auto t0 = Clock::now();
    Attempt attempt;
    std::size_t attempts = 0;
    for (;;) {
      acquire();
      attempt = post_chunk(target_->base, target_->path, options_.timeout, chunk);
      release();
      ++attempts;
      if (attempt.outputs || !attempt.retryable || attempts > retry.retries) break;
      if (!retry.backoff.empty()) {
        std::this_thread::sleep_for(retry.backoff[std::min(attempts - 1, retry.backoff.size() - 1)]);
      }
    }
    const auto latency = std::chrono::duration_cast<std::chrono::microseconds>(Clock::now() - t0);
    for (std::size_t i = 0; i < chunk.size(); ++i) {
      auto& item = response.items[start + i];
      item.latency = latency;
      if (attempt.outputs) {
        item.output = std::move((*attempt.outputs)[i]);
      } else if (attempt.retryable && retry.retries > 0) {
        item.failure = GenerationFailure{
            GenerationErrorKind::Exhausted, attempt.failure.status,
            std::to_string(attempts) + " attempts, last: " + attempt.failure.message};
      } else {
        item.failure = attempt.failure;
      }
    }
  }
  return response;
}

RecordingGenerator::RecordingGenerator(std::shared_ptr<Generator> inner,
                                       const std::filesystem::path& log_path)
    : inner_(std::move(inner)), log_(log_path, std::ios::binary | std::ios::trunc) {
  if (!log_) throw IoError("cannot write replay log " + log_path.string());
}

GenerationResponse RecordingGenerator::generate(std::span<const std::string> inputs) {
  auto response = inner_->generate(inputs);
  std::lock_guard lock(mutex_);
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const auto& item = response.items[i];
    if (!item.ok()) continue;
    log_ << json{{"input", inputs[i]}, {"output", *item.output}}.dump() << '\n';
  }
  log_.flush();
  return response;
}

void GeneratorEndpoint::validate() const {
  if (kind == EndpointKind::Remote && address.empty()) throw ConfigError("remote endpoint needs an address");
  if ((kind == EndpointKind::Replay || kind == EndpointKind::OracleLookup) && address.empty()) {
    throw ConfigError("endpoint needs a file path");
  }
  if (max_batch == 0) throw ConfigError("max_batch must be at least 1");
}

GeneratorEndpoint parse_endpoint(const std::string& spec) {
  GeneratorEndpoint endpoint;
  auto starts = [&](std::string_view prefix) { return spec.rfind(prefix, 0) == 0; };
  if (starts("https://")) {
    throw ConfigError("https endpoints are not supported (built without TLS): " + spec);
  }
  if (starts("http://")) {
    endpoint.kind = EndpointKind::Remote;
    endpoint.address = spec;
  } else if (starts("static:")) {
    endpoint.kind = EndpointKind::Static;
    endpoint.address = spec.substr(7);
  } else if (starts("oracle:")) {
    endpoint.kind = EndpointKind::OracleLookup;
    endpoint.address = spec.substr(7);
  } else if (starts("replay:")) {
    endpoint.kind = EndpointKind::Replay;
    endpoint.address = spec.substr(7);
  } else {
    throw ConfigError("unrecognized endpoint '" + spec +
                      "' (expected http://..., static:, oracle: or replay:)");
  }
  endpoint.validate();
  return endpoint;
}

std::string describe(const GeneratorEndpoint& endpoint) {
  switch (endpoint.kind) {
    case EndpointKind::Remote:
      return endpoint.address;
    case EndpointKind::Static:
      return "static:" + endpoint.address;
    case EndpointKind::OracleLookup:
      return "oracle:" + endpoint.address;
    case EndpointKind::Replay:
      return "replay:" + endpoint.address;
  }
  return "";
}

std::shared_ptr<Generator> make_generator(const GeneratorEndpoint& endpoint) {
  endpoint.validate();
  switch (endpoint.kind) {
    case EndpointKind::Static:
      return std::make_shared<StaticGenerator>(endpoint.address);
    case EndpointKind::Replay:
      return ReplayGenerator::from_log(endpoint.address);
    case EndpointKind::OracleLookup: {
      DatasetSpec spec;
      spec.format = format_for(endpoint.address);
      std::unordered_map<std::string, std::string> table;
      for (auto& ex : load_file(endpoint.address, spec).exemplars) {
        table.try_emplace(std::move(ex.input), std::move(ex.output));
      }
      return std::make_shared<OracleLookupGenerator>(std::move(table), describe(endpoint));
    }
    case EndpointKind::Remote:
      return std::make_shared<RemoteGenerator>(RemoteGenerator::Options{
          endpoint.address, endpoint.timeout, endpoint.max_batch, endpoint.retry,
          endpoint.max_in_flight});
  }
  throw ConfigError("unknown endpoint kind");
}

}  // namespace gandr
