#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "lund/prediction.hpp"

namespace lund::scorer {

inline constexpr std::string_view kProtocolVersion = "1.0";
inline constexpr double kSimplexTolerance = 1e-6;

struct Endpoint {
  std::string address;  // host:port, unix:/path or /path
  std::chrono::milliseconds timeout{5000};
  std::size_t max_in_flight = 1;
  std::string protocol_version{kProtocolVersion};
  std::size_t batch_size = 32;

  // Throws std::invalid_argument.
  void validate() const;
};

nlohmann::ordered_json to_json(const Endpoint& endpoint);
Endpoint endpoint_from_json(const nlohmann::json& j);

struct Capabilities {
  std::string model_name;
  std::string protocol_version;
  std::size_t max_batch = 0;
};

// Same major version, e.g. "1.0" and "1.3".
bool compatible_versions(std::string_view ours, std::string_view theirs);

// Message builders and validators. Validation failures throw
// Error(MalformedResponse) carrying the offending payload; a set error field
// throws Error(ScorerError).
std::string hello_request(std::string_view protocol_version);
std::string score_request(std::string_view request_id, std::span<const std::string> texts);
Capabilities parse_hello_response(std::string_view payload);
std::vector<PredictorOutput> parse_score_response(const nlohmann::json& response,
                                                  std::size_t n_texts);

// Client for one endpoint. Thread-safe: concurrent score_batch calls share a
// pool of at most max_in_flight connections, each with one request
// outstanding. A timed-out request is retried once on the same connection
// under a fresh id; the late answer to the abandoned id is dropped.
class ScorerClient {
 public:
  explicit ScorerClient(Endpoint endpoint);
  ~ScorerClient();
  ScorerClient(const ScorerClient&) = delete;
  ScorerClient& operator=(const ScorerClient&) = delete;

  // Throws Error(Unreachable | VersionIncompatible | Timeout | MalformedResponse).
  const Capabilities& handshake();
  bool handshaken() const { return caps_.has_value(); }
  const Endpoint& endpoint() const { return endpoint_; }

  // Splits into frames of min(batch_size, max_batch) texts. Throws
  // Error(Timeout | MalformedResponse | ScorerError | Unreachable).
  std::vector<PredictorOutput> score_batch(std::span<const std::string> texts);

  // Highest number of simultaneously unanswered requests seen so far.
  std::size_t peak_in_flight() const { return peak_in_flight_.load(); }
  std::size_t retries() const { return retries_.load(); }
  std::size_t discarded_responses() const { return discarded_.load(); }

 private:
  struct Connection;
  std::unique_ptr<Connection> acquire();
  void release(std::unique_ptr<Connection> connection, bool healthy);
  std::unique_ptr<Connection> open_connection();
  std::vector<PredictorOutput> score_frame(Connection& c, std::span<const std::string> texts);
  std::string next_request_id();

  Endpoint endpoint_;
  std::optional<Capabilities> caps_;
  std::mutex mu_;
  std::condition_variable available_;
  std::vector<std::unique_ptr<Connection>> idle_;
  std::size_t open_count_ = 0;
  std::atomic<std::uint64_t> next_id_{1};
  std::atomic<std::size_t> in_flight_{0};
  std::atomic<std::size_t> peak_in_flight_{0};
  std::atomic<std::size_t> retries_{0};
  std::atomic<std::size_t> discarded_{0};
};

struct ConformanceCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

// Server-side protocol checks any conforming scorer must pass: handshake,
// batch scoring with simplex and ordering, repeat-text determinism, empty
// batch, max_batch-sized batch, and error-field reporting for an unknown
// message type.
std::vector<ConformanceCheck> run_conformance(const Endpoint& endpoint);

}  // namespace lund::scorer
