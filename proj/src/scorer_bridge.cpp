#include "lund/scorer_bridge.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include <spdlog/spdlog.h>

#include "lund/error.hpp"
#include "lund/util/socket.hpp"

namespace lund::scorer {

namespace {

constexpr std::size_t kPayloadExcerpt = 4096;

std::string excerpt(std::string_view payload) {
  return std::string(payload.substr(0, kPayloadExcerpt));
}

[[noreturn]] void malformed(const std::string& why, std::string_view payload) {
  throw Error(ErrorKind::MalformedResponse, why, excerpt(payload));
}

nlohmann::json parse_json(std::string_view payload) {
  try {
    auto j = nlohmann::json::parse(payload);
    if (!j.is_object()) malformed("response is not a JSON object", payload);
    return j;
  } catch (const nlohmann::json::exception& e) {
    malformed(std::string("response is not valid JSON: ") + e.what(), payload);
  }
}

int major_of(std::string_view version) {
  const auto dot = version.find('.');
  const std::string_view head = version.substr(0, dot);
  if (head.empty() || !std::all_of(head.begin(), head.end(), [](char c) { return c >= '0' && c <= '9'; }))
    return -1;
  return std::stoi(std::string(head));
}

}  // namespace

void Endpoint::validate() const {
  if (address.empty()) throw std::invalid_argument("scorer endpoint address is empty");
  if (timeout.count() <= 0) throw std::invalid_argument("scorer timeout must be positive");
  if (max_in_flight < 1) throw std::invalid_argument("max_in_flight must be at least 1");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be at least 1");
  if (major_of(protocol_version) < 0)
    throw std::invalid_argument("bad protocol version: " + protocol_version);
  net::parse_address(address);
}

nlohmann::ordered_json to_json(const Endpoint& e) {
  nlohmann::ordered_json j;
  j["address"] = e.address;
  j["timeout_ms"] = e.timeout.count();
  j["max_in_flight"] = e.max_in_flight;
  j["protocol_version"] = e.protocol_version;
  j["batch_size"] = e.batch_size;
  return j;
}

Endpoint endpoint_from_json(const nlohmann::json& j) {
  Endpoint e;
  e.address = j.at("address").get<std::string>();
  e.timeout = std::chrono::milliseconds(j.value("timeout_ms", e.timeout.count()));
  e.max_in_flight = j.value("max_in_flight", e.max_in_flight);
  e.protocol_version = j.value("protocol_version", e.protocol_version);
  e.batch_size = j.value("batch_size", e.batch_size);
  e.validate();
  return e;
}

bool compatible_versions(std::string_view ours, std::string_view theirs) {
  const int a = major_of(ours);
  return a >= 0 && a == major_of(theirs);
}

std::string hello_request(std::string_view protocol_version) {
  nlohmann::ordered_json j;
  j["type"] = "hello";
  j["protocol_version"] = std::string(protocol_version);
  return j.dump();
}

std::string score_request(std::string_view request_id, std::span<const std::string> texts) {
  nlohmann::ordered_json j;
  j["type"] = "score";
  j["request_id"] = std::string(request_id);
  j["texts"] = nlohmann::ordered_json::array();
  for (const auto& t : texts) j["texts"].push_back(t);
  return j.dump();
}

Capabilities parse_hello_response(std::string_view payload) {
  const auto j = parse_json(payload);
  if (j.contains("error") && !j["error"].is_null())
    throw Error(ErrorKind::ScorerError, j["error"].is_string() ? j["error"].get<std::string>()
                                                               : j["error"].dump(),
                excerpt(payload));
  Capabilities caps;
  if (!j.contains("model_name") || !j["model_name"].is_string())
    malformed("hello response lacks model_name", payload);
  if (!j.contains("protocol_version") || !j["protocol_version"].is_string())
    malformed("hello response lacks protocol_version", payload);
  if (!j.contains("max_batch") || !j["max_batch"].is_number_unsigned() ||
      j["max_batch"].get<std::size_t>() == 0)
    malformed("hello response lacks a positive max_batch", payload);
  caps.model_name = j["model_name"].get<std::string>();
  caps.protocol_version = j["protocol_version"].get<std::string>();
  caps.max_batch = j["max_batch"].get<std::size_t>();
  return caps;
}

std::vector<PredictorOutput> parse_score_response(const nlohmann::json& response,
                                                  std::size_t n_texts) {
  const auto payload = [&] { return response.dump(); };
  if (response.contains("error") && !response["error"].is_null())
    throw Error(ErrorKind::ScorerError,
                response["error"].is_string() ? response["error"].get<std::string>()
                                              : response["error"].dump(),
                excerpt(payload()));
  if (!response.contains("scores") || !response["scores"].is_array())
    malformed("score response lacks a scores array", payload());
  const auto& scores = response["scores"];
  if (scores.size() != n_texts)
    malformed("score response has " + std::to_string(scores.size()) + " scores for " +
                  std::to_string(n_texts) + " texts",
              payload());
  std::vector<PredictorOutput> out;
  out.reserve(n_texts);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const auto& s = scores[i];
    if (!s.is_object() || !s.contains("legit") || !s.contains("fake") ||
        !s["legit"].is_number() || !s["fake"].is_number())
      malformed("score " + std::to_string(i) + " lacks numeric legit/fake", payload());
    const double legit = s["legit"].get<double>();
    const double fake = s["fake"].get<double>();
    if (!std::isfinite(legit) || !std::isfinite(fake) || legit < 0 || fake < 0 || legit > 1 ||
        fake > 1 || std::abs(legit + fake - 1.0) > kSimplexTolerance)
      malformed("score " + std::to_string(i) + " is not a probability pair", payload());
    out.push_back(PredictorOutput::from_probs(legit, fake));
  }
  return out;
}

struct ScorerClient::Connection {
  net::Socket socket;
  net::FrameReader reader;
  std::set<std::string> abandoned;
};

ScorerClient::ScorerClient(Endpoint endpoint) : endpoint_(std::move(endpoint)) {
  endpoint_.validate();
}

ScorerClient::~ScorerClient() = default;

std::string ScorerClient::next_request_id() { return "r" + std::to_string(next_id_++); }

std::unique_ptr<ScorerClient::Connection> ScorerClient::open_connection() {
  auto c = std::make_unique<Connection>();
  c->socket = net::connect_to(net::parse_address(endpoint_.address), endpoint_.timeout);
  return c;
}

std::unique_ptr<ScorerClient::Connection> ScorerClient::acquire() {
  std::unique_lock lock(mu_);
  available_.wait(lock, [&] { return !idle_.empty() || open_count_ < endpoint_.max_in_flight; });
  if (!idle_.empty()) {
    auto c = std::move(idle_.back());
    idle_.pop_back();
    return c;
  }
  ++open_count_;
  lock.unlock();
  try {
    return open_connection();
  } catch (...) {
    lock.lock();
    --open_count_;
    available_.notify_one();
    throw;
  }
}

void ScorerClient::release(std::unique_ptr<Connection> c, bool healthy) {
  std::lock_guard lock(mu_);
  if (healthy)
    idle_.push_back(std::move(c));
  else
    --open_count_;
  available_.notify_one();
}

const Capabilities& ScorerClient::handshake() {
  auto c = acquire();
  try {
    const auto deadline = net::Clock::now() + endpoint_.timeout;
    if (!net::write_all(c->socket.fd(), net::encode_frame(hello_request(endpoint_.protocol_version)),
                        deadline))
      throw Error(ErrorKind::Timeout, "hello not sent within timeout", endpoint_.address);
    const auto reply = c->reader.read(c->socket.fd(), deadline);
    if (!reply) throw Error(ErrorKind::Timeout, "no hello response within timeout", endpoint_.address);
    Capabilities caps = parse_hello_response(*reply);
    if (!compatible_versions(endpoint_.protocol_version, caps.protocol_version))
      throw Error(ErrorKind::VersionIncompatible,
                  "scorer speaks protocol " + caps.protocol_version + ", client " +
                      endpoint_.protocol_version,
                  caps.protocol_version);
    {
      std::lock_guard lock(mu_);
      caps_ = std::move(caps);
    }
    release(std::move(c), true);
  } catch (...) {
    release(std::move(c), false);
    throw;
  }
  return *caps_;
}

std::vector<PredictorOutput> ScorerClient::score_frame(Connection& c,
                                                       std::span<const std::string> texts) {
  std::string id = next_request_id();
  for (int attempt = 0; attempt < 2; ++attempt) {
    const auto deadline = net::Clock::now() + endpoint_.timeout;
    const std::size_t now_in_flight = ++in_flight_;
    std::size_t peak = peak_in_flight_.load();
    while (now_in_flight > peak && !peak_in_flight_.compare_exchange_weak(peak, now_in_flight)) {
    }
    struct InFlight {
      std::atomic<std::size_t>& n;
      ~InFlight() { --n; }
    } guard{in_flight_};

    bool timed_out = !net::write_all(c.socket.fd(), net::encode_frame(score_request(id, texts)), deadline);
    while (!timed_out) {
      const auto reply = c.reader.read(c.socket.fd(), deadline);
      if (!reply) {
        timed_out = true;
        break;
      }
      const auto j = parse_json(*reply);
      if (!j.contains("request_id") || !j["request_id"].is_string())
        malformed("score response lacks request_id", *reply);
      const std::string rid = j["request_id"].get<std::string>();
      if (c.abandoned.erase(rid) > 0) {
        ++discarded_;
        spdlog::debug("scorer {}: dropped late response to {}", endpoint_.address, rid);
        continue;
      }
      if (rid != id) malformed("response id " + rid + " does not match request " + id, *reply);
      return parse_score_response(j, texts.size());
    }
    c.abandoned.insert(id);
    if (attempt == 0) {
      ++retries_;
      const std::string old = id;
      id = next_request_id();
      spdlog::warn("scorer {}: request {} timed out, retrying as {}", endpoint_.address, old, id);
    }
  }
  throw Error(ErrorKind::Timeout,
              "no response within " + std::to_string(endpoint_.timeout.count()) + " ms after retry",
              endpoint_.address);
}

std::vector<PredictorOutput> ScorerClient::score_batch(std::span<const std::string> texts) {
  if (!caps_) handshake();
  std::vector<PredictorOutput> out;
  out.reserve(texts.size());
  const std::size_t step = std::max<std::size_t>(1, std::min(endpoint_.batch_size, caps_->max_batch));
  for (std::size_t start = 0; start < texts.size(); start += step) {
    const auto chunk = texts.subspan(start, std::min(step, texts.size() - start));
    auto c = acquire();
    std::vector<PredictorOutput> part;
    try {
      part = score_frame(*c, chunk);
    } catch (const Error& e) {
      // A scorer-reported error leaves the stream in sync; anything else
      // may not.
      release(std::move(c), e.kind() == ErrorKind::ScorerError);
      throw;
    } catch (...) {
      release(std::move(c), false);
      throw;
    }
    release(std::move(c), true);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

namespace {

// One raw connection for checks that need to send arbitrary frames.
struct RawPeer {
  net::Socket socket;
  net::FrameReader reader;
  std::chrono::milliseconds timeout;

  nlohmann::json exchange(const std::string& payload) {
    const auto deadline = net::Clock::now() + timeout;
    if (!net::write_all(socket.fd(), net::encode_frame(payload), deadline))
      throw Error(ErrorKind::Timeout, "send timed out");
    const auto reply = reader.read(socket.fd(), deadline);
    if (!reply) throw Error(ErrorKind::Timeout, "no reply within timeout");
    return parse_json(*reply);
  }
};

}  // namespace

std::vector<ConformanceCheck> run_conformance(const Endpoint& endpoint) {
  std::vector<ConformanceCheck> checks;
  auto check = [&](const std::string& name, auto&& body) {
    ConformanceCheck c{name, false, ""};
    try {
      c.detail = body();
      c.passed = true;
    } catch (const std::exception& e) {
      c.detail = e.what();
    }
    checks.push_back(std::move(c));
    return checks.back().passed;
  };

  ScorerClient client(endpoint);
  Capabilities caps;
  if (!check("handshake", [&] {
        caps = client.handshake();
        if (caps.model_name.empty()) throw std::runtime_error("empty model_name");
        return caps.model_name + " protocol " + caps.protocol_version + " max_batch " +
               std::to_string(caps.max_batch);
      }))
    return checks;

  const std::vector<std::string> sample{"خبر ایک", "دوسری خبر یہاں", "تیسری بات"};
  check("batch_scoring", [&] {
    const auto out = client.score_batch(sample);
    if (out.size() != sample.size()) throw std::runtime_error("wrong number of scores");
    return std::to_string(out.size()) + " scores on the simplex";
  });
  check("index_alignment", [&] {
    const std::vector<std::string> ab{sample[0], sample[1]};
    const std::vector<std::string> ba{sample[1], sample[0]};
    const auto x = client.score_batch(ab);
    const auto y = client.score_batch(ba);
    for (int i = 0; i < 2; ++i)
      if (std::abs(x[i].prob(Label::Fake) - y[1 - i].prob(Label::Fake)) > kSimplexTolerance)
        throw std::runtime_error("scores depend on position within the batch");
    return std::string("reordered batch yields reordered scores");
  });
  check("repeat_determinism", [&] {
    const std::vector<std::string> twice{sample[2], sample[2]};
    const auto out = client.score_batch(twice);
    if (out[0].probs != out[1].probs) throw std::runtime_error("identical texts scored differently");
    return std::string("identical texts scored identically");
  });
  check("max_batch", [&] {
    const std::size_t n = std::min<std::size_t>(caps.max_batch, 256);
    std::vector<std::string> texts;
    for (std::size_t i = 0; i < n; ++i) texts.push_back(sample[i % sample.size()] + " " + std::to_string(i));
    const auto out = client.score_batch(texts);
    if (out.size() != n) throw std::runtime_error("wrong number of scores");
    return std::to_string(n) + " texts in one call";
  });

  RawPeer raw{net::connect_to(net::parse_address(endpoint.address), endpoint.timeout), {},
              endpoint.timeout};
  check("request_id_echo", [&] {
    const std::string payload = score_request("conformance-echo", std::span(sample).first(1));
    const auto j = raw.exchange(payload);
    if (j.value("request_id", std::string()) != "conformance-echo")
      throw std::runtime_error("request_id not echoed: " + j.dump());
    parse_score_response(j, 1);
    return std::string("request_id echoed");
  });
  check("empty_batch", [&] {
    const auto j = raw.exchange(score_request("conformance-empty", {}));
    if (j.value("request_id", std::string()) != "conformance-empty")
      throw std::runtime_error("request_id not echoed: " + j.dump());
    parse_score_response(j, 0);
    return std::string("empty batch yields empty scores");
  });
  check("unknown_type_reports_error", [&] {
    const auto j = raw.exchange(R"({"type":"conformance-unknown","request_id":"conformance-bad"})");
    if (!j.contains("error") || j["error"].is_null())
      throw std::runtime_error("unknown type answered without error field: " + j.dump());
    const auto again = raw.exchange(hello_request(endpoint.protocol_version));
    parse_hello_response(again.dump());
    return std::string("error field set and connection kept open");
  });
  return checks;
}

}  // namespace lund::scorer
