#include "lund/mock_scorer.hpp"

#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cstring>

#include "json.hpp"
#include "lund/error.hpp"
#include "lund/util/hashing.hpp"

namespace lund::mock {

namespace {

std::pair<double, double> score_text(const Behaviour& b, const std::string& text) {
  if (b.fixed) return *b.fixed;
  if (!b.fake_keywords.empty()) {
    const bool hit = std::any_of(b.fake_keywords.begin(), b.fake_keywords.end(),
                                 [&](const std::string& k) { return text.find(k) != std::string::npos; });
    return hit ? std::pair{0.2, 0.8} : std::pair{0.8, 0.2};
  }
  const double fake = static_cast<double>(fnv1a(text) % 1001) / 1000.0;
  return {1.0 - fake, fake};
}

bool batch_contains(const nlohmann::json& texts, const std::string& needle) {
  if (needle.empty()) return true;
  for (const auto& t : texts)
    if (t.is_string() && t.get<std::string>().find(needle) != std::string::npos) return true;
  return false;
}

}  // namespace

MockScorer::MockScorer(Behaviour behaviour, std::uint16_t port)
    : behaviour_(std::move(behaviour)) {
  listener_ = net::listen_tcp("127.0.0.1", port, &port_);
  acceptor_ = std::thread([this] { accept_loop(); });
}

MockScorer::~MockScorer() { stop(); }

void MockScorer::stop() {
  if (stopping_.exchange(true)) return;
  listener_.shutdown();
  if (acceptor_.joinable()) acceptor_.join();
  std::vector<std::thread> workers;
  {
    std::lock_guard lock(mu_);
    for (int fd : client_fds_) ::shutdown(fd, SHUT_RDWR);
    workers.swap(workers_);
  }
  for (auto& w : workers) w.join();
  listener_.close();
}

void MockScorer::accept_loop() {
  while (!stopping_) {
    pollfd p{listener_.fd(), POLLIN, 0};
    const int rc = ::poll(&p, 1, 100);
    if (rc <= 0) continue;
    const int fd = ::accept4(listener_.fd(), nullptr, nullptr, SOCK_CLOEXEC);
    if (fd < 0) continue;
    std::lock_guard lock(mu_);
    if (stopping_) {
      ::close(fd);
      break;
    }
    client_fds_.push_back(fd);
    workers_.emplace_back([this, fd] { serve(fd); });
  }
}

void MockScorer::serve(int fd) {
  net::FrameReader reader;
  try {
    while (!stopping_) {
      const auto frame = reader.read(fd, net::Clock::now() + std::chrono::hours(24));
      if (!frame) continue;
      const std::string reply = respond(*frame);
      if (!net::write_all(fd, net::encode_frame(reply), net::Clock::now() + std::chrono::seconds(30)))
        break;
    }
  } catch (const std::exception&) {
    // peer closed or shutdown during stop()
  }
  std::lock_guard lock(mu_);
  client_fds_.erase(std::remove(client_fds_.begin(), client_fds_.end(), fd), client_fds_.end());
  ::close(fd);
}

std::string MockScorer::respond(const std::string& payload) {
  nlohmann::json request;
  try {
    request = nlohmann::json::parse(payload);
  } catch (const nlohmann::json::exception&) {
    return nlohmann::json{{"error", "request is not valid JSON"}}.dump();
  }
  const std::string type = request.value("type", "");
  nlohmann::ordered_json out;
  if (type == "hello") {
    out["type"] = "hello";
    out["model_name"] = behaviour_.model_name;
    out["protocol_version"] = behaviour_.protocol_version;
    out["max_batch"] = behaviour_.max_batch;
    return out.dump();
  }
  const auto id = request.contains("request_id") ? request["request_id"] : nlohmann::json(nullptr);
  if (type != "score") {
    out["type"] = "error";
    out["request_id"] = id;
    out["error"] = "unknown message type: " + type;
    return out.dump();
  }

  ++requests_;
  const std::size_t now = ++active_;
  std::size_t peak = peak_.load();
  while (now > peak && !peak_.compare_exchange_weak(peak, now)) {
  }
  struct Active {
    std::atomic<std::size_t>& n;
    ~Active() { --n; }
  } guard{active_};

  const auto texts = request.value("texts", nlohmann::json::array());
  if (!behaviour_.delay_trigger.empty() && batch_contains(texts, behaviour_.delay_trigger)) {
    bool sleep = true;
    if (behaviour_.delay_once) {
      std::lock_guard lock(mu_);
      sleep = !delayed_once_;
      delayed_once_ = true;
    }
    if (sleep) std::this_thread::sleep_for(behaviour_.delay);
  }

  const bool faulty = behaviour_.fault != Fault::None && batch_contains(texts, behaviour_.fault_trigger);
  if (faulty && behaviour_.fault == Fault::NotJson) return "this is not json";

  out["type"] = "score";
  out["request_id"] = faulty && behaviour_.fault == Fault::WrongId
                          ? nlohmann::json(id.is_string() ? id.get<std::string>() + "-wrong" : "wrong")
                          : id;
  out["model_name"] = behaviour_.model_name;
  if (faulty && behaviour_.fault == Fault::ErrorField) {
    out["error"] = "mock scorer failure";
    return out.dump();
  }
  if (faulty && behaviour_.fault == Fault::MissingScores) return out.dump();
  auto scores = nlohmann::ordered_json::array();
  for (const auto& t : texts) {
    auto [legit, fake] = score_text(behaviour_, t.is_string() ? t.get<std::string>() : t.dump());
    if (faulty && behaviour_.fault == Fault::BadSum && scores.empty()) {
      legit = 0.5;
      fake = 0.7;
    }
    scores.push_back({{"legit", legit}, {"fake", fake}});
  }
  if (faulty && behaviour_.fault == Fault::ShortScores && !scores.empty()) scores.erase(scores.size() - 1);
  out["scores"] = std::move(scores);
  return out.dump();
}

}  // namespace lund::mock
