#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "lund/util/socket.hpp"

namespace lund::mock {

enum class Fault {
  None,
  BadSum,         // first pair sums to 1.2
  WrongId,        // request_id not echoed
  MissingScores,  // no scores field
  ShortScores,    // one score fewer than texts
  ErrorField,     // error field set
  NotJson,        // frame payload is not JSON
};

struct Behaviour {
  std::string model_name = "mock-scorer";
  std::string protocol_version = "1.0";
  std::size_t max_batch = 32;
  // (legit, fake) for every text. Otherwise keyword scoring when keywords are
  // given, otherwise a deterministic hash of the text.
  std::optional<std::pair<double, double>> fixed;
  std::vector<std::string> fake_keywords;
  // Batches containing `delay_trigger` are answered after `delay`; with
  // delay_once only the first such batch is delayed.
  std::string delay_trigger;
  std::chrono::milliseconds delay{0};
  bool delay_once = true;
  Fault fault = Fault::None;
  std::string fault_trigger;  // empty = every score batch
};

// In-process loopback scorer speaking the scorer protocol. One thread per
// connection; frames on a connection are answered in order.
class MockScorer {
 public:
  explicit MockScorer(Behaviour behaviour, std::uint16_t port = 0);
  ~MockScorer();
  MockScorer(const MockScorer&) = delete;
  MockScorer& operator=(const MockScorer&) = delete;

  std::string address() const { return "127.0.0.1:" + std::to_string(port_); }
  std::uint16_t port() const { return port_; }
  std::size_t requests() const { return requests_.load(); }
  // Highest number of score frames being processed at once.
  std::size_t peak_concurrent() const { return peak_.load(); }
  void stop();

 private:
  void accept_loop();
  void serve(int fd);
  std::string respond(const std::string& payload);

  Behaviour behaviour_;
  net::Socket listener_;
  std::uint16_t port_ = 0;
  std::atomic<bool> stopping_{false};
  std::thread acceptor_;
  std::mutex mu_;
  std::vector<std::thread> workers_;
  std::vector<int> client_fds_;
  bool delayed_once_ = false;
  std::atomic<std::size_t> requests_{0};
  std::atomic<std::size_t> active_{0};
  std::atomic<std::size_t> peak_{0};
};

}  // namespace lund::mock
