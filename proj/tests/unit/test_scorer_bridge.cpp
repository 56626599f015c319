#include <thread>

#include "doctest.h"
#include "lund/error.hpp"
#include "lund/mock_scorer.hpp"
#include "lund/scorer_bridge.hpp"

using namespace lund;
using namespace lund::scorer;

namespace {

Endpoint endpoint_for(const mock::MockScorer& server, int timeout_ms = 2000) {
  Endpoint e;
  e.address = server.address();
  e.timeout = std::chrono::milliseconds(timeout_ms);
  return e;
}

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no lund::Error thrown");
  return ErrorKind::Io;
}

const std::vector<std::string> kTexts{"پہلی خبر", "دوسری خبر", "تیسری خبر"};

}  // namespace

TEST_CASE("handshake reports capabilities") {
  mock::Behaviour b;
  b.max_batch = 7;
  mock::MockScorer server(b);
  ScorerClient client(endpoint_for(server));
  const auto& caps = client.handshake();
  CHECK(caps.model_name == "mock-scorer");
  CHECK(caps.protocol_version == "1.0");
  CHECK(caps.max_batch == 7);
  CHECK(client.handshaken());
}

TEST_CASE("incompatible major version") {
  mock::Behaviour b;
  b.protocol_version = "2.0";
  mock::MockScorer server(b);
  ScorerClient client(endpoint_for(server));
  try {
    client.handshake();
    FAIL("expected VersionIncompatible");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::VersionIncompatible);
    CHECK(e.payload() == "2.0");
  }
  CHECK(compatible_versions("1.0", "1.7"));
  CHECK_FALSE(compatible_versions("1.0", "10.0"));
  CHECK_FALSE(compatible_versions("1.0", "x"));
}

TEST_CASE("nothing listening is unreachable") {
  std::string address;
  {
    mock::MockScorer server(mock::Behaviour{});
    address = server.address();
  }
  Endpoint e;
  e.address = address;
  e.timeout = std::chrono::milliseconds(500);
  ScorerClient client(e);
  CHECK(kind_of([&] { client.handshake(); }) == ErrorKind::Unreachable);
}

TEST_CASE("score response validation") {
  const auto ok = nlohmann::json::parse(R"({"request_id":"r1","scores":[{"legit":0.3,"fake":0.7}]})");
  const auto out = parse_score_response(ok, 1);
  REQUIRE(out.size() == 1);
  CHECK(out[0].predicted == Label::Fake);
  CHECK(out[0].prob(Label::Fake) == 0.7);

  const auto bad = nlohmann::json::parse(R"({"request_id":"r1","scores":[{"legit":0.5,"fake":0.7}]})");
  try {
    parse_score_response(bad, 1);
    FAIL("expected MalformedResponse");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::MalformedResponse);
    CHECK(e.payload().find("0.7") != std::string::npos);
  }
  CHECK(kind_of([&] { parse_score_response(ok, 2); }) == ErrorKind::MalformedResponse);
  const auto err = nlohmann::json::parse(R"({"request_id":"r1","error":"boom"})");
  CHECK(kind_of([&] { parse_score_response(err, 1); }) == ErrorKind::ScorerError);
  CHECK(kind_of([] { parse_hello_response("[1]"); }) == ErrorKind::MalformedResponse);
  CHECK(kind_of([] { parse_hello_response(R"({"model_name":"m","protocol_version":"1.0","max_batch":0})"); }) ==
        ErrorKind::MalformedResponse);
}

TEST_CASE("even scores resolve to fake") {
  mock::Behaviour b;
  b.fixed = std::make_pair(0.5, 0.5);
  mock::MockScorer server(b);
  ScorerClient client(endpoint_for(server));
  const std::vector<std::string> texts(10, "خبر");
  const auto out = client.score_batch(texts);
  REQUIRE(out.size() == 10);
  for (const auto& o : out) CHECK(o.predicted == Label::Fake);
}

TEST_CASE("scores follow text order") {
  mock::Behaviour b;
  b.fake_keywords = {"جھوٹ"};
  mock::MockScorer server(b);
  ScorerClient client(endpoint_for(server));
  const std::vector<std::string> texts{"سچ", "جھوٹ", "سچ"};
  const auto out = client.score_batch(texts);
  CHECK(out[0].predicted == Label::Legit);
  CHECK(out[1].predicted == Label::Fake);
  CHECK(out[2].predicted == Label::Legit);
}

TEST_CASE("faulty responses map to error kinds") {
  const std::pair<mock::Fault, ErrorKind> cases[] = {
      {mock::Fault::BadSum, ErrorKind::MalformedResponse},
      {mock::Fault::WrongId, ErrorKind::MalformedResponse},
      {mock::Fault::MissingScores, ErrorKind::MalformedResponse},
      {mock::Fault::ShortScores, ErrorKind::MalformedResponse},
      {mock::Fault::NotJson, ErrorKind::MalformedResponse},
      {mock::Fault::ErrorField, ErrorKind::ScorerError},
  };
  for (const auto& [fault, kind] : cases) {
    mock::Behaviour b;
    b.fault = fault;
    mock::MockScorer server(b);
    ScorerClient client(endpoint_for(server));
    CHECK(kind_of([&] { client.score_batch(kTexts); }) == kind);
  }
}

TEST_CASE("fault on one batch leaves later batches usable") {
  mock::Behaviour b;
  b.fault = mock::Fault::WrongId;
  b.fault_trigger = "خراب";
  mock::MockScorer server(b);
  ScorerClient client(endpoint_for(server));
  const std::vector<std::string> broken{"خراب خبر"};
  CHECK(kind_of([&] { client.score_batch(broken); }) == ErrorKind::MalformedResponse);
  CHECK(client.score_batch(kTexts).size() == 3);
}

TEST_CASE("a timed-out request is retried once and the late answer dropped") {
  mock::Behaviour b;
  b.fixed = std::make_pair(0.1, 0.9);
  b.delay_trigger = "سست";
  b.delay = std::chrono::milliseconds(220);
  b.delay_once = true;
  mock::MockScorer server(b);
  ScorerClient client(endpoint_for(server, 150));
  const std::vector<std::string> texts{"سست خبر"};
  const auto out = client.score_batch(texts);
  REQUIRE(out.size() == 1);
  CHECK(out[0].predicted == Label::Fake);
  CHECK(client.retries() == 1);
  CHECK(client.discarded_responses() == 1);
  CHECK(server.requests() == 2);
}

TEST_CASE("a second timeout is reported as Timeout") {
  mock::Behaviour b;
  b.delay_trigger = "سست";
  b.delay = std::chrono::milliseconds(600);
  b.delay_once = false;
  mock::MockScorer server(b);
  ScorerClient client(endpoint_for(server, 100));
  const std::vector<std::string> texts{"سست خبر"};
  try {
    client.score_batch(texts);
    FAIL("expected Timeout");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Timeout);
    CHECK(is_protocol_error(e.kind()));
  }
  CHECK(client.retries() == 1);
  // The broken connection is dropped; a fresh one serves the next call.
  CHECK(client.score_batch(kTexts).size() == 3);
}

TEST_CASE("concurrent callers never exceed max_in_flight") {
  mock::Behaviour b;
  b.delay_trigger = "خبر";
  b.delay = std::chrono::milliseconds(40);
  b.delay_once = false;
  mock::MockScorer server(b);
  auto e = endpoint_for(server);
  e.max_in_flight = 2;
  ScorerClient client(e);
  client.handshake();
  std::vector<std::thread> threads;
  std::atomic<int> failures{0};
  for (int t = 0; t < 6; ++t)
    threads.emplace_back([&] {
      try {
        for (int k = 0; k < 3; ++k) client.score_batch(kTexts);
      } catch (...) {
        ++failures;
      }
    });
  for (auto& t : threads) t.join();
  CHECK(failures == 0);
  CHECK(client.peak_in_flight() >= 1);
  CHECK(client.peak_in_flight() <= 2);
  CHECK(server.peak_concurrent() <= 2);
  CHECK(server.requests() == 18);
}

TEST_CASE("batches larger than max_batch are split") {
  mock::Behaviour b;
  b.max_batch = 4;
  mock::MockScorer server(b);
  ScorerClient client(endpoint_for(server));
  std::vector<std::string> texts;
  for (int i = 0; i < 10; ++i) texts.push_back("خبر " + std::to_string(i));
  const auto out = client.score_batch(texts);
  CHECK(out.size() == 10);
  CHECK(server.requests() == 3);
  // Splitting does not change scores.
  ScorerClient single(endpoint_for(server));
  for (int i = 0; i < 10; ++i) {
    const std::vector<std::string> one{texts[i]};
    CHECK(single.score_batch(one)[0].probs == out[i].probs);
  }
}

TEST_CASE("endpoint JSON") {
  const auto e = endpoint_from_json(nlohmann::json{{"address", "127.0.0.1:9100"}, {"timeout_ms", 250}, {"max_in_flight", 3}});
  CHECK(e.timeout == std::chrono::milliseconds(250));
  CHECK(e.max_in_flight == 3);
  CHECK(e.batch_size == 32);
  const auto back = endpoint_from_json(to_json(e));
  CHECK(to_json(back) == to_json(e));
  CHECK_THROWS_AS(endpoint_from_json(nlohmann::json{{"address", ""}}), std::invalid_argument);
  CHECK_THROWS_AS(endpoint_from_json(nlohmann::json{{"address", "h:1"}, {"timeout_ms", 0}}), std::invalid_argument);
  CHECK_THROWS_AS(endpoint_from_json(nlohmann::json{{"address", "h:1"}, {"protocol_version", "v1"}}),
                  std::invalid_argument);
}

TEST_CASE("request builders") {
  const auto j = nlohmann::json::parse(score_request("r7", kTexts));
  CHECK(j["type"] == "score");
  CHECK(j["request_id"] == "r7");
  CHECK(j["texts"].size() == 3);
  CHECK(nlohmann::json::parse(hello_request("1.0"))["protocol_version"] == "1.0");
}

TEST_CASE("the mock passes the conformance suite") {
  mock::MockScorer server(mock::Behaviour{});
  const auto checks = run_conformance(endpoint_for(server));
  CHECK(checks.size() == 8);
  for (const auto& c : checks) {
    INFO(c.name << ": " << c.detail);
    CHECK(c.passed);
  }
}

TEST_CASE("conformance flags a scorer that drops request ids") {
  mock::Behaviour b;
  b.fault = mock::Fault::WrongId;
  mock::MockScorer server(b);
  const auto checks = run_conformance(endpoint_for(server));
  bool any_failed = false;
  for (const auto& c : checks) any_failed |= !c.passed;
  CHECK(any_failed);
}
