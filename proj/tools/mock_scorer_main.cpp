// lund-mock-scorer: loopback scorer for protocol testing without a model.

#include <csignal>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "lund/mock_scorer.hpp"

namespace {

volatile std::sig_atomic_t g_stop = 0;

void on_signal(int) { g_stop = 1; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mock scorer speaking the scorer protocol on 127.0.0.1"};
  std::uint16_t port = 0;
  std::optional<double> fixed_fake;
  lund::mock::Behaviour behaviour;
  std::size_t delay_ms = 0;
  app.add_option("--port", port, "TCP port (0 = ephemeral, printed on start)")->capture_default_str();
  app.add_option("--fixed-fake", fixed_fake, "Answer this Fake probability for every text")
      ->check(CLI::Range(0.0, 1.0));
  app.add_option("--keyword", behaviour.fake_keywords, "Texts containing this score as Fake (repeatable)");
  app.add_option("--model-name", behaviour.model_name)->capture_default_str();
  app.add_option("--protocol-version", behaviour.protocol_version)->capture_default_str();
  app.add_option("--max-batch", behaviour.max_batch)->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--delay-trigger", behaviour.delay_trigger, "Delay batches containing this text");
  app.add_option("--delay-ms", delay_ms, "Delay applied to triggered batches");
  app.add_flag("!--delay-always", behaviour.delay_once, "Delay every triggered batch, not just the first");
  CLI11_PARSE(app, argc, argv);

  if (fixed_fake) behaviour.fixed = std::pair{1.0 - *fixed_fake, *fixed_fake};
  behaviour.delay = std::chrono::milliseconds(delay_ms);

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  lund::mock::MockScorer server(behaviour, port);
  std::cout << server.address() << std::endl;
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  server.stop();
  return 0;
}
