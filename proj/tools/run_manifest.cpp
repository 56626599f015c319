#include "run_manifest.hpp"

#include <ctime>

#include "lund/util/hashing.hpp"
#include "lund/util/io.hpp"

namespace lund::cli {

namespace {

std::string iso8601(std::chrono::system_clock::time_point t) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  ::gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string crc_hex(std::uint32_t crc) {
  char buf[9];
  std::snprintf(buf, sizeof buf, "%08x", crc);
  return buf;
}

}  // namespace

RunManifest::RunManifest(std::string command, std::vector<std::string> argv)
    : command_(std::move(command)),
      argv_(std::move(argv)),
      started_(std::chrono::system_clock::now()),
      started_steady_(std::chrono::steady_clock::now()) {}

void RunManifest::add_config_hash(const std::string& stage, const std::string& hash) {
  config_hashes_[stage] = hash;
}

void RunManifest::add_input(const std::filesystem::path& path) {
  inputs_.push_back(describe(path));
}

void RunManifest::add_output(const std::filesystem::path& path) { outputs_.push_back(path); }

void RunManifest::set_status(int exit_code, const std::string& message) {
  exit_code_ = exit_code;
  message_ = message;
}

RunManifest::FileEntry RunManifest::describe(const std::filesystem::path& path) {
  FileEntry e;
  e.path = path.generic_string();
  std::error_code ec;
  if (std::filesystem::is_regular_file(path, ec)) {
    const std::string content = io::read_file(path);
    e.crc32 = crc_hex(crc32(content));
    e.bytes = content.size();
  }
  return e;
}

nlohmann::ordered_json RunManifest::to_json() const {
  nlohmann::ordered_json j;
  j["tool"] = "lund";
  j["tool_version"] = LUND_VERSION;
  j["command"] = command_;
  j["argv"] = argv_;
  j["seed"] = seed_;
  j["config_hashes"] = config_hashes_;
  auto files = [](const std::vector<FileEntry>& entries) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& e : entries)
      arr.push_back({{"path", e.path}, {"crc32", e.crc32}, {"bytes", e.bytes}});
    return arr;
  };
  j["inputs"] = files(inputs_);
  std::vector<FileEntry> outs;
  for (const auto& p : outputs_) outs.push_back(describe(p));
  j["outputs"] = files(outs);
  j["exit_code"] = exit_code_;
  if (!message_.empty()) j["error"] = message_;
  j["started_at"] = iso8601(started_);
  j["finished_at"] = iso8601(std::chrono::system_clock::now());
  j["elapsed_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started_steady_).count();
  return j;
}

void RunManifest::write(const std::filesystem::path& out_dir) const {
  io::write_file(out_dir / ("run_manifest." + command_ + ".json"), to_json().dump(2) + "\n");
}

}  // namespace lund::cli
