#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

namespace lund::cli {

// Record of one CLI invocation. Written next to the outputs as
// run_manifest.<command>.json; timestamps and timing are the only
// run-dependent fields.
class RunManifest {
 public:
  RunManifest(std::string command, std::vector<std::string> argv);

  void set_seed(std::uint64_t seed) { seed_ = seed; }
  void add_config_hash(const std::string& stage, const std::string& hash);
  void add_input(const std::filesystem::path& path);
  void add_output(const std::filesystem::path& path);
  void set_status(int exit_code, const std::string& message);

  nlohmann::ordered_json to_json() const;
  void write(const std::filesystem::path& out_dir) const;

 private:
  struct FileEntry {
    std::string path;
    std::string crc32;
    std::uintmax_t bytes = 0;
  };
  static FileEntry describe(const std::filesystem::path& path);

  std::string command_;
  std::vector<std::string> argv_;
  std::uint64_t seed_ = 0;
  std::map<std::string, std::string> config_hashes_;
  std::vector<FileEntry> inputs_;
  std::vector<std::filesystem::path> outputs_;
  int exit_code_ = 0;
  std::string message_;
  std::chrono::system_clock::time_point started_;
  std::chrono::steady_clock::time_point started_steady_;
};

}  // namespace lund::cli
