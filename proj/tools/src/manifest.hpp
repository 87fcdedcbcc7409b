#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "ormachine/io.hpp"

namespace ormachine::cli {

/// Record of one CLI run, written as key=value lines:
///   command, config.<flag>, input.<name>.path / .digest,
///   output.<name>, time.<phase> (seconds).
class RunManifest {
 public:
  explicit RunManifest(std::string command) : command_(std::move(command)) {}

  void config(const std::string& key, const std::string& value) { config_.emplace_back(key, value); }
  void input(const std::string& name, const std::filesystem::path& path);
  void output(const std::string& name, const std::filesystem::path& path);

  /// Times `fn` and records it under `phase`.
  template <typename Fn>
  decltype(auto) timed(const std::string& phase, Fn&& fn) {
    const auto start = std::chrono::steady_clock::now();
    struct Stop {
      RunManifest* self;
      std::string phase;
      std::chrono::steady_clock::time_point start;
      ~Stop() {
        self->timings_.emplace_back(phase, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
      }
    } stop{this, phase, start};
    return fn();
  }

  KeyValues entries() const;
  void write(const std::filesystem::path& path) const;

 private:
  std::string command_;
  KeyValues config_;
  KeyValues inputs_;
  KeyValues outputs_;
  std::vector<std::pair<std::string, double>> timings_;
};

}  // namespace ormachine::cli
