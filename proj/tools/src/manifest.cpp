#include "manifest.hpp"

#include <cstdio>

namespace ormachine::cli {

void RunManifest::input(const std::string& name, const std::filesystem::path& path) {
  inputs_.emplace_back("input." + name + ".path", path.string());
  inputs_.emplace_back("input." + name + ".digest", file_digest(path));
}

void RunManifest::output(const std::string& name, const std::filesystem::path& path) {
  outputs_.emplace_back("output." + name, path.string());
}

KeyValues RunManifest::entries() const {
  KeyValues kv{{"command", command_}};
  for (const auto& [k, v] : config_) kv.emplace_back("config." + k, v);
  kv.insert(kv.end(), inputs_.begin(), inputs_.end());
  kv.insert(kv.end(), outputs_.begin(), outputs_.end());
  for (const auto& [phase, secs] : timings_) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", secs);
    kv.emplace_back("time." + phase, buf);
  }
  return kv;
}

void RunManifest::write(const std::filesystem::path& path) const { write_key_values(path, entries()); }

}  // namespace ormachine::cli
