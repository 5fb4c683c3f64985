#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace poseadapt {

// Ordered key = value store behind every plain-text artifact: config files,
// dataset manifests, and the config echo inside checkpoints. Lines are
// "key = value"; '#' starts a comment.
class KeyValues {
 public:
  bool has(const std::string& key) const;
  const std::string& get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  int get_int(const std::string& key, int fallback) const;
  double get_double(const std::string& key, double fallback) const;
  uint64_t get_u64(const std::string& key, uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  void set(const std::string& key, std::string value);
  void set_int(const std::string& key, int64_t value);
  void set_double(const std::string& key, double value);
  void set_bool(const std::string& key, bool value);

  std::string serialize() const;
  const std::vector<std::pair<std::string, std::string>>& items() const { return items_; }

 private:
  std::vector<std::pair<std::string, std::string>> items_;
};

KeyValues parse_kv_text(const std::string& text);
KeyValues parse_kv_file(const std::string& path);
void write_kv_file(const KeyValues& kv, const std::string& path);

// "key=value" override, e.g. from a --set flag.
void apply_override(KeyValues& kv, const std::string& assignment);

}  // namespace poseadapt
