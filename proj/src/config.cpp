#include "poseadapt/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace poseadapt {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

bool KeyValues::has(const std::string& key) const {
  for (const auto& [k, v] : items_) {
    if (k == key) return true;
  }
  return false;
}

const std::string& KeyValues::get(const std::string& key) const {
  for (const auto& [k, v] : items_) {
    if (k == key) return v;
  }
  throw std::out_of_range("config: missing key " + key);
}

std::string KeyValues::get_or(const std::string& key, const std::string& fallback) const {
  return has(key) ? get(key) : fallback;
}

int KeyValues::get_int(const std::string& key, int fallback) const {
  if (!has(key)) return fallback;
  try {
    return std::stoi(get(key));
  } catch (const std::exception&) {
    throw std::invalid_argument("config: key " + key + " is not an integer: " + get(key));
  }
}

double KeyValues::get_double(const std::string& key, double fallback) const {
  if (!has(key)) return fallback;
  try {
    return std::stod(get(key));
  } catch (const std::exception&) {
    throw std::invalid_argument("config: key " + key + " is not a number: " + get(key));
  }
}

uint64_t KeyValues::get_u64(const std::string& key, uint64_t fallback) const {
  if (!has(key)) return fallback;
  try {
    return std::stoull(get(key));
  } catch (const std::exception&) {
    throw std::invalid_argument("config: key " + key + " is not an unsigned integer: " + get(key));
  }
}

bool KeyValues::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const auto& v = get(key);
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  throw std::invalid_argument("config: key " + key + " is not a boolean: " + v);
}

void KeyValues::set(const std::string& key, std::string value) {
  for (auto& [k, v] : items_) {
    if (k == key) {
      v = std::move(value);
      return;
    }
  }
  items_.emplace_back(key, std::move(value));
}

void KeyValues::set_int(const std::string& key, int64_t value) { set(key, std::to_string(value)); }

void KeyValues::set_double(const std::string& key, double value) {
  std::ostringstream os;
  os.precision(17);
  os << value;
  set(key, os.str());
}

void KeyValues::set_bool(const std::string& key, bool value) {
  set(key, value ? "true" : "false");
}

std::string KeyValues::serialize() const {
  std::string out;
  for (const auto& [k, v] : items_) {
    out += k;
    out += " = ";
    out += v;
    out += "\n";
  }
  return out;
}

KeyValues parse_kv_text(const std::string& text) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                  " has no '=': " + line);
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw std::invalid_argument("config: empty key on line " + std::to_string(lineno));
    }
    kv.set(key, value);
  }
  return kv;
}

KeyValues parse_kv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_kv_text(text);
}

void write_kv_file(const KeyValues& kv, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("config: cannot write " + path);
  out << kv.serialize();
}

void apply_override(KeyValues& kv, const std::string& assignment) {
  auto parsed = parse_kv_text(assignment);
  if (parsed.items().empty()) {
    throw std::invalid_argument("config: override must be key=value: " + assignment);
  }
  for (const auto& [k, v] : parsed.items()) kv.set(k, v);
}

}  // namespace poseadapt
