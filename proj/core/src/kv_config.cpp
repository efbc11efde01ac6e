#include "freeseed/kv_config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace freeseed {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw std::runtime_error("format_double failed");
  return std::string(buf, ptr);
}

KeyValues KeyValues::parse(const std::string& text) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("line " + std::to_string(lineno) + ": expected key=value, got '" + t + "'");
    }
    const std::string key = trim(t.substr(0, eq));
    if (key.empty()) throw std::invalid_argument("line " + std::to_string(lineno) + ": empty key");
    if (kv.has(key)) throw std::invalid_argument("duplicate key '" + key + "'");
    kv.set(key, trim(t.substr(eq + 1)));
  }
  return kv;
}

KeyValues KeyValues::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse(ss.str());
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
}

void KeyValues::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << to_string();
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string KeyValues::to_string() const {
  std::string s;
  for (const auto& k : order_) s += k + "=" + values_.at(k) + "\n";
  return s;
}

void KeyValues::set(const std::string& key, const std::string& value) {
  if (values_.count(key) == 0) order_.push_back(key);
  values_[key] = value;
}

void KeyValues::set(const std::string& key, double value) { set(key, format_double(value)); }
void KeyValues::set(const std::string& key, long long value) { set(key, std::to_string(value)); }

const std::string& KeyValues::get_string(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw std::invalid_argument("missing key '" + key + "'");
  return it->second;
}

double KeyValues::get_double(const std::string& key) const {
  const auto& s = get_string(key);
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw std::invalid_argument("key '" + key + "': not a number: '" + s + "'");
  }
  return v;
}

long long KeyValues::get_int(const std::string& key) const {
  const auto& s = get_string(key);
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw std::invalid_argument("key '" + key + "': not an integer: '" + s + "'");
  }
  return v;
}

bool KeyValues::get_bool(const std::string& key) const {
  const auto& s = get_string(key);
  if (s == "true" || s == "1" || s == "on" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "off" || s == "no") return false;
  throw std::invalid_argument("key '" + key + "': not a boolean: '" + s + "'");
}

std::vector<long long> KeyValues::get_int_list(const std::string& key) const {
  std::vector<long long> out;
  std::istringstream in(get_string(key));
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    long long v = 0;
    auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc() || ptr != item.data() + item.size()) {
      throw std::invalid_argument("key '" + key + "': bad list entry '" + item + "'");
    }
    out.push_back(v);
  }
  return out;
}

std::string KeyValues::get_string(const std::string& key, const std::string& fallback) const {
  return has(key) ? get_string(key) : fallback;
}
double KeyValues::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}
long long KeyValues::get_int(const std::string& key, long long fallback) const {
  return has(key) ? get_int(key) : fallback;
}
bool KeyValues::get_bool(const std::string& key, bool fallback) const { return has(key) ? get_bool(key) : fallback; }

void KeyValues::require_known(const std::set<std::string>& allowed) const {
  for (const auto& k : order_) {
    if (allowed.count(k) == 0) throw std::invalid_argument("unknown key '" + k + "'");
  }
}

}  // namespace freeseed
