#include "fibernoise/keyvalue.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "fibernoise/errors.hpp"

namespace fibernoise {
namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double to_double(const std::string& text, const std::string& key, const std::string& origin) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end)
    fail(ErrorKind::Config, origin + ": key '" + key + "' expects a number, got '" + text + "'");
  return value;
}

}  // namespace

std::string format_double(double value) {
  char buffer[64];
  auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, ptr);
}

KeyValueFile KeyValueFile::parse(const std::string& text, const std::string& origin) {
  KeyValueFile file;
  file.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(line_number);
    if (line.front() == '[') {
      if (line.back() != ']') fail(ErrorKind::Config, where + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) fail(ErrorKind::Config, where + ": empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(ErrorKind::Config, where + ": expected 'key = value'");
    std::string key = trim(line.substr(0, eq));
    if (key.empty()) fail(ErrorKind::Config, where + ": empty key");
    if (!section.empty()) key = section + "." + key;
    if (file.contains(key)) fail(ErrorKind::Config, where + ": duplicate key '" + key + "'");
    file.set(key, trim(line.substr(eq + 1)));
  }
  return file;
}

KeyValueFile KeyValueFile::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str(), path.string());
}

void KeyValueFile::set(const std::string& key, const std::string& value) {
  if (!contains(key)) order_.push_back(key);
  values_[key] = value;
}

void KeyValueFile::set(const std::string& key, double value) { set(key, format_double(value)); }

void KeyValueFile::set(const std::string& key, long long value) { set(key, std::to_string(value)); }

std::optional<std::string> KeyValueFile::find(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::string KeyValueFile::get_string(const std::string& key) const {
  auto value = find(key);
  if (!value) fail(ErrorKind::Config, origin_ + ": missing key '" + key + "'");
  return *value;
}

std::string KeyValueFile::get_string(const std::string& key, const std::string& fallback) const {
  return find(key).value_or(fallback);
}

double KeyValueFile::get_double(const std::string& key) const { return to_double(get_string(key), key, origin_); }

double KeyValueFile::get_double(const std::string& key, double fallback) const {
  auto value = find(key);
  return value ? to_double(*value, key, origin_) : fallback;
}

long long KeyValueFile::get_int(const std::string& key) const {
  const std::string text = get_string(key);
  long long value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size())
    fail(ErrorKind::Config, origin_ + ": key '" + key + "' expects an integer, got '" + text + "'");
  return value;
}

long long KeyValueFile::get_int(const std::string& key, long long fallback) const {
  return contains(key) ? get_int(key) : fallback;
}

bool KeyValueFile::get_bool(const std::string& key, bool fallback) const {
  auto value = find(key);
  if (!value) return fallback;
  if (*value == "true" || *value == "yes" || *value == "on" || *value == "1") return true;
  if (*value == "false" || *value == "no" || *value == "off" || *value == "0") return false;
  fail(ErrorKind::Config, origin_ + ": key '" + key + "' expects a boolean, got '" + *value + "'");
}

std::vector<double> KeyValueFile::get_doubles(const std::string& key) const {
  std::vector<double> out;
  std::string text = get_string(key);
  for (char& c : text)
    if (c == ',') c = ' ';
  std::istringstream in(text);
  std::string token;
  while (in >> token) out.push_back(to_double(token, key, origin_));
  return out;
}

std::string KeyValueFile::to_string() const {
  std::ostringstream out;
  std::vector<std::string> sections;
  for (const auto& key : order_) {
    const auto dot = key.find('.');
    const std::string section = dot == std::string::npos ? std::string() : key.substr(0, dot);
    bool seen = false;
    for (const auto& s : sections) seen |= s == section;
    if (!seen) sections.push_back(section);
  }
  // Top-level keys first so they are not captured by a section header.
  std::stable_sort(sections.begin(), sections.end(), [](const std::string& a, const std::string& b) {
    return a.empty() && !b.empty();
  });
  bool first = true;
  for (const auto& section : sections) {
    if (!section.empty()) {
      if (!first) out << '\n';
      out << '[' << section << "]\n";
    }
    first = false;
    for (const auto& key : order_) {
      const auto dot = key.find('.');
      const std::string key_section = dot == std::string::npos ? std::string() : key.substr(0, dot);
      if (key_section != section) continue;
      out << (section.empty() ? key : key.substr(dot + 1)) << " = " << values_.at(key) << '\n';
    }
  }
  return out.str();
}

void KeyValueFile::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write '" + path.string() + "'");
  out << to_string();
  if (!out) fail(ErrorKind::Io, "write failed for '" + path.string() + "'");
}

}  // namespace fibernoise
