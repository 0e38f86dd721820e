#include "tdse/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>

#include "tdse/csv.hpp"
#include "tdse/error.hpp"

namespace tdse {

Config Config::parse(std::istream& in, const std::string& source) {
  Config c;
  std::string line;
  std::size_t line_no = 0;
  while (csv::getline(in, line)) {
    ++line_no;
    const auto body = csv::trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::InvalidConfig, source + ":" + std::to_string(line_no) + ": expected key = value");
    }
    const auto key = std::string(csv::trim(body.substr(0, eq)));
    if (key.empty()) throw Error(ErrorCode::InvalidConfig, source + ":" + std::to_string(line_no) + ": empty key");
    c.set(key, std::string(csv::trim(body.substr(eq + 1))));
  }
  return c;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingSource, "cannot open config " + path.string());
  return parse(in, path.string());
}

std::optional<std::string> Config::find(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::string Config::text(const std::string& key, const std::string& fallback) const {
  return find(key).value_or(fallback);
}

double Config::real(const std::string& key, double fallback) const {
  const auto v = find(key);
  if (!v) return fallback;
  try {
    return csv::parse_double(*v, key);
  } catch (const Error&) {
    throw Error(ErrorCode::InvalidConfig, "config key '" + key + "': not a number: '" + *v + "'");
  }
}

std::uint64_t Config::u64(const std::string& key, std::uint64_t fallback) const {
  const auto v = find(key);
  if (!v) return fallback;
  std::uint64_t out = 0;
  const auto [end, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc() || end != v->data() + v->size()) {
    throw Error(ErrorCode::InvalidConfig, "config key '" + key + "': not a non-negative integer: '" + *v + "'");
  }
  return out;
}

std::size_t Config::size(const std::string& key, std::size_t fallback) const {
  return static_cast<std::size_t>(u64(key, fallback));
}

std::vector<std::string> Config::list(const std::string& key) const {
  std::vector<std::string> out;
  const auto v = find(key);
  if (!v) return out;
  for (const auto& item : csv::split(*v, ',')) {
    const auto t = csv::trim(item);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

std::string Config::env_name(const std::string& key, const std::string& prefix) {
  std::string name = prefix;
  for (char ch : key) {
    name.push_back(ch == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(ch))));
  }
  return name;
}

void Config::apply_env(const std::vector<std::string>& keys, const std::string& prefix) {
  for (const auto& key : keys) {
    if (const char* v = std::getenv(env_name(key, prefix).c_str())) set(key, v);
  }
}

void Config::check_known(const std::vector<std::string>& known) const {
  for (const auto& [key, value] : values_) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw Error(ErrorCode::InvalidConfig, "unknown config key '" + key + "'");
    }
  }
}

void Config::write(std::ostream& out) const {
  for (const auto& [key, value] : values_) out << key << " = " << value << '\n';
}

}  // namespace tdse
