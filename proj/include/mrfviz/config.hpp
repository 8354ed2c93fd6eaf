#ifndef MRFVIZ_CONFIG_HPP
#define MRFVIZ_CONFIG_HPP

// Sectioned key = value configuration files (INI syntax, ';' or '#' comments).

#include "errors.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace mrfviz {

class Config {
public:
  Config() = default;

  static Config parse(const std::string& text, const std::string& origin = "config") {
    // '#' comments are accepted in addition to the INI ';' comments.
    std::istringstream lines(text);
    std::string line, cleaned;
    while (std::getline(lines, line)) {
      const auto first = line.find_first_not_of(" \t");
      if (first != std::string::npos && line[first] == '#') line.clear();
      cleaned += line + "\n";
    }
    boost::property_tree::ptree tree;
    std::istringstream in(cleaned);
    try {
      boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
      throw ConfigError(origin + ":" + std::to_string(e.line()) + ": " + e.message());
    }
    Config c;
    c.origin_ = origin;
    for (const auto& [section, body] : tree) {
      if (body.empty() && !body.data().empty())
        throw ConfigError(origin + ": key '" + section + "' must be inside a [section]");
      auto& s = c.sections_[section];
      for (const auto& [key, value] : body) s[key] = value.get_value<std::string>();
      c.order_.push_back(section);
    }
    return c;
  }

  static Config load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path);
  }

  const std::string& origin() const { return origin_; }
  const std::vector<std::string>& sections() const { return order_; }
  bool has_section(const std::string& s) const { return sections_.count(s) > 0; }
  bool has(const std::string& s, const std::string& key) const {
    const auto it = sections_.find(s);
    return it != sections_.end() && it->second.count(key) > 0;
  }

  /// Throws ConfigError for sections outside `allowed`.
  void require_sections(const std::set<std::string>& allowed) const {
    for (const auto& s : order_)
      if (!allowed.count(s)) throw ConfigError(origin_ + ": unknown section [" + s + "]");
  }

  /// Throws ConfigError for keys of `section` outside `allowed`.
  void require_keys(const std::string& section, const std::set<std::string>& allowed) const {
    const auto it = sections_.find(section);
    if (it == sections_.end()) return;
    for (const auto& [key, value] : it->second)
      if (!allowed.count(key)) throw ConfigError(origin_ + ": unknown key '" + key + "' in [" + section + "]");
  }

  std::string get(const std::string& s, const std::string& key) const {
    const auto it = sections_.find(s);
    if (it == sections_.end() || !it->second.count(key))
      throw ConfigError(origin_ + ": missing key '" + key + "' in [" + s + "]");
    return it->second.at(key);
  }

  std::string get(const std::string& s, const std::string& key, const std::string& fallback) const {
    return has(s, key) ? get(s, key) : fallback;
  }

  double get_double(const std::string& s, const std::string& key) const {
    const auto v = get(s, key);
    try {
      std::size_t used = 0;
      const double d = std::stod(v, &used);
      if (used != v.size() || !std::isfinite(d)) throw std::invalid_argument(v);
      return d;
    } catch (const std::logic_error&) {
      throw ConfigError(origin_ + ": [" + s + "] " + key + " = '" + v + "' is not a finite number");
    }
  }

  double get_double(const std::string& s, const std::string& key, double fallback) const {
    return has(s, key) ? get_double(s, key) : fallback;
  }

  std::int64_t get_int(const std::string& s, const std::string& key) const {
    const auto v = get(s, key);
    try {
      std::size_t used = 0;
      const long long i = std::stoll(v, &used);
      if (used != v.size()) throw std::invalid_argument(v);
      return i;
    } catch (const std::logic_error&) {
      throw ConfigError(origin_ + ": [" + s + "] " + key + " = '" + v + "' is not an integer");
    }
  }

  std::int64_t get_int(const std::string& s, const std::string& key, std::int64_t fallback) const {
    return has(s, key) ? get_int(s, key) : fallback;
  }

  bool get_bool(const std::string& s, const std::string& key, bool fallback) const {
    if (!has(s, key)) return fallback;
    const auto v = get(s, key);
    if (v == "true" || v == "yes" || v == "1" || v == "on") return true;
    if (v == "false" || v == "no" || v == "0" || v == "off") return false;
    throw ConfigError(origin_ + ": [" + s + "] " + key + " = '" + v + "' is not a boolean");
  }

  void set(const std::string& s, const std::string& key, const std::string& value) {
    if (!sections_.count(s)) order_.push_back(s);
    sections_[s][key] = value;
  }

  /// Canonical text: sections in first-seen order, keys sorted.
  std::string to_string() const {
    std::string out;
    for (const auto& s : order_) {
      if (!out.empty()) out += "\n";
      out += "[" + s + "]\n";
      for (const auto& [key, value] : sections_.at(s)) out += key + " = " + value + "\n";
    }
    return out;
  }

private:
  std::string origin_ = "config";
  std::vector<std::string> order_;
  std::map<std::string, std::map<std::string, std::string>> sections_;
};

} // namespace mrfviz

#endif
