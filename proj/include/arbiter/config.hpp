// Copyright 2026 The Arbiter Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "arbiter/error.hpp"
#include "arbiter/fusion.hpp"

// Plain-text configuration: one `key = value` per line, `#` starts a comment.
// Precedence, lowest first: built-in defaults, config file, ARBITER_<KEY>
// environment variables, command-line flags.

namespace arbiter {

struct Settings {
  FusionConfig fusion;
  int jobs = 0;  // 0: hardware concurrency
};

inline constexpr std::string_view kEnvPrefix = "ARBITER_";

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

template <class T>
T parse_number(std::string_view key, std::string_view text) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end) {
    throw ConfigError("config: cannot parse '" + std::string(text) + "' for key '" + std::string(key) + "'");
  }
  return value;
}

inline std::vector<double> parse_list(std::string_view key, std::string_view text) {
  std::vector<double> out;
  std::string item;
  std::istringstream in{std::string(text)};
  while (std::getline(in, item, ',')) out.push_back(parse_number<double>(key, trim(item)));
  return out;
}

inline std::string format_list(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    std::ostringstream os;
    os << v[i];
    s += os.str();
  }
  return s;
}

struct Field {
  std::string_view key;
  std::function<void(Settings&, std::string_view)> set;
  std::function<std::string(const Settings&)> get;
};

template <class T>
std::string show(T v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

inline const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    const auto num = [&f](std::string_view key, auto member) {
      using M = std::remove_reference_t<decltype(std::declval<FusionConfig&>().*member)>;
      f.push_back({key,
                   [key, member](Settings& s, std::string_view v) { s.fusion.*member = parse_number<M>(key, v); },
                   [member](const Settings& s) { return show(s.fusion.*member); }});
    };
    num("superpixels", &FusionConfig::superpixels);
    num("compactness", &FusionConfig::compactness);
    num("slic_iterations", &FusionConfig::slic_iterations);
    num("clusters", &FusionConfig::clusters);
    num("theta", &FusionConfig::theta);
    num("propagation_iterations", &FusionConfig::propagation_iterations);
    num("generations", &FusionConfig::generations);
    num("lambda", &FusionConfig::lambda);
    f.push_back({"alpha_thresholds",
                 [](Settings& s, std::string_view v) { s.fusion.alpha_thresholds = parse_list("alpha_thresholds", v); },
                 [](const Settings& s) { return format_list(s.fusion.alpha_thresholds); }});
    num("logit_clamp", &FusionConfig::logit_clamp);
    num("smoothing", &FusionConfig::smoothing);
    f.push_back({"mode",
                 [](Settings& s, std::string_view v) {
                   if (v == "stats") s.fusion.mode = ExpertiseMode::stats;
                   else if (v == "latent") s.fusion.mode = ExpertiseMode::latent;
                   else if (v == "fixed") s.fusion.mode = ExpertiseMode::fixed;
                   else throw ConfigError("config: mode must be stats, latent or fixed, got '" + std::string(v) + "'");
                 },
                 [](const Settings& s) { return std::string(to_string(s.fusion.mode)); }});
    num("fixed_log_weight", &FusionConfig::fixed_log_weight);
    f.push_back({"knowledge",
                 [](Settings& s, std::string_view v) {
                   if (v == "boundary") s.fusion.knowledge = KnowledgeSource::boundary;
                   else if (v == "file") s.fusion.knowledge = KnowledgeSource::file;
                   else throw ConfigError("config: knowledge must be boundary or file, got '" + std::string(v) + "'");
                 },
                 [](const Settings& s) { return std::string(to_string(s.fusion.knowledge)); }});
    num("seed", &FusionConfig::seed);
    const auto em = [&f](std::string_view key, auto member) {
      using M = std::remove_reference_t<decltype(std::declval<EmParams&>().*member)>;
      f.push_back({key,
                   [key, member](Settings& s, std::string_view v) { s.fusion.em.*member = parse_number<M>(key, v); },
                   [member](const Settings& s) { return show(s.fusion.em.*member); }});
    };
    em("em_max_rounds", &EmParams::max_rounds);
    em("em_tolerance", &EmParams::tolerance);
    em("em_inner_steps", &EmParams::inner_steps);
    em("em_step", &EmParams::initial_step);
    f.push_back({"jobs", [](Settings& s, std::string_view v) { s.jobs = parse_number<int>("jobs", v); },
                 [](const Settings& s) { return show(s.jobs); }});
    return f;
  }();
  return table;
}

}  // namespace detail

inline void set_value(Settings& s, std::string_view key, std::string_view value) {
  for (const auto& f : detail::fields()) {
    if (f.key == key) {
      f.set(s, detail::trim(value));
      return;
    }
  }
  throw ConfigError("config: unknown key '" + std::string(key) + "'");
}

/// Applies `key = value` lines from a stream; `source` names it in errors.
inline void apply_config_text(Settings& s, std::istream& in, const std::string& source) {
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string body = detail::trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source + ":" + std::to_string(number) + ": expected key = value");
    }
    set_value(s, detail::trim(std::string_view(body).substr(0, eq)), std::string_view(body).substr(eq + 1));
  }
}

inline void apply_config_file(Settings& s, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file " + path);
  apply_config_text(s, in, path);
}

/// ARBITER_GENERATIONS=3 overrides `generations`, and so on for every key.
inline void apply_environment(Settings& s, const std::function<const char*(const char*)>& getenv = std::getenv) {
  for (const auto& f : detail::fields()) {
    std::string name(kEnvPrefix);
    for (const char c : f.key) name += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (const char* v = getenv(name.c_str()); v != nullptr) f.set(s, detail::trim(v));
  }
}

/// Every key with its current value, in `key = value` form.
inline std::string dump_settings(const Settings& s) {
  std::string out;
  for (const auto& f : detail::fields()) out += std::string(f.key) + " = " + f.get(s) + "\n";
  return out;
}

}  // namespace arbiter
