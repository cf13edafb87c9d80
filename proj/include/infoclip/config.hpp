#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>

#include "infoclip/entropy.hpp"
#include "infoclip/errors.hpp"
#include "infoclip/gram.hpp"
#include "infoclip/synth.hpp"

namespace infoclip {

/// Parsed run configuration: the training knobs plus the entropy estimator
/// settings that entropy-valued diagnostics and CLI readers share.
struct RunConfig {
  TrainConfig train;
  EntropySpec entropy;
  NormalizationMode norm = NormalizationMode::Trace;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

inline double parse_double(std::string_view v, int line) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw InputError("config line " + std::to_string(line) + ": not a real number: \"" +
                     std::string(v) + "\"");
  return out;
}

inline std::uint64_t parse_uint(std::string_view v, int line) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw InputError("config line " + std::to_string(line) + ": not a non-negative integer: \"" +
                     std::string(v) + "\"");
  return out;
}

inline bool parse_bool(std::string_view v, int line) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw InputError("config line " + std::to_string(line) + ": expected true/false, got \"" +
                   std::string(v) + "\"");
}

} // namespace detail

/// Line-oriented key=value text. '#' starts a comment, blank lines are
/// skipped, every key has a default, unknown or repeated keys are errors.
inline RunConfig parse_config_text(const std::string& text) {
  using detail::parse_bool;
  using detail::parse_double;
  using detail::parse_uint;

  RunConfig cfg;
  std::set<std::string> used;
  std::istringstream lines(text);
  std::string raw;
  int line = 0;
  while (std::getline(lines, raw)) {
    ++line;
    std::string_view s = raw;
    if (const auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
    s = detail::trim(s);
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string_view::npos)
      throw InputError("config line " + std::to_string(line) + ": expected key=value");
    const std::string key{detail::trim(s.substr(0, eq))};
    const std::string_view val = detail::trim(s.substr(eq + 1));
    if (key.empty())
      throw InputError("config line " + std::to_string(line) + ": empty key");
    if (!used.insert(key).second)
      throw InputError("config line " + std::to_string(line) + ": duplicate key \"" + key + "\"");

    TrainConfig& t = cfg.train;
    if (key == "seed") t.seed = parse_uint(val, line);
    else if (key == "steps") t.steps = static_cast<std::size_t>(parse_uint(val, line));
    else if (key == "learning_rate") t.learning_rate = parse_double(val, line);
    else if (key == "batch_pairs") t.batch_pairs = static_cast<std::size_t>(parse_uint(val, line));
    else if (key == "lambda1") t.lambda1 = parse_double(val, line);
    else if (key == "lambda2") t.lambda2 = parse_double(val, line);
    else if (key == "grid_h") t.grid_h = static_cast<std::size_t>(parse_uint(val, line));
    else if (key == "grid_w") t.grid_w = static_cast<std::size_t>(parse_uint(val, line));
    else if (key == "num_classes") t.num_classes = static_cast<std::size_t>(parse_uint(val, line));
    else if (key == "dim") t.dim = static_cast<std::size_t>(parse_uint(val, line));
    else if (key == "noise_sigma") t.noise_sigma = parse_double(val, line);
    else if (key == "seen_fraction") t.seen_fraction = parse_double(val, line);
    else if (key == "adapter_noise") t.adapter_noise = parse_double(val, line);
    else if (key == "task_weight") t.task_weight = parse_double(val, line);
    else if (key == "eval_scenes") t.eval_scenes = static_cast<std::size_t>(parse_uint(val, line));
    else if (key == "include_teacher_entropy") t.include_teacher_entropy = parse_bool(val, line);
    else if (key == "optimizer") {
      if (val == "sgd") t.optimizer = Optimizer::Sgd;
      else if (val == "adam") t.optimizer = Optimizer::Adam;
      else
        throw InputError("config line " + std::to_string(line) +
                         ": optimizer must be sgd or adam, got \"" + std::string(val) + "\"");
    } else if (key == "alpha") {
      cfg.entropy.alpha = parse_double(val, line);
    } else if (key == "method") {
      if (val == "eigen") cfg.entropy.method = EntropyMethod::Eigen;
      else if (val == "frobenius") cfg.entropy.method = EntropyMethod::Frobenius;
      else
        throw InputError("config line " + std::to_string(line) +
                         ": method must be eigen or frobenius, got \"" + std::string(val) + "\"");
    } else if (key == "norm") {
      if (val == "trace") cfg.norm = NormalizationMode::Trace;
      else if (val == "diagonal") cfg.norm = NormalizationMode::Diagonal;
      else
        throw InputError("config line " + std::to_string(line) +
                         ": norm must be trace or diagonal, got \"" + std::string(val) + "\"");
    } else {
      throw InputError("config line " + std::to_string(line) + ": unknown key \"" + key + "\"");
    }
  }

  validate_config(cfg.train);
  detail::validate_entropy_spec(cfg.entropy);
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

} // namespace infoclip
