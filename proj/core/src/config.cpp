#include "ugseg/config.hpp"

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "ugseg/errors.hpp"

namespace ugseg {
namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

double parse_double(const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  if (v.empty()) throw ConfigError("empty value for key '" + key + "'");
  char* end = nullptr;
  const double d = std::strtod(v.c_str(), &end);
  if (end != v.c_str() + v.size()) {
    throw ConfigError("cannot parse value '" + value + "' for key '" + key + "' as a number");
  }
  return d;
}

std::int64_t parse_int(const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  if (v.empty()) throw ConfigError("empty value for key '" + key + "'");
  char* end = nullptr;
  const long long i = std::strtoll(v.c_str(), &end, 10);
  if (end != v.c_str() + v.size()) {
    throw ConfigError("cannot parse value '" + value + "' for key '" + key + "' as an integer");
  }
  return static_cast<std::int64_t>(i);
}

std::uint64_t parse_uint(const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  if (v.empty()) throw ConfigError("empty value for key '" + key + "'");
  char* end = nullptr;
  const unsigned long long i = std::strtoull(v.c_str(), &end, 10);
  if (end != v.c_str() + v.size() || v[0] == '-') {
    throw ConfigError("cannot parse value '" + value + "' for key '" + key +
                      "' as an unsigned integer");
  }
  return static_cast<std::uint64_t>(i);
}

bool is_pow2(std::int64_t n) { return n > 0 && (n & (n - 1)) == 0; }

std::string fmt_double(double d) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", d);
  // Prefer the shortest representation that round-trips.
  for (int prec = 1; prec <= 16; ++prec) {
    char probe[64];
    std::snprintf(probe, sizeof probe, "%.*g", prec, d);
    if (std::strtod(probe, nullptr) == d) return probe;
  }
  return buf;
}

}  // namespace

std::string to_string(MethodVariant v) {
  switch (v) {
    case MethodVariant::kErm: return "erm";
    case MethodVariant::kFda: return "fda";
    case MethodVariant::kFdaCon: return "fda+con";
    case MethodVariant::kFull: return "full";
  }
  throw ValueError("unknown MethodVariant");
}

MethodVariant variant_from_string(const std::string& s) {
  const std::string v = trim(s);
  if (v == "erm") return MethodVariant::kErm;
  if (v == "fda") return MethodVariant::kFda;
  if (v == "fda+con" || v == "fda_con" || v == "fda-con") return MethodVariant::kFdaCon;
  if (v == "full") return MethodVariant::kFull;
  throw ConfigError("unknown method variant '" + s +
                    "' (expected one of: erm, fda, fda+con, full)");
}

void apply_key_value(TrainConfig& cfg, const std::string& raw_key, const std::string& value) {
  const std::string key = trim(raw_key);
  if (key == "epochs") cfg.epochs = parse_int(key, value);
  else if (key == "batch_size") cfg.batch_size = parse_int(key, value);
  else if (key == "learning_rate") cfg.learning_rate = parse_double(key, value);
  else if (key == "m") cfg.m = parse_double(key, value);
  else if (key == "beta_max") cfg.beta_max = parse_double(key, value);
  else if (key == "alpha") cfg.alpha = parse_double(key, value);
  else if (key == "mc_passes") cfg.mc_passes = parse_int(key, value);
  else if (key == "sigma") cfg.sigma = parse_double(key, value);
  else if (key == "dropout_rate") cfg.dropout_rate = parse_double(key, value);
  else if (key == "seed") cfg.seed = parse_uint(key, value);
  else if (key == "held_out") cfg.held_out = static_cast<int>(parse_int(key, value));
  else if (key == "variant") cfg.variant = variant_from_string(value);
  else if (key == "precision") cfg.precision = static_cast<int>(parse_int(key, value));
  else if (key == "threads") cfg.threads = static_cast<int>(parse_int(key, value));
  else if (key == "data_seed") cfg.data_seed = parse_uint(key, value);
  else if (key == "domains") cfg.domains = static_cast<int>(parse_int(key, value));
  else if (key == "per_domain") cfg.per_domain = static_cast<int>(parse_int(key, value));
  else if (key == "image_size") cfg.image_size = parse_int(key, value);
  else if (key == "ablation_seeds") cfg.ablation_seeds = static_cast<int>(parse_int(key, value));
  else throw ConfigError("unknown config key '" + key + "'");
}

TrainConfig parse_config_file(const std::string& path, TrainConfig base) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path + ":" + std::to_string(lineno) +
                        ": expected 'key = value', got '" + line + "'");
    }
    try {
      apply_key_value(base, line.substr(0, eq), line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return base;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (!(m >= 0.0 && m <= 1.0)) throw ConfigError("m must lie in [0, 1]");
  if (!(beta_max >= 0.0)) throw ConfigError("beta_max must be >= 0");
  if (!(alpha > 0.0 && alpha <= 0.5)) throw ConfigError("alpha must lie in (0, 0.5]");
  if (mc_passes < 1) throw ConfigError("mc_passes must be >= 1");
  if (!(sigma >= 0.0)) throw ConfigError("sigma must be >= 0");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw ConfigError("dropout_rate must lie in [0, 1)");
  }
  if (precision != 32 && precision != 64) throw ConfigError("precision must be 32 or 64");
  if (threads < 1) throw ConfigError("threads must be >= 1");
  if (domains < 2) throw ConfigError("domains must be >= 2");
  if (per_domain < 1) throw ConfigError("per_domain must be >= 1");
  if (image_size < 8 || !is_pow2(image_size)) {
    throw ConfigError("image_size must be a power of two >= 8");
  }
  if (held_out < 1 || held_out > domains) {
    throw ConfigError("held_out must lie in [1, domains]");
  }
  if (variant >= MethodVariant::kFdaCon && epochs < 10) {
    throw ConfigError("variants with a consistency term require epochs >= 10 "
                      "(the beta ramp-up spans epochs/10 epochs)");
  }
  if (ablation_seeds < 1) throw ConfigError("ablation_seeds must be >= 1");
}

std::string print_config(const TrainConfig& cfg) {
  std::map<std::string, std::string> kv;
  kv["epochs"] = std::to_string(cfg.epochs);
  kv["batch_size"] = std::to_string(cfg.batch_size);
  kv["learning_rate"] = fmt_double(cfg.learning_rate);
  kv["m"] = fmt_double(cfg.m);
  kv["beta_max"] = fmt_double(cfg.beta_max);
  kv["alpha"] = fmt_double(cfg.alpha);
  kv["mc_passes"] = std::to_string(cfg.mc_passes);
  kv["sigma"] = fmt_double(cfg.sigma);
  kv["dropout_rate"] = fmt_double(cfg.dropout_rate);
  kv["seed"] = std::to_string(cfg.seed);
  kv["held_out"] = std::to_string(cfg.held_out);
  kv["variant"] = to_string(cfg.variant);
  kv["precision"] = std::to_string(cfg.precision);
  kv["threads"] = std::to_string(cfg.threads);
  kv["data_seed"] = std::to_string(cfg.data_seed);
  kv["domains"] = std::to_string(cfg.domains);
  kv["per_domain"] = std::to_string(cfg.per_domain);
  kv["image_size"] = std::to_string(cfg.image_size);
  kv["ablation_seeds"] = std::to_string(cfg.ablation_seeds);
  std::ostringstream out;
  for (const auto& [k, v] : kv) out << k << " = " << v << "\n";
  return out.str();
}

}  // namespace ugseg
