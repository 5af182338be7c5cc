#pragma once

#include <cstdint>
#include <string>

namespace ugseg {

/// Table-3 ablation rows, strictly monotone: each variant enables every
/// component of the previous one plus one more.
enum class MethodVariant { kErm = 0, kFda = 1, kFdaCon = 2, kFull = 3 };

std::string to_string(MethodVariant v);
MethodVariant variant_from_string(const std::string& s);

struct TrainConfig {
  std::int64_t epochs = 30;
  std::int64_t batch_size = 8;
  double learning_rate = 1e-4;
  double m = 0.99;
  double beta_max = 200.0;
  double alpha = 0.1;
  std::int64_t mc_passes = 8;  // T of Eq. 9
  double sigma = 0.1;
  double dropout_rate = 0.1;
  std::uint64_t seed = 1;
  int held_out = 1;
  MethodVariant variant = MethodVariant::kFull;
  int precision = 32;  // 32 or 64
  int threads = 1;

  // Synthetic-benchmark knobs (used when data is generated in-process).
  std::uint64_t data_seed = 9001;
  int domains = 4;
  int per_domain = 60;
  std::int64_t image_size = 64;
  int ablation_seeds = 3;

  void validate() const;  // throws ConfigError
};

/// Applies one `key = value` assignment; throws ConfigError on unknown keys
/// or unparsable values.
void apply_key_value(TrainConfig& cfg, const std::string& key, const std::string& value);

/// Flat UTF-8 `key = value` file; blank lines and #-comments are ignored.
TrainConfig parse_config_file(const std::string& path, TrainConfig base = {});

/// Resolved config as sorted `key = value` lines (the --print-config body).
std::string print_config(const TrainConfig& cfg);

}  // namespace ugseg
