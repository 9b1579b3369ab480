#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>

#include "aop/experts/model.hpp"
#include "aop/training/training.hpp"
#include "aop/transformer/config.hpp"

namespace aop::cli {

// Flat key/value run settings. Later layers override earlier ones:
// preset < config file < command-line flags.
class RunConfig {
 public:
  static const std::set<std::string>& keys();

  // desk: d = d_model = 64, 2 heads of depth 16, filter 128, r = 4, batch 16
  // plus the synthetic-corpus training recipe. paper: the full-scale configuration.
  static RunConfig preset(const std::string& name);

  // `key = value` lines; '#' starts a comment. ParseError with the line number
  // for malformed lines or unknown keys.
  void merge_file(const std::filesystem::path& path);
  void set(const std::string& key, const std::string& value, bool explicit_setting = true);

  const std::string& get(const std::string& key) const;  // LookupError when unset
  bool is_explicit(const std::string& key) const { return explicit_.count(key) > 0; }
  const std::map<std::string, std::string>& values() const { return values_; }

  std::size_t size_value(const std::string& key) const;
  double real_value(const std::string& key) const;
  bool flag_value(const std::string& key) const;

  transformer::ModelConfig model_config() const;
  training::TrainConfig train_config() const;
  experts::ModelOptions model_options() const;
  experts::Variant variant() const;
  std::uint64_t seed() const;

  // "key = value" lines in key order.
  std::string echo() const;

 private:
  std::map<std::string, std::string> values_;
  std::set<std::string> explicit_;
};

}  // namespace aop::cli
