#pragma once

#include "bigg/plan.hpp"

#include <CLI11.hpp>

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace bigg::cli {

/// Reads a YAML (or JSON) run config into a JSON tree.
Json load_config_file(const std::string& path);

/// Flags that override entries of the config tree when given.
class Overrides {
 public:
  template <typename T>
  CLI::Option* add(CLI::App* app, const std::string& flag, const std::string& pointer, const std::string& help) {
    auto value = std::make_shared<T>();
    CLI::Option* opt = app->add_option(flag, *value, help);
    apply_.push_back([opt, value, pointer](Json& j) {
      if (opt->count() > 0) j[Json::json_pointer(pointer)] = *value;
    });
    return opt;
  }

  CLI::Option* add_flag(CLI::App* app, const std::string& flag, const std::string& pointer, const std::string& help) {
    auto value = std::make_shared<bool>(false);
    CLI::Option* opt = app->add_flag(flag, *value, help);
    apply_.push_back([opt, value, pointer](Json& j) {
      if (opt->count() > 0) j[Json::json_pointer(pointer)] = *value;
    });
    return opt;
  }

  void apply(Json& config) const {
    for (const auto& f : apply_) f(config);
  }

 private:
  std::vector<std::function<void(Json&)>> apply_;
};

/// Value at `pointer`, or `fallback` when absent.
template <typename T>
T get_or(const Json& j, const std::string& pointer, T fallback) {
  const Json::json_pointer p(pointer);
  return j.contains(p) && !j.at(p).is_null() ? j.at(p).get<T>() : fallback;
}

}  // namespace bigg::cli
