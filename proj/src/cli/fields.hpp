#pragma once

#include <set>
#include <string>
#include <vector>

#include "subkalman/cli.hpp"

namespace subkalman::cli::detail {

// Typed access to a JSON object that remembers which keys were read, so that
// leftovers (usually typos) can be reported.
class Fields {
 public:
  Fields(const nlohmann::json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(path_, "expected an object");
  }

  bool has(const std::string& key) const { return obj_.contains(key); }
  std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  template <class T>
  T get(const std::string& key, T fallback) {
    used_.insert(key);
    if (!obj_.contains(key)) return fallback;
    return convert<T>(obj_.at(key), where(key));
  }

  template <class T>
  T require(const std::string& key) {
    used_.insert(key);
    if (!obj_.contains(key)) throw ConfigError(where(key), "required field is missing");
    return convert<T>(obj_.at(key), where(key));
  }

  const nlohmann::json& raw(const std::string& key) {
    used_.insert(key);
    return obj_.at(key);
  }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (!used_.count(it.key())) throw ConfigError(where(it.key()), "unknown field");
    }
  }

 private:
  template <class T>
  static T convert(const nlohmann::json& v, const std::string& where) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(where, "expected true or false");
      return v.get<bool>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(where, "expected a string");
      return v.get<std::string>();
    } else if constexpr (std::is_same_v<T, double>) {
      if (!v.is_number()) throw ConfigError(where, "expected a number");
      return v.get<double>();
    } else if constexpr (std::is_same_v<T, std::vector<std::size_t>>) {
      if (!v.is_array()) throw ConfigError(where, "expected an array of non-negative integers");
      std::vector<std::size_t> out;
      for (std::size_t i = 0; i < v.size(); ++i) {
        out.push_back(convert<std::size_t>(v[i], where + "[" + std::to_string(i) + "]"));
      }
      return out;
    } else {
      static_assert(std::is_integral_v<T>);
      if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0)) {
        throw ConfigError(where, "expected a non-negative integer");
      }
      return static_cast<T>(v.get<unsigned long long>());
    }
  }

  const nlohmann::json& obj_;
  std::string path_;
  std::set<std::string> used_;
};

}  // namespace subkalman::cli::detail
