#pragma once

#include <filesystem>
#include <initializer_list>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace scenplan {

/// Throws ConfigError if `obj` is not an object or has a key outside `allowed`.
void check_keys(const nlohmann::json& obj, std::string_view where, std::initializer_list<std::string_view> allowed);

const nlohmann::json& require_field(const nlohmann::json& obj, const std::string& key, std::string_view where);

template <typename T>
T get_as(const nlohmann::json& obj, const std::string& key, std::string_view where);

nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace scenplan

#include "scenplan/errors.hpp"

namespace scenplan {

template <typename T>
T get_as(const nlohmann::json& obj, const std::string& key, std::string_view where) {
  const auto& field = require_field(obj, key, where);
  try {
    return field.get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string(where) + "." + key + ": " + e.what());
  }
}

}  // namespace scenplan
