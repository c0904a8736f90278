#include "scenplan/json_util.hpp"

#include <algorithm>
#include <fstream>

#include <fmt/format.h>

namespace scenplan {

void check_keys(const nlohmann::json& obj, std::string_view where, std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) throw ConfigError(fmt::format("{}: expected a JSON object", where));
  for (const auto& item : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
      throw ConfigError(fmt::format("{}: unknown field '{}'", where, item.key()));
    }
  }
}

const nlohmann::json& require_field(const nlohmann::json& obj, const std::string& key, std::string_view where) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw ConfigError(fmt::format("{}: missing required field '{}'", where, key));
  }
  return obj.at(key);
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open '{}'", path.string()));
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

}  // namespace scenplan
