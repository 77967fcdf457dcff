#include "run_config.hpp"

#include <yaml-cpp/yaml.h>

namespace bigg::cli {

namespace {

Json scalar_to_json(const YAML::Node& n) {
  if (n.Tag() == "!") return n.as<std::string>();
  std::int64_t i = 0;
  if (YAML::convert<std::int64_t>::decode(n, i)) return i;
  double d = 0.0;
  if (YAML::convert<double>::decode(n, d)) return d;
  bool b = false;
  if (YAML::convert<bool>::decode(n, b)) return b;
  return n.as<std::string>();
}

Json to_json(const YAML::Node& n) {
  switch (n.Type()) {
    case YAML::NodeType::Map: {
      Json obj = Json::object();
      for (const auto& kv : n) obj[kv.first.as<std::string>()] = to_json(kv.second);
      return obj;
    }
    case YAML::NodeType::Sequence: {
      Json arr = Json::array();
      for (const auto& item : n) arr.push_back(to_json(item));
      return arr;
    }
    case YAML::NodeType::Scalar:
      return scalar_to_json(n);
    default:
      return nullptr;
  }
}

}  // namespace

Json load_config_file(const std::string& path) {
  YAML::Node root;
  try {
    root = YAML::LoadFile(path);
  } catch (const YAML::BadFile&) {
    throw ValidationError("cannot read config '" + path + "'");
  } catch (const YAML::Exception& e) {
    throw ValidationError("config '" + path + "': " + e.what());
  }
  Json j = to_json(root);
  if (j.is_null()) return Json::object();
  if (!j.is_object()) throw ValidationError("config '" + path + "' must be a mapping at top level");
  return j;
}

}  // namespace bigg::cli
