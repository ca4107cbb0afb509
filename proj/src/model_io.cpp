#include "infboost/model_io.hpp"

#include <fstream>
#include <sstream>

#include "infboost/error.hpp"

namespace infboost {

using nlohmann::json;

namespace {

json tree_to_json(const DecisionTree& tree) {
  json feature = json::array(), threshold = json::array(), left = json::array(),
       right = json::array(), value = json::array();
  for (const auto& node : tree.nodes()) {
    feature.push_back(node.feature);
    threshold.push_back(node.threshold);
    left.push_back(node.left);
    right.push_back(node.right);
    value.push_back(node.value);
  }
  return {{"feature", feature}, {"threshold", threshold}, {"left", left},
          {"right", right},     {"value", value}};
}

DecisionTree tree_from_json(const json& doc, std::size_t n_features) {
  const auto& feature = doc.at("feature");
  const std::size_t n = feature.size();
  for (const char* key : {"threshold", "left", "right", "value"}) {
    if (doc.at(key).size() != n) throw DataError(std::string("tree array '") + key + "' length");
  }
  std::vector<DecisionTree::Node> nodes(n);
  for (std::size_t i = 0; i < n; ++i) {
    nodes[i].feature = feature[i].get<std::int32_t>();
    nodes[i].threshold = doc["threshold"][i].get<double>();
    nodes[i].left = doc["left"][i].get<std::int32_t>();
    nodes[i].right = doc["right"][i].get<std::int32_t>();
    nodes[i].value = doc["value"][i].get<double>();
  }
  return DecisionTree(std::move(nodes), n_features);
}

}  // namespace

json tree_config_to_json(const TreeConfig& config) {
  return {{"max_depth", config.max_depth ? json(*config.max_depth) : json(nullptr)},
          {"subsample", config.subsample},
          {"max_features", config.max_features},
          {"min_samples_leaf", config.min_samples_leaf},
          {"bootstrap", config.bootstrap},
          {"seed", config.seed}};
}

TreeConfig tree_config_from_json(const json& doc) {
  TreeConfig config;
  const auto& depth = doc.at("max_depth");
  config.max_depth = depth.is_null() ? std::nullopt : std::optional<int>(depth.get<int>());
  config.subsample = doc.at("subsample").get<double>();
  config.max_features = doc.at("max_features").get<double>();
  config.min_samples_leaf = doc.at("min_samples_leaf").get<std::size_t>();
  config.bootstrap = doc.at("bootstrap").get<bool>();
  config.seed = doc.value("seed", std::uint64_t{0});
  config.validate();
  return config;
}

json model_to_json(const Ensemble& ensemble) {
  json doc;
  doc["format_version"] = kModelFormatVersion;
  doc["mode"] = to_string(ensemble.mode);
  doc["loss"] = to_string(ensemble.loss);
  doc["clip_threshold"] = ensemble.clip_threshold ? json(*ensemble.clip_threshold) : json(nullptr);
  if (ensemble.mode == Mode::gb) {
    doc["shrinkage"] = ensemble.shrinkage;
  } else {
    doc["capacity"] = ensemble.capacity;
    doc["initial_capacity"] = ensemble.initial_capacity;
  }
  doc["weighting"] = to_string(ensemble.weighting);
  doc["tree_config"] = tree_config_to_json(ensemble.tree_config);
  doc["n_features"] = ensemble.n_features;
  doc["weights"] = ensemble.weights;
  doc["capacity_trace"] = ensemble.capacity_trace;
  json trees = json::array();
  for (const auto& tree : ensemble.trees) trees.push_back(tree_to_json(tree));
  doc["trees"] = std::move(trees);
  return doc;
}

Ensemble model_from_json(const json& doc) {
  try {
    const int version = doc.at("format_version").get<int>();
    if (version != kModelFormatVersion) {
      throw DataError("unsupported model format_version " + std::to_string(version));
    }
    Ensemble e;
    e.mode = parse_mode(doc.at("mode").get<std::string>());
    e.loss = parse_loss_kind(doc.at("loss").get<std::string>());
    if (doc.contains("clip_threshold") && !doc["clip_threshold"].is_null()) {
      e.clip_threshold = doc["clip_threshold"].get<double>();
    }
    if (e.mode == Mode::gb) {
      e.shrinkage = doc.at("shrinkage").get<double>();
    } else {
      e.capacity = doc.at("capacity").get<double>();
      e.initial_capacity = doc.value("initial_capacity", e.capacity);
    }
    e.weighting = parse_weighting(doc.at("weighting").get<std::string>());
    e.tree_config = tree_config_from_json(doc.at("tree_config"));
    e.n_features = doc.at("n_features").get<std::size_t>();
    e.weights = doc.at("weights").get<std::vector<double>>();
    e.capacity_trace = doc.at("capacity_trace").get<std::vector<double>>();
    for (const auto& tree : doc.at("trees")) e.trees.push_back(tree_from_json(tree, e.n_features));
    e.validate();
    return e;
  } catch (const json::exception& ex) {
    throw DataError(std::string("malformed model document: ") + ex.what());
  } catch (const ConfigError& ex) {
    throw DataError(std::string("malformed model document: ") + ex.what());
  }
}

std::string serialize_model(const Ensemble& ensemble) { return model_to_json(ensemble).dump(); }

Ensemble deserialize_model(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& ex) {
    throw DataError(std::string("model is not valid JSON: ") + ex.what());
  }
  return model_from_json(doc);
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  auto temp = path;
  temp += ".tmp";
  {
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write file: " + temp.string());
    out << content;
    if (!out) throw DataError("write failed: " + temp.string());
  }
  std::error_code ec;
  std::filesystem::rename(temp, path, ec);
  if (ec) throw DataError("cannot rename " + temp.string() + " to " + path.string());
}

void save_model(const Ensemble& ensemble, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_model(ensemble) + "\n");
}

Ensemble load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model: " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return deserialize_model(buffer.str());
}

}  // namespace infboost
