#pragma once

#include <filesystem>
#include <string>

#include "infboost/ensemble.hpp"
#include "json.hpp"

namespace infboost {

inline constexpr int kModelFormatVersion = 1;

// {format_version, mode, loss, shrinkage|capacity, weighting, tree_config,
//  n_features, weights[], capacity_trace[], trees[]}; each tree is stored as
// parallel node arrays (feature, threshold, left, right, value).
nlohmann::json model_to_json(const Ensemble& ensemble);
Ensemble model_from_json(const nlohmann::json& document);

nlohmann::json tree_config_to_json(const TreeConfig& config);
TreeConfig tree_config_from_json(const nlohmann::json& document);

std::string serialize_model(const Ensemble& ensemble);
Ensemble deserialize_model(const std::string& text);

void save_model(const Ensemble& ensemble, const std::filesystem::path& path);
Ensemble load_model(const std::filesystem::path& path);

// Writes `content` to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace infboost
