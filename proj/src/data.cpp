#include "infboost/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <unordered_set>

#include "infboost/error.hpp"
#include "infboost/random.hpp"

namespace infboost {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::optional<double> parse_real(std::string_view text) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  if (text.empty()) return std::nullopt;
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) return std::nullopt;
  return value;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      cells.push_back(line.substr(start));
      return cells;
    }
    cells.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::string unquote(std::string_view s) {
  s = trim(s);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return std::string(s);
}

std::ifstream open_or_throw(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path.string());
  return in;
}

void check_finite(double value, std::size_t row, const std::string& column) {
  if (!std::isfinite(value)) {
    throw DataError("non-finite value at row " + std::to_string(row) + ", column '" + column +
                    "'");
  }
}

template <typename T>
void hash_bytes(std::uint64_t& h, const T* data, std::size_t count) {
  const auto* bytes = reinterpret_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < count * sizeof(T); ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
}

}  // namespace

void QueryGroups::validate(std::size_t n_samples) const {
  if (offsets.size() != ids.size() + 1 || offsets.front() != 0) {
    throw DataError("query groups: malformed offsets");
  }
  for (std::size_t g = 0; g < size(); ++g) {
    if (offsets[g + 1] <= offsets[g]) throw DataError("query groups: empty group");
  }
  if (offsets.back() != n_samples) {
    throw DataError("query groups do not cover all " + std::to_string(n_samples) + " samples");
  }
}

Dataset::Dataset(std::vector<double> features, std::size_t n_samples, std::size_t n_features,
                 std::vector<double> targets, std::optional<QueryGroups> groups,
                 std::vector<std::string> feature_names)
    : features_(std::move(features)),
      n_samples_(n_samples),
      n_features_(n_features),
      targets_(std::move(targets)),
      groups_(std::move(groups)),
      feature_names_(std::move(feature_names)) {
  if (n_samples_ == 0) throw DataError("no samples");
  if (n_features_ == 0) throw DataError("no features");
  if (features_.size() != n_samples_ * n_features_) {
    throw DataError("feature matrix size does not match " + std::to_string(n_samples_) + "x" +
                    std::to_string(n_features_));
  }
  if (targets_.size() != n_samples_) {
    throw DataError("targets length " + std::to_string(targets_.size()) +
                    " does not match n_samples " + std::to_string(n_samples_));
  }
  if (!feature_names_.empty() && feature_names_.size() != n_features_) {
    throw DataError("feature name count does not match n_features");
  }
  for (std::size_t i = 0; i < features_.size(); ++i) {
    if (!std::isfinite(features_[i])) {
      throw DataError("non-finite feature value at row " + std::to_string(i / n_features_) +
                      ", column " + std::to_string(i % n_features_));
    }
  }
  for (std::size_t i = 0; i < targets_.size(); ++i) {
    if (!std::isfinite(targets_[i])) {
      throw DataError("non-finite target at row " + std::to_string(i));
    }
  }
  if (groups_) groups_->validate(n_samples_);
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  if (indices.empty()) throw DataError("no samples");
  std::vector<double> features;
  std::vector<double> targets;
  features.reserve(indices.size() * n_features_);
  targets.reserve(indices.size());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const std::size_t i = indices[k];
    if (i >= n_samples_ || (k > 0 && i <= indices[k - 1])) {
      throw DataError("subset indices must be ascending and in range");
    }
    const auto r = row(i);
    features.insert(features.end(), r.begin(), r.end());
    targets.push_back(targets_[i]);
  }

  std::optional<QueryGroups> groups;
  if (groups_) {
    QueryGroups sub;
    std::size_t k = 0;
    while (k < indices.size()) {
      const auto it = std::upper_bound(groups_->offsets.begin(), groups_->offsets.end(), indices[k]);
      const std::size_t g = static_cast<std::size_t>(it - groups_->offsets.begin()) - 1;
      const std::size_t len = groups_->end(g) - groups_->begin(g);
      if (indices[k] != groups_->begin(g) || k + len > indices.size() ||
          indices[k + len - 1] != groups_->end(g) - 1) {
        throw DataError("subset splits query group " + std::to_string(groups_->ids[g]));
      }
      sub.ids.push_back(groups_->ids[g]);
      k += len;
      sub.offsets.push_back(k);
    }
    groups = std::move(sub);
  }
  return Dataset(std::move(features), indices.size(), n_features_, std::move(targets),
                 std::move(groups), feature_names_);
}

Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options) {
  auto in = open_or_throw(path);
  std::string line;
  std::vector<std::string> names;
  std::size_t line_no = 0;

  if (options.has_header) {
    while (std::getline(in, line)) {
      ++line_no;
      if (!trim(line).empty()) break;
    }
    if (trim(line).empty()) throw DataError("no samples");
    for (auto cell : split_commas(trim(line))) names.push_back(unquote(cell));
  }

  std::vector<std::vector<double>> rows;
  std::size_t n_columns = names.size();
  std::size_t data_row = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto content = trim(line);
    if (content.empty()) continue;
    ++data_row;
    const auto cells = split_commas(content);
    if (n_columns == 0) n_columns = cells.size();
    if (cells.size() != n_columns) {
      throw DataError("row " + std::to_string(data_row) + " (line " + std::to_string(line_no) +
                      ") has " + std::to_string(cells.size()) + " cells, expected " +
                      std::to_string(n_columns));
    }
    std::vector<double> values(n_columns);
    for (std::size_t j = 0; j < n_columns; ++j) {
      const auto value = parse_real(cells[j]);
      const std::string column = names.empty() ? std::to_string(j) : names[j];
      if (!value) {
        throw DataError("non-numeric cell '" + std::string(trim(cells[j])) + "' at row " +
                        std::to_string(data_row) + ", column '" + column + "' (line " +
                        std::to_string(line_no) + ")");
      }
      check_finite(*value, data_row, column);
      values[j] = *value;
    }
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw DataError("no samples");
  if (names.empty()) {
    for (std::size_t j = 0; j < n_columns; ++j) names.push_back(std::to_string(j));
  }

  std::optional<std::size_t> target;
  if (options.target_column.empty()) {
    if (!options.target_optional) target = n_columns - 1;
  } else {
    const auto it = std::find(names.begin(), names.end(), options.target_column);
    if (it != names.end()) {
      target = static_cast<std::size_t>(it - names.begin());
    } else if (!options.target_optional) {
      throw DataError("target column '" + options.target_column + "' not found in " +
                      path.string());
    }
  }

  const std::size_t n_features = target ? n_columns - 1 : n_columns;
  std::vector<double> features;
  std::vector<double> targets;
  features.reserve(rows.size() * n_features);
  targets.reserve(rows.size());
  for (const auto& values : rows) {
    for (std::size_t j = 0; j < n_columns; ++j) {
      if (target && j == *target) {
        targets.push_back(values[j]);
      } else {
        features.push_back(values[j]);
      }
    }
    if (!target) targets.push_back(0.0);
  }
  std::vector<std::string> feature_names;
  for (std::size_t j = 0; j < n_columns; ++j) {
    if (!target || j != *target) feature_names.push_back(names[j]);
  }
  if (!options.has_header) feature_names.clear();
  return Dataset(std::move(features), rows.size(), n_features, std::move(targets), std::nullopt,
                 std::move(feature_names));
}

void write_csv(const Dataset& dataset, const std::filesystem::path& path,
               const std::string& target_name) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path.string());
  for (std::size_t j = 0; j < dataset.n_features(); ++j) {
    out << (dataset.feature_names().empty() ? "f" + std::to_string(j)
                                            : dataset.feature_names()[j])
        << ',';
  }
  out << target_name << '\n';
  char buffer[64];
  auto put = [&](double v) {
    const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), v);
    out.write(buffer, ptr - buffer);
  };
  for (std::size_t i = 0; i < dataset.n_samples(); ++i) {
    for (double v : dataset.row(i)) {
      put(v);
      out << ',';
    }
    put(dataset.targets()[i]);
    out << '\n';
  }
}

Dataset load_libsvm(const std::filesystem::path& path, bool ranking,
                    std::vector<std::string>* warnings, std::size_t min_features) {
  auto in = open_or_throw(path);
  struct Entry {
    std::size_t index;
    double value;
  };
  std::vector<std::vector<Entry>> rows;
  std::vector<double> targets;
  std::vector<std::int64_t> qids;
  std::size_t n_features = min_features;
  bool warned_qid = false;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view content = line;
    if (const auto hash = content.find('#'); hash != std::string_view::npos) {
      content = content.substr(0, hash);
    }
    content = trim(content);
    if (content.empty()) continue;

    std::istringstream tokens{std::string(content)};
    std::string token;
    tokens >> token;
    const auto label = parse_real(token);
    if (!label || !std::isfinite(*label)) {
      throw DataError("line " + std::to_string(line_no) + ": malformed label '" + token + "'");
    }

    std::vector<Entry> entries;
    std::optional<std::int64_t> qid;
    while (tokens >> token) {
      const auto colon = token.find(':');
      if (colon == std::string::npos || colon == 0 || colon + 1 == token.size()) {
        throw DataError("line " + std::to_string(line_no) + ": malformed pair '" + token + "'");
      }
      const std::string_view key(token.data(), colon);
      const std::string_view rest(token.data() + colon + 1, token.size() - colon - 1);
      if (key == "qid") {
        std::int64_t q = 0;
        const auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), q);
        if (ec != std::errc() || ptr != rest.data() + rest.size()) {
          throw DataError("line " + std::to_string(line_no) + ": malformed qid '" + token + "'");
        }
        qid = q;
        continue;
      }
      std::size_t index = 0;
      const auto [ptr, ec] = std::from_chars(key.data(), key.data() + key.size(), index);
      const auto value = parse_real(rest);
      if (ec != std::errc() || ptr != key.data() + key.size() || index == 0 || !value) {
        throw DataError("line " + std::to_string(line_no) + ": malformed pair '" + token + "'");
      }
      if (!std::isfinite(*value)) {
        throw DataError("line " + std::to_string(line_no) + ": non-finite value");
      }
      if (!entries.empty() && index <= entries.back().index) {
        throw DataError("line " + std::to_string(line_no) + ": indices not ascending");
      }
      entries.push_back({index, *value});
      n_features = std::max(n_features, index);
    }

    if (ranking) {
      if (!qid) throw DataError("line " + std::to_string(line_no) + ": missing qid");
      qids.push_back(*qid);
    } else if (qid && !warned_qid) {
      warned_qid = true;
      const std::string message = path.string() + ": qid present without ranking flag; ignored";
      if (warnings) {
        warnings->push_back(message);
      } else {
        std::cerr << "warning: " << message << '\n';
      }
    }
    targets.push_back(*label);
    rows.push_back(std::move(entries));
  }
  if (rows.empty()) throw DataError("no samples");
  if (n_features == 0) n_features = 1;

  std::vector<double> features(rows.size() * n_features, 0.0);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (const auto& e : rows[i]) features[i * n_features + e.index - 1] = e.value;
  }

  std::optional<QueryGroups> groups;
  if (ranking) {
    QueryGroups g;
    std::unordered_set<std::int64_t> seen;
    for (std::size_t i = 0; i < qids.size(); ++i) {
      if (i == 0 || qids[i] != qids[i - 1]) {
        if (!seen.insert(qids[i]).second) {
          throw DataError("qid " + std::to_string(qids[i]) + " is not contiguous");
        }
        if (i > 0) g.offsets.push_back(i);
        g.ids.push_back(qids[i]);
      }
    }
    g.offsets.push_back(qids.size());
    groups = std::move(g);
  }
  return Dataset(std::move(features), rows.size(), n_features, std::move(targets),
                 std::move(groups));
}

HoldoutSplit split_holdout(const Dataset& dataset, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw ConfigError("holdout fraction must lie in (0, 1)");
  }
  Rng rng(seed);
  HoldoutSplit split;
  if (const auto& groups = dataset.query_groups()) {
    const std::size_t n_groups = groups->size();
    const auto n_holdout = static_cast<std::size_t>(std::floor(fraction * n_groups + 1e-9));
    if (n_holdout == 0 || n_holdout >= n_groups) {
      throw DataError("holdout split of " + std::to_string(n_groups) +
                      " query groups leaves one side empty");
    }
    std::vector<bool> in_holdout(n_groups, false);
    for (auto g : rng.sample_without_replacement(n_groups, n_holdout)) in_holdout[g] = true;
    for (std::size_t g = 0; g < n_groups; ++g) {
      auto& side = in_holdout[g] ? split.holdout_indices : split.train_indices;
      for (std::size_t i = groups->begin(g); i < groups->end(g); ++i) side.push_back(i);
    }
    return split;
  }

  const std::size_t n = dataset.n_samples();
  const auto n_holdout = static_cast<std::size_t>(std::floor(fraction * n + 1e-9));
  if (n_holdout == 0 || n_holdout >= n) {
    throw DataError("holdout split of " + std::to_string(n) + " samples at fraction " +
                    std::to_string(fraction) + " leaves one side empty");
  }
  std::vector<bool> in_holdout(n, false);
  for (auto i : rng.sample_without_replacement(n, n_holdout)) in_holdout[i] = true;
  for (std::size_t i = 0; i < n; ++i) {
    (in_holdout[i] ? split.holdout_indices : split.train_indices).push_back(i);
  }
  return split;
}

std::uint64_t content_hash(const Dataset& dataset) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const std::uint64_t shape[2] = {dataset.n_samples(), dataset.n_features()};
  hash_bytes(h, shape, 2);
  hash_bytes(h, dataset.features().data(), dataset.features().size());
  hash_bytes(h, dataset.targets().data(), dataset.targets().size());
  if (const auto& groups = dataset.query_groups()) {
    hash_bytes(h, groups->offsets.data(), groups->offsets.size());
    hash_bytes(h, groups->ids.data(), groups->ids.size());
  }
  return h;
}

}  // namespace infboost
