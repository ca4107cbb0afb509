#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace infboost {

// Partition of sample indices into contiguous query groups:
// group g covers [offsets[g], offsets[g + 1]).
struct QueryGroups {
  std::vector<std::size_t> offsets{0};
  std::vector<std::int64_t> ids;

  std::size_t size() const { return ids.size(); }
  std::size_t begin(std::size_t g) const { return offsets[g]; }
  std::size_t end(std::size_t g) const { return offsets[g + 1]; }

  // Throws DataError unless the groups partition exactly {0..n_samples-1}.
  void validate(std::size_t n_samples) const;
};

// Dense feature matrix (row-major) with targets and optional query groups.
// Immutable once constructed.
class Dataset {
 public:
  Dataset(std::vector<double> features, std::size_t n_samples, std::size_t n_features,
          std::vector<double> targets, std::optional<QueryGroups> groups = std::nullopt,
          std::vector<std::string> feature_names = {});

  std::size_t n_samples() const { return n_samples_; }
  std::size_t n_features() const { return n_features_; }

  std::span<const double> features() const { return features_; }
  std::span<const double> row(std::size_t i) const {
    return {features_.data() + i * n_features_, n_features_};
  }
  double feature(std::size_t i, std::size_t j) const { return features_[i * n_features_ + j]; }

  std::span<const double> targets() const { return targets_; }
  const std::optional<QueryGroups>& query_groups() const { return groups_; }
  bool has_query_groups() const { return groups_.has_value(); }

  // Names for the feature columns; empty when the source had none.
  const std::vector<std::string>& feature_names() const { return feature_names_; }

  // Rows at the given ascending indices. When query groups are present, the
  // indices must cover whole groups.
  Dataset subset(std::span<const std::size_t> indices) const;

 private:
  std::vector<double> features_;
  std::size_t n_samples_;
  std::size_t n_features_;
  std::vector<double> targets_;
  std::optional<QueryGroups> groups_;
  std::vector<std::string> feature_names_;
};

struct CsvOptions {
  // Target column name (header) or 0-based column index (no header).
  // Empty selects the last column.
  std::string target_column;
  bool has_header = true;
  // When set, a missing target column is not an error: all columns become
  // features and targets are zero. Used for prediction inputs.
  bool target_optional = false;
};

Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options = {});

// Writes features followed by the target column, with shortest round-trip
// formatting of every real.
void write_csv(const Dataset& dataset, const std::filesystem::path& path,
               const std::string& target_name = "y");

// Sparse "<label> [qid:<q>] <idx>:<val> ..." lines, 1-based ascending indices.
// Without `ranking`, qid fields are ignored and a warning is emitted into
// `warnings` (or stderr when null).
Dataset load_libsvm(const std::filesystem::path& path, bool ranking,
                    std::vector<std::string>* warnings = nullptr,
                    std::size_t min_features = 0);

struct HoldoutSplit {
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> holdout_indices;
};

// Seeded uniform split. Datasets with query groups are split by whole groups.
HoldoutSplit split_holdout(const Dataset& dataset, double fraction, std::uint64_t seed);

// FNV-1a over shape, features, targets and group layout.
std::uint64_t content_hash(const Dataset& dataset);

}  // namespace infboost
