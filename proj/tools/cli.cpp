#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "infboost/data.hpp"
#include "infboost/diagnostics.hpp"
#include "infboost/ensemble.hpp"
#include "infboost/error.hpp"
#include "infboost/metrics.hpp"
#include "infboost/model_io.hpp"
#include "infboost/version.hpp"
#include "json.hpp"

namespace infboost::cli {

namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string format_real(double v) {
  char buffer[64];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), v);
  return std::string(buffer, ptr);
}

std::string hex64(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << v;
  return s.str();
}

struct DataOptions {
  std::string format = "auto";
  std::string target;
  bool no_header = false;
  bool ranking = false;

  void add_to(CLI::App& app) {
    app.add_option("--format", format, "Input format")
        ->check(CLI::IsMember({"auto", "csv", "libsvm"}));
    app.add_option("--target", target, "CSV target column (default: last column)");
    app.add_flag("--no-header", no_header, "CSV files have no header row");
    app.add_flag("--ranking", ranking, "Read qid fields of LibSVM files as query groups");
  }
};

bool is_csv(const std::filesystem::path& path, const DataOptions& options) {
  if (options.format != "auto") return options.format == "csv";
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".csv";
}

Dataset load_dataset(const std::string& path, const DataOptions& options, bool ranking,
                     std::size_t min_features = 0) {
  if (is_csv(path, options)) {
    if (ranking) throw ConfigError("ranking data must be given in LibSVM format with qid fields");
    return load_csv(path, {options.target, !options.no_header, false});
  }
  return load_libsvm(path, ranking || options.ranking, nullptr, min_features);
}

// Prediction inputs may or may not carry the target column.
Dataset load_prediction_input(const std::string& path, const DataOptions& options,
                              std::size_t n_features) {
  Dataset data = [&] {
    if (!is_csv(path, options)) return load_libsvm(path, options.ranking, nullptr, n_features);
    if (!options.target.empty()) {
      return load_csv(path, {options.target, !options.no_header, true});
    }
    auto all = load_csv(path, {"", !options.no_header, true});
    if (all.n_features() == n_features + 1) {
      return load_csv(path, {"", !options.no_header, false});
    }
    return all;
  }();
  if (data.n_features() != n_features) {
    throw DataError("feature count mismatch: model expects " + std::to_string(n_features) +
                    " features, data has " + std::to_string(data.n_features()));
  }
  return data;
}

json fingerprint(const std::string& role, const std::string& path, const Dataset& data) {
  return {{"role", role},
          {"path", path},
          {"n_samples", data.n_samples()},
          {"n_features", data.n_features()},
          {"query_groups", data.has_query_groups() ? data.query_groups()->size() : 0},
          {"content_hash", hex64(content_hash(data))}};
}

struct TrainOptions {
  std::string mode;
  std::string loss = "mse";
  std::size_t trees = 100;
  std::optional<double> capacity;
  std::optional<double> shrinkage;
  std::string weighting = "linear";
  std::optional<double> holdout_fraction;
  std::optional<double> subsample;
  std::optional<double> max_features;
  std::optional<std::string> max_depth;
  std::optional<std::size_t> min_samples_leaf;
  std::optional<std::string> bootstrap;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  double noise_sigma = 0.0;
  std::optional<double> clip_threshold;

  void add_to(CLI::App& app) {
    app.add_option("--mode", mode, "gb | infinite | infinite-adaptive | forest")
        ->required()
        ->check(CLI::IsMember({"gb", "infinite", "infinite-adaptive", "forest"}));
    app.add_option("--loss", loss, "mse | logloss | rank")
        ->check(CLI::IsMember({"mse", "logloss", "rank"}));
    app.add_option("--trees", trees, "Number of trees");
    app.add_option("--capacity", capacity, "Ensemble capacity (infinite mode)");
    app.add_option("--shrinkage", shrinkage, "Learning rate (gb mode)");
    app.add_option("--weighting", weighting, "Tree weighting: uniform | linear")
        ->check(CLI::IsMember({"uniform", "linear"}));
    app.add_option("--holdout-fraction", holdout_fraction,
                   "Capacity holdout fraction (infinite-adaptive, default 0.05)");
    app.add_option("--subsample", subsample, "Row subsample per tree (default 0.7)");
    app.add_option("--max-features", max_features, "Feature fraction per node (default 0.7)");
    app.add_option("--max-depth", max_depth,
                   "Depth limit or 'none' (default 7; forest: none)");
    app.add_option("--min-samples-leaf", min_samples_leaf, "Minimum rows per leaf (default 1)");
    app.add_option("--bootstrap", bootstrap, "Bootstrap rows: on | off (forest default: on)")
        ->check(CLI::IsMember({"on", "off"}));
    app.add_option("--seed", seed, "Random seed");
    app.add_option("--threads", threads, "Worker threads for prediction and probes")
        ->check(CLI::PositiveNumber);
    app.add_option("--noise-sigma", noise_sigma,
                   "Gaussian noise added to scores before each gradient (default 0)");
    app.add_option("--clip-threshold", clip_threshold,
                   "Gradient clipping threshold; 0 disables (default: loss-specific)");
  }

  BoostConfig resolve() const {
    const Mode m = parse_mode(mode);
    BoostConfig config = BoostConfig::defaults_for(m);
    config.loss = parse_loss_kind(loss);
    config.n_trees = trees;
    config.capacity = capacity;
    config.shrinkage = shrinkage;
    config.weighting = parse_weighting(weighting);
    if (holdout_fraction) {
      if (m != Mode::infinite_adaptive) {
        throw ConfigError("--holdout-fraction only applies to infinite-adaptive mode");
      }
      config.holdout_fraction = *holdout_fraction;
    }
    if (subsample) config.tree.subsample = *subsample;
    if (max_features) config.tree.max_features = *max_features;
    if (min_samples_leaf) config.tree.min_samples_leaf = *min_samples_leaf;
    if (max_depth) {
      if (*max_depth == "none" || *max_depth == "unlimited") {
        config.tree.max_depth = std::nullopt;
      } else {
        int depth = 0;
        const auto& text = *max_depth;
        const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), depth);
        if (ec != std::errc() || ptr != text.data() + text.size() || depth < 0) {
          throw ConfigError("--max-depth must be a non-negative integer or 'none'");
        }
        config.tree.max_depth = depth;
      }
    }
    if (bootstrap) config.tree.bootstrap = *bootstrap == "on";
    if (config.tree.bootstrap && subsample) {
      throw ConfigError("--subsample conflicts with bootstrap sampling");
    }
    config.seed = seed;
    config.tree.seed = seed;
    config.threads = threads;
    config.noise_sigma = noise_sigma;
    if (noise_sigma > 0.0 && m == Mode::forest) {
      throw ConfigError("--noise-sigma does not apply to forest mode");
    }
    config.clip_threshold = clip_threshold;
    config.validate();
    return config;
  }
};

json config_to_json(const BoostConfig& config) {
  const auto loss = config.loss_function();
  json doc = {{"mode", to_string(config.mode)},
              {"loss", to_string(config.loss)},
              {"trees", config.n_trees},
              {"weighting", to_string(config.weighting)},
              {"seed", config.seed},
              {"threads", config.threads},
              {"noise_sigma", config.noise_sigma},
              {"clip_threshold", loss.clip_threshold ? json(*loss.clip_threshold) : json(nullptr)},
              {"tree_config", tree_config_to_json(config.tree)}};
  switch (config.mode) {
    case Mode::gb: doc["shrinkage"] = *config.shrinkage; break;
    case Mode::infinite: doc["capacity"] = *config.capacity; break;
    case Mode::infinite_adaptive:
      doc["initial_capacity"] = kAdaptiveInitialCapacity;
      doc["holdout_fraction"] = config.holdout_fraction;
      break;
    case Mode::forest: break;
  }
  return doc;
}

json manifest(const std::string& command, const BoostConfig& config, json datasets,
              json timings) {
  return {{"tool", "infboost"},
          {"version", kVersion},
          {"command", command},
          {"seed", config.seed},
          {"config", config_to_json(config)},
          {"datasets", std::move(datasets)},
          {"timings", std::move(timings)}};
}

void write_manifest(const std::string& output_path, const json& doc) {
  write_file_atomic(output_path + ".manifest.json", doc.dump(2) + "\n");
}

void check_metric_compatible(const std::string& metric, const Dataset& data) {
  if (metric == "auc") {
    for (double y : data.targets()) {
      if (y != 0.0 && y != 1.0 && y != -1.0) {
        throw ConfigError("metric auc requires binary {0,1} targets");
      }
    }
  } else if (metric.rfind("ndcg", 0) == 0 && !data.has_query_groups()) {
    throw ConfigError("metric " + metric + " requires query groups (LibSVM qid data)");
  }
}

std::string default_metric(LossKind loss) {
  switch (loss) {
    case LossKind::logistic: return "auc";
    case LossKind::pairwise_rank: return "ndcg@10";
    default: return "mse";
  }
}

int cmd_train(const std::string& data_path, const DataOptions& data_options,
              const TrainOptions& train_options, const std::string& out_path, std::ostream& out) {
  const auto config = train_options.resolve();
  const auto start = Clock::now();
  const auto data =
      load_dataset(data_path, data_options, config.loss == LossKind::pairwise_rank);
  const double load_seconds = seconds_since(start);
  const auto train_start = Clock::now();
  const auto ensemble = train(data, config);
  const double train_seconds = seconds_since(train_start);
  save_model(ensemble, out_path);
  write_manifest(out_path, manifest("train", config, json::array({fingerprint("train", data_path, data)}),
                                    {{"load_seconds", load_seconds},
                                     {"train_seconds", train_seconds}}));
  out << "trained " << ensemble.size() << " trees (" << to_string(config.mode) << ") -> "
      << out_path << '\n';
  return kSuccess;
}

int cmd_predict(const std::string& model_path, const std::string& data_path,
                const DataOptions& data_options, const std::string& out_path, bool proba,
                std::size_t threads, std::ostream& out) {
  const auto ensemble = load_model(model_path);
  if (proba && ensemble.loss != LossKind::logistic) {
    throw ConfigError("--proba requires a logloss model");
  }
  const auto data = load_prediction_input(data_path, data_options, ensemble.n_features);
  const auto values =
      proba ? predict_proba(ensemble, data, threads) : predict(ensemble, data, threads);
  std::string text;
  for (double v : values) {
    text += format_real(v);
    text += '\n';
  }
  if (out_path.empty()) {
    out << text;
  } else {
    write_file_atomic(out_path, text);
  }
  return kSuccess;
}

int cmd_evaluate(const std::string& model_path, const std::string& data_path,
                 const DataOptions& data_options, std::string metric, std::size_t threads,
                 std::ostream& out) {
  const auto ensemble = load_model(model_path);
  if (metric.empty()) metric = default_metric(ensemble.loss);
  const bool ranking = metric.rfind("ndcg", 0) == 0;
  const auto data = load_dataset(data_path, data_options, ranking, ensemble.n_features);
  check_metric_compatible(metric, data);
  const auto scores = predict(ensemble, data, threads);
  const auto result = evaluate_metric(metric, data, scores);
  out << "metric,value,count\n"
      << result.name << ',' << format_real(result.value) << ',' << result.count << '\n';
  return kSuccess;
}

int cmd_curve(const std::string& train_path, const std::string& test_path,
              const DataOptions& data_options, const TrainOptions& train_options,
              std::string metric, std::size_t step, const std::string& out_path,
              std::ostream& out) {
  const auto config = train_options.resolve();
  if (step < 1) throw ConfigError("--step must be >= 1");
  if (metric.empty()) metric = default_metric(config.loss);
  const bool ranking =
      config.loss == LossKind::pairwise_rank || metric.rfind("ndcg", 0) == 0;
  const auto start = Clock::now();
  const auto train_data = load_dataset(train_path, data_options, ranking);
  const auto test_data =
      load_dataset(test_path, data_options, ranking, train_data.n_features());
  if (test_data.n_features() != train_data.n_features()) {
    throw DataError("feature count mismatch: train has " +
                    std::to_string(train_data.n_features()) + " features, test has " +
                    std::to_string(test_data.n_features()));
  }
  check_metric_compatible(metric, train_data);
  check_metric_compatible(metric, test_data);
  const double load_seconds = seconds_since(start);

  const auto train_start = Clock::now();
  const auto ensemble = train(train_data, config);
  const double train_seconds = seconds_since(train_start);

  const auto train_stages = staged_predict(ensemble, train_data, step);
  const auto test_stages = staged_predict(ensemble, test_data, step);
  std::string csv = "iteration,train_metric,test_metric\n";
  for (std::size_t s = 0; s < train_stages.size(); ++s) {
    csv += std::to_string(train_stages[s].iteration) + ',' +
           format_real(evaluate_metric(metric, train_data, train_stages[s].predictions).value) +
           ',' +
           format_real(evaluate_metric(metric, test_data, test_stages[s].predictions).value) +
           '\n';
  }
  if (out_path.empty()) {
    out << csv;
    return kSuccess;
  }
  write_file_atomic(out_path, csv);
  auto doc = manifest("curve", config,
                      json::array({fingerprint("train", train_path, train_data),
                                   fingerprint("test", test_path, test_data)}),
                      {{"load_seconds", load_seconds}, {"train_seconds", train_seconds}});
  doc["metric"] = metric;
  doc["step"] = step;
  write_manifest(out_path, doc);
  out << "wrote " << train_stages.size() << " curve rows -> " << out_path << '\n';
  return kSuccess;
}

int cmd_diagnose(const std::string& data_path, const DataOptions& data_options,
                 const TrainOptions& train_options, std::size_t probe_every,
                 std::size_t probe_trees, const std::string& out_path, std::ostream& out) {
  const auto config = train_options.resolve();
  const auto start = Clock::now();
  const auto data =
      load_dataset(data_path, data_options, config.loss == LossKind::pairwise_rank);
  const double load_seconds = seconds_since(start);
  const auto trace_start = Clock::now();
  const auto rows = convergence_trace(config, data, probe_every, probe_trees);
  const double trace_seconds = seconds_since(trace_start);
  std::ostringstream csv;
  write_trace_csv(csv, rows);
  if (out_path.empty()) {
    out << csv.str();
    return kSuccess;
  }
  write_file_atomic(out_path, csv.str());
  auto doc = manifest("diagnose", config, json::array({fingerprint("train", data_path, data)}),
                      {{"load_seconds", load_seconds}, {"trace_seconds", trace_seconds}});
  doc["probe_every"] = probe_every;
  doc["probe_trees"] = probe_trees;
  write_manifest(out_path, doc);
  out << "wrote " << rows.size() << " trace rows -> " << out_path << '\n';
  return kSuccess;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Gradient boosting, InfiniteBoost and random forests over regression trees",
               "infboost"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  DataOptions data_options;
  TrainOptions train_options;
  std::string data_path, model_path, out_path, train_path, test_path, metric;
  bool proba = false;
  std::size_t threads = 1;
  std::size_t step = 10;
  std::size_t probe_every = 10;
  std::size_t probe_trees = 32;

  auto* train_cmd = app.add_subcommand("train", "Train a model and write it as JSON");
  train_cmd->add_option("--data", data_path, "Training data (CSV or LibSVM)")->required();
  train_cmd->add_option("--out,--model", out_path, "Model output path")->required();
  data_options.add_to(*train_cmd);
  train_options.add_to(*train_cmd);

  auto* predict_cmd = app.add_subcommand("predict", "Write one prediction per line");
  predict_cmd->add_option("--model", model_path, "Model JSON")->required();
  predict_cmd->add_option("--data", data_path, "Input data")->required();
  predict_cmd->add_option("--out", out_path, "Output file (default: stdout)");
  predict_cmd->add_flag("--proba", proba, "Sigmoid-transform logloss scores");
  predict_cmd->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  data_options.add_to(*predict_cmd);

  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score a model on labelled data");
  evaluate_cmd->add_option("--model", model_path, "Model JSON")->required();
  evaluate_cmd->add_option("--data", data_path, "Labelled data")->required();
  evaluate_cmd->add_option("--metric", metric, "mse | auc | ndcg@K (default by loss)");
  evaluate_cmd->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  data_options.add_to(*evaluate_cmd);

  auto* curve_cmd = app.add_subcommand("curve", "Learning curve CSV via staged predictions");
  curve_cmd->add_option("--train", train_path, "Training data")->required();
  curve_cmd->add_option("--test", test_path, "Test data")->required();
  curve_cmd->add_option("--metric", metric, "mse | auc | ndcg@K (default by loss)");
  curve_cmd->add_option("--step", step, "Iterations between curve points")
      ->check(CLI::PositiveNumber);
  curve_cmd->add_option("--out", out_path, "CSV output path (default: stdout)");
  data_options.add_to(*curve_cmd);
  train_options.add_to(*curve_cmd);

  auto* diagnose_cmd =
      app.add_subcommand("diagnose", "Fixed-point residual and objective trace CSV");
  diagnose_cmd->add_option("--data", data_path, "Training data")->required();
  diagnose_cmd->add_option("--probe-every", probe_every, "Iterations between probes")
      ->check(CLI::PositiveNumber);
  diagnose_cmd->add_option("--probe-trees", probe_trees, "Probe trees per residual estimate")
      ->check(CLI::PositiveNumber);
  diagnose_cmd->add_option("--out", out_path, "CSV output path (default: stdout)");
  data_options.add_to(*diagnose_cmd);
  train_options.add_to(*diagnose_cmd);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kUsage;
  }

  try {
    if (*train_cmd) return cmd_train(data_path, data_options, train_options, out_path, out);
    if (*predict_cmd) {
      return cmd_predict(model_path, data_path, data_options, out_path, proba, threads, out);
    }
    if (*evaluate_cmd) {
      return cmd_evaluate(model_path, data_path, data_options, metric, threads, out);
    }
    if (*curve_cmd) {
      return cmd_curve(train_path, test_path, data_options, train_options, metric, step,
                       out_path, out);
    }
    if (*diagnose_cmd) {
      return cmd_diagnose(data_path, data_options, train_options, probe_every, probe_trees,
                          out_path, out);
    }
  } catch (const ConfigError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kData;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return kNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUnexpected;
  }
  return kUsage;
}

}  // namespace infboost::cli
