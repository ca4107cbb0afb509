#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "infboost/data.hpp"
#include "infboost/diagnostics.hpp"
#include "infboost/ensemble.hpp"
#include "infboost/error.hpp"
#include "infboost/loss.hpp"
#include "infboost/metrics.hpp"
#include "infboost/model_io.hpp"
#include "infboost/tree.hpp"
#include "infboost/version.hpp"

namespace py = pybind11;
using namespace infboost;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Array to_numpy(const std::vector<double>& values) {
  Array out(static_cast<py::ssize_t>(values.size()));
  std::copy(values.begin(), values.end(), out.mutable_data());
  return out;
}

std::vector<double> to_vector(const Array& a) {
  return std::vector<double>(a.data(), a.data() + a.size());
}

// Query groups from a per-row qid array; rows of a group must be contiguous.
QueryGroups groups_from_qid(const py::array_t<std::int64_t, py::array::c_style | py::array::forcecast>& qid) {
  QueryGroups groups;
  const auto* q = qid.data();
  for (py::ssize_t i = 0; i < qid.size(); ++i) {
    if (i == 0 || q[i] != q[i - 1]) {
      if (i > 0) groups.offsets.push_back(static_cast<std::size_t>(i));
      groups.ids.push_back(q[i]);
    }
  }
  if (qid.size() > 0) groups.offsets.push_back(static_cast<std::size_t>(qid.size()));
  return groups;
}

Dataset make_dataset(const Array& x, const Array& y, const py::object& qid,
                     std::vector<std::string> names) {
  if (x.ndim() != 2) throw DataError("X must be a 2-D array");
  if (y.ndim() != 1) throw DataError("y must be a 1-D array");
  std::optional<QueryGroups> groups;
  if (!qid.is_none()) {
    groups = groups_from_qid(qid.cast<py::array_t<std::int64_t, py::array::c_style | py::array::forcecast>>());
  }
  return Dataset(to_vector(x), static_cast<std::size_t>(x.shape(0)),
                 static_cast<std::size_t>(x.shape(1)), to_vector(y), std::move(groups),
                 std::move(names));
}

BoostConfig make_config(const std::string& mode, const std::string& loss, std::size_t n_trees,
                        std::optional<double> shrinkage, std::optional<double> capacity,
                        const std::string& weighting, double holdout_fraction,
                        std::uint64_t seed, const py::object& max_depth,
                        std::optional<double> subsample, std::optional<double> max_features,
                        std::size_t min_samples_leaf, std::optional<bool> bootstrap,
                        std::optional<double> clip_threshold, double noise_sigma,
                        std::size_t threads) {
  auto config = BoostConfig::defaults_for(parse_mode(mode));
  config.loss = parse_loss_kind(loss);
  config.n_trees = n_trees;
  config.shrinkage = shrinkage;
  config.capacity = capacity;
  config.weighting = parse_weighting(weighting);
  config.holdout_fraction = holdout_fraction;
  config.seed = seed;
  config.tree.seed = seed;
  if (py::isinstance<py::str>(max_depth)) {
    if (max_depth.cast<std::string>() != "none") throw ConfigError("max_depth must be an int or None");
    config.tree.max_depth = std::nullopt;
  } else if (max_depth.is_none()) {
    config.tree.max_depth = std::nullopt;
  } else if (!py::isinstance<py::ellipsis>(max_depth)) {
    config.tree.max_depth = max_depth.cast<int>();
  }
  if (subsample) config.tree.subsample = *subsample;
  if (max_features) config.tree.max_features = *max_features;
  config.tree.min_samples_leaf = min_samples_leaf;
  if (bootstrap) config.tree.bootstrap = *bootstrap;
  config.clip_threshold = clip_threshold;
  config.noise_sigma = noise_sigma;
  config.threads = threads;
  config.validate();
  return config;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Gradient boosting, InfiniteBoost and random forests over regression trees";
  m.attr("__version__") = std::string(kVersion);

  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  py::class_<Dataset>(m, "Dataset")
      .def(py::init(&make_dataset), py::arg("X"), py::arg("y"), py::arg("qid") = py::none(),
           py::arg("feature_names") = std::vector<std::string>{})
      .def_property_readonly("n_samples", &Dataset::n_samples)
      .def_property_readonly("n_features", &Dataset::n_features)
      .def_property_readonly("feature_names", &Dataset::feature_names)
      .def_property_readonly("has_query_groups", &Dataset::has_query_groups)
      .def_property_readonly("X",
                             [](const Dataset& d) {
                               Array out({d.n_samples(), d.n_features()});
                               std::copy(d.features().begin(), d.features().end(),
                                         out.mutable_data());
                               return out;
                             })
      .def_property_readonly("y",
                             [](const Dataset& d) {
                               return to_numpy({d.targets().begin(), d.targets().end()});
                             })
      .def("subset", [](const Dataset& d, std::vector<std::size_t> indices) {
        return d.subset(indices);
      })
      .def("content_hash", [](const Dataset& d) { return content_hash(d); });

  m.def(
      "load_csv",
      [](const std::string& path, const std::string& target, bool header) {
        return load_csv(path, {target, header, false});
      },
      py::arg("path"), py::arg("target") = "", py::arg("header") = true);
  m.def(
      "load_libsvm",
      [](const std::string& path, bool ranking) { return load_libsvm(path, ranking); },
      py::arg("path"), py::arg("ranking") = false);
  m.def(
      "split_holdout",
      [](const Dataset& d, double fraction, std::uint64_t seed) {
        auto split = split_holdout(d, fraction, seed);
        return py::make_tuple(split.train_indices, split.holdout_indices);
      },
      py::arg("dataset"), py::arg("fraction"), py::arg("seed"));

  m.def(
      "negative_gradient",
      [](const std::string& loss, const Dataset& d, const Array& scores) {
        return to_numpy(negative_gradient(LossFunction::with_defaults(parse_loss_kind(loss)), d,
                                          {scores.data(), static_cast<std::size_t>(scores.size())}));
      },
      py::arg("loss"), py::arg("dataset"), py::arg("scores"));
  m.def(
      "loss_value",
      [](const std::string& loss, const Dataset& d, const Array& scores) {
        return loss_value(LossFunction::with_defaults(parse_loss_kind(loss)), d,
                          {scores.data(), static_cast<std::size_t>(scores.size())});
      },
      py::arg("loss"), py::arg("dataset"), py::arg("scores"));

  py::class_<DecisionTree>(m, "DecisionTree")
      .def_property_readonly("n_leaves", &DecisionTree::n_leaves)
      .def_property_readonly("depth", &DecisionTree::max_depth_used)
      .def("predict", [](const DecisionTree& t, const Dataset& d) { return to_numpy(t.predict(d)); });
  m.def(
      "fit_tree",
      [](const Dataset& d, const Array& targets, py::object max_depth, double subsample,
         double max_features, std::uint64_t seed) {
        TreeConfig config;
        config.max_depth = max_depth.is_none() ? std::nullopt : std::optional<int>(max_depth.cast<int>());
        config.subsample = subsample;
        config.max_features = max_features;
        config.seed = seed;
        return fit_tree(d, {targets.data(), static_cast<std::size_t>(targets.size())}, config);
      },
      py::arg("dataset"), py::arg("targets"), py::arg("max_depth") = 7, py::arg("subsample") = 1.0,
      py::arg("max_features") = 1.0, py::arg("seed") = 0);

  py::class_<Ensemble>(m, "Ensemble")
      .def_property_readonly("mode", [](const Ensemble& e) { return std::string(to_string(e.mode)); })
      .def_property_readonly("loss", [](const Ensemble& e) { return std::string(to_string(e.loss)); })
      .def_property_readonly("n_trees", &Ensemble::size)
      .def_property_readonly("n_features", [](const Ensemble& e) { return e.n_features; })
      .def_property_readonly("capacity", [](const Ensemble& e) { return e.capacity; })
      .def_property_readonly("shrinkage", [](const Ensemble& e) { return e.shrinkage; })
      .def_property_readonly("weights", [](const Ensemble& e) { return e.weights; })
      .def_property_readonly("capacity_trace", [](const Ensemble& e) { return e.capacity_trace; })
      .def(
          "predict",
          [](const Ensemble& e, const Dataset& d, std::size_t threads) {
            return to_numpy(predict(e, d, threads));
          },
          py::arg("dataset"), py::arg("threads") = 1)
      .def(
          "predict_proba",
          [](const Ensemble& e, const Dataset& d, std::size_t threads) {
            return to_numpy(predict_proba(e, d, threads));
          },
          py::arg("dataset"), py::arg("threads") = 1)
      .def(
          "staged_predict",
          [](const Ensemble& e, const Dataset& d, std::size_t step) {
            py::list out;
            for (const auto& stage : staged_predict(e, d, step)) {
              out.append(py::make_tuple(stage.iteration, to_numpy(stage.predictions)));
            }
            return out;
          },
          py::arg("dataset"), py::arg("step") = 10)
      .def("to_json", [](const Ensemble& e) { return serialize_model(e); })
      .def_static("from_json", [](const std::string& text) { return deserialize_model(text); })
      .def("save", [](const Ensemble& e, const std::filesystem::path& p) { save_model(e, p); })
      .def_static("load", [](const std::filesystem::path& p) { return load_model(p); });

  m.def(
      "train",
      [](const Dataset& d, const std::string& mode, const std::string& loss, std::size_t n_trees,
         std::optional<double> shrinkage, std::optional<double> capacity,
         const std::string& weighting, double holdout_fraction, std::uint64_t seed,
         const py::object& max_depth, std::optional<double> subsample,
         std::optional<double> max_features, std::size_t min_samples_leaf,
         std::optional<bool> bootstrap, std::optional<double> clip_threshold, double noise_sigma,
         std::size_t threads) {
        const auto config = make_config(mode, loss, n_trees, shrinkage, capacity, weighting,
                                        holdout_fraction, seed, max_depth, subsample, max_features,
                                        min_samples_leaf, bootstrap, clip_threshold, noise_sigma,
                                        threads);
        py::gil_scoped_release release;
        return train(d, config);
      },
      py::arg("dataset"), py::arg("mode"), py::arg("loss") = "mse", py::arg("n_trees") = 100,
      py::arg("shrinkage") = py::none(), py::arg("capacity") = py::none(),
      py::arg("weighting") = "linear", py::arg("holdout_fraction") = 0.05, py::arg("seed") = 0,
      py::arg("max_depth") = py::ellipsis(), py::arg("subsample") = py::none(),
      py::arg("max_features") = py::none(), py::arg("min_samples_leaf") = 1,
      py::arg("bootstrap") = py::none(), py::arg("clip_threshold") = py::none(),
      py::arg("noise_sigma") = 0.0, py::arg("threads") = 1,
      "Train an ensemble. max_depth=None means unlimited; omitted keeps the mode default.");

  m.def(
      "roc_auc",
      [](const Array& labels, const Array& scores) {
        return roc_auc({labels.data(), static_cast<std::size_t>(labels.size())},
                       {scores.data(), static_cast<std::size_t>(scores.size())});
      },
      py::arg("labels"), py::arg("scores"));
  m.def(
      "mse",
      [](const Array& y, const Array& p) {
        return mse({y.data(), static_cast<std::size_t>(y.size())},
                   {p.data(), static_cast<std::size_t>(p.size())});
      },
      py::arg("targets"), py::arg("predictions"));
  m.def(
      "evaluate_metric",
      [](const std::string& metric, const Dataset& d, const Array& scores) {
        return evaluate_metric(metric, d, {scores.data(), static_cast<std::size_t>(scores.size())})
            .value;
      },
      py::arg("metric"), py::arg("dataset"), py::arg("scores"));

  m.def(
      "fixed_point_residual",
      [](const Ensemble& e, const Dataset& d, std::size_t n_probe_trees, std::uint64_t seed) {
        Rng rng(seed);
        return fixed_point_residual(e, d, n_probe_trees, rng).residual_norm;
      },
      py::arg("ensemble"), py::arg("dataset"), py::arg("n_probe_trees") = 32, py::arg("seed") = 0);
  m.def(
      "convergence_trace",
      [](const Dataset& d, const std::string& mode, const std::string& loss, std::size_t n_trees,
         std::optional<double> capacity, std::uint64_t seed, std::size_t probe_every,
         std::size_t probe_trees) {
        const auto config = make_config(mode, loss, n_trees, std::nullopt, capacity, "linear", 0.05,
                                        seed, py::ellipsis(), std::nullopt, std::nullopt, 1,
                                        std::nullopt, std::nullopt, 0.0, 1);
        py::list out;
        for (const auto& row : convergence_trace(config, d, probe_every, probe_trees)) {
          out.append(py::make_tuple(row.iteration, row.residual, row.objective, row.capacity));
        }
        return out;
      },
      py::arg("dataset"), py::arg("mode"), py::arg("loss") = "mse", py::arg("n_trees") = 100,
      py::arg("capacity") = py::none(), py::arg("seed") = 0, py::arg("probe_every") = 10,
      py::arg("probe_trees") = 32);
}
