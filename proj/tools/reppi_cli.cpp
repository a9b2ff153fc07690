// Command-line front end: `estimate` fits the chosen estimators on CSV data;
// `simulate` runs seeded Monte Carlo scenario studies.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "reppi/csv.hpp"
#include "reppi/estimators.hpp"
#include "reppi/report_io.hpp"
#include "reppi/rng.hpp"
#include "reppi/simulation.hpp"

namespace {

using Json = nlohmann::json;
using namespace reppi;

struct CliOptions {
  std::string config_path;
  std::optional<std::string> labeled;
  std::optional<std::string> unlabeled;
  std::optional<std::string> method;
  std::optional<std::string> family;
  std::optional<std::string> outcome_col;
  std::optional<std::string> prediction_col;
  std::optional<std::vector<std::string>> covariate_cols;
  std::optional<bool> intercept;
  std::optional<std::string> recalibrator;
  std::optional<int> knn_k;
  std::optional<double> level;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::optional<std::string> output;
  std::optional<std::string> format;
  std::optional<int> workers;
};

Json load_config(const std::string& path) {
  if (path.empty()) return Json::object();
  std::ifstream file(path);
  if (!file) throw ConfigError("cannot open config '" + path + "'");
  try {
    return Json::parse(file);
  } catch (const Json::exception& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
}

template <typename T>
T setting(const std::optional<T>& flag, const Json& config,
          const std::string& key, T fallback) {
  if (flag.has_value()) return *flag;
  if (config.contains(key)) {
    try {
      return config.at(key).get<T>();
    } catch (const Json::exception&) {
      throw ConfigError("config key '" + key + "' has the wrong type");
    }
  }
  return fallback;
}

VectorXd vector_from_config(const Json& arr, const std::string& key) {
  if (!arr.is_array()) throw ConfigError("'" + key + "' must be an array");
  VectorXd v(static_cast<Eigen::Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i) {
    v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
  }
  return v;
}

RecalibratorSpec recalibrator_from(const CliOptions& opts, const Json& config) {
  RecalibratorSpec spec;
  spec.kind = recalibrator_kind_from_string(
      setting<std::string>(opts.recalibrator, config, "recalibrator", "linear"));
  spec.knn_k = setting<int>(opts.knn_k, config, "knn_k", 5);
  validate(spec);
  return spec;
}

void write_output(const std::string& path, const std::string& payload) {
  if (path.empty() || path == "-") {
    std::cout << payload;
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw DataError("cannot open output '" + path + "'");
  file << payload;
  if (!file) throw DataError("failed writing output '" + path + "'");
}

int run_estimate(const CliOptions& opts) {
  const Json config = load_config(opts.config_path);

  CsvColumns columns;
  columns.outcome = setting<std::string>(opts.outcome_col, config,
                                         "outcome_col", "y");
  columns.prediction = setting<std::string>(opts.prediction_col, config,
                                            "prediction_col", "yhat");
  columns.covariates = setting<std::vector<std::string>>(
      opts.covariate_cols, config, "covariate_cols", {});
  columns.intercept = setting<bool>(opts.intercept, config, "intercept", true);

  const std::string labeled_path =
      setting<std::string>(opts.labeled, config, "labeled", "");
  if (labeled_path.empty()) throw ConfigError("estimate requires --labeled");
  const std::string unlabeled_path =
      setting<std::string>(opts.unlabeled, config, "unlabeled", "");
  const std::string method_name =
      setting<std::string>(opts.method, config, "method", "all");
  const std::string family_name =
      setting<std::string>(opts.family, config, "family", "squared_error");
  const double level = setting<double>(opts.level, config, "level", 0.9);
  if (!(level > 0.0 && level < 1.0)) {
    throw ConfigError("level must lie in (0, 1)");
  }
  const std::uint64_t seed =
      setting<std::uint64_t>(opts.seed, config, "seed", 0);
  const std::string output =
      setting<std::string>(opts.output, config, "output", "");
  const std::string format =
      setting<std::string>(opts.format, config, "format", "json");
  const RecalibratorSpec recal = recalibrator_from(opts, config);

  LossModel model;
  if (family_name == "squared_error") {
    model = columns.covariates.empty() && columns.intercept
                ? LossModel::mean_estimation()
                : LossModel::squared_error();
  } else if (family_name == "logistic") {
    model = LossModel::logistic();
  } else {
    throw ConfigError("unknown family '" + family_name + "'");
  }

  std::vector<Method> methods;
  if (method_name == "all") {
    methods = all_methods();
  } else {
    methods = {method_from_string(method_name)};
  }

  std::vector<int> rejected_labeled;
  const LabeledDataset labeled =
      load_labeled_csv(labeled_path, columns, &rejected_labeled);
  for (int row : rejected_labeled) {
    std::cerr << "note: skipped labeled row " << row
              << " (missing or non-finite field)\n";
  }

  std::optional<UnlabeledDataset> unlabeled;
  if (!unlabeled_path.empty()) {
    std::vector<int> rejected_unlabeled;
    unlabeled = load_unlabeled_csv(unlabeled_path, columns, &rejected_unlabeled);
    for (int row : rejected_unlabeled) {
      std::cerr << "note: skipped unlabeled row " << row
                << " (missing or non-finite field)\n";
    }
  }

  std::vector<std::pair<std::string, EstimateResult>> results;
  for (Method method : methods) {
    if (method != Method::XyOnly && !unlabeled.has_value()) {
      throw ConfigError("method '" + to_string(method) +
                        "' requires --unlabeled data");
    }
    EstimateResult fit;
    switch (method) {
      case Method::XyOnly:
        fit = fit_xy_only(labeled, model, level);
        break;
      case Method::Ppi:
        fit = fit_ppi(labeled, *unlabeled, model, level);
        break;
      case Method::PpiPlusPlus:
        fit = fit_ppi_plus_plus(labeled, *unlabeled, model, level);
        break;
      case Method::Reppi:
        fit = fit_reppi(labeled, *unlabeled, model, recal, level, seed);
        break;
    }
    results.emplace_back(to_string(method), std::move(fit));
  }

  std::string payload;
  if (format == "json") {
    std::vector<std::pair<std::string, std::string>> meta = {
        {"command", "estimate"},
        {"labeled", labeled_path},
        {"unlabeled", unlabeled_path},
        {"method", method_name},
        {"family", family_name},
    };
    payload = estimate_report_json(meta, results);
  } else if (format == "csv") {
    payload = estimate_report_csv(results);
  } else {
    throw ConfigError("unknown format '" + format + "'");
  }
  write_output(output, payload);
  return 0;
}

ScenarioSpec scenario_from_config(const Json& config) {
  if (!config.contains("scenario")) {
    throw ConfigError("simulate requires a 'scenario' object in the config");
  }
  const Json& sc = config.at("scenario");
  ScenarioSpec spec;
  if (!sc.contains("kind")) throw ConfigError("scenario requires 'kind'");
  spec.kind = scenario_kind_from_string(sc.at("kind").get<std::string>());
  spec.d = sc.value("d", 1);
  spec.n = sc.value("n", 1000);
  spec.big_n = sc.value("N", 9000);
  spec.sigma2 = sc.value("sigma2", 1.0);
  spec.sigma_x2 = sc.value("sigma_x2", 1.0);
  spec.sigma_w2 = sc.value("sigma_w2", 1.0);
  spec.seed = sc.value("seed", 0);

  if (spec.kind == ScenarioKind::DiscretePredictions) {
    if (!sc.contains("mu")) {
      throw ConfigError("discrete_predictions requires 'mu' = [mu1, mu2, mu3]");
    }
    const VectorXd mu = vector_from_config(sc.at("mu"), "mu");
    if (mu.size() != 3) throw ConfigError("'mu' must have 3 entries");
    spec.mu = mu;
  } else {
    // theta/gamma default to seeded draws from the unit sphere.
    if (sc.contains("theta")) {
      spec.theta = vector_from_config(sc.at("theta"), "theta");
    } else {
      Rng rng(derive_seed(spec.seed, 101));
      spec.theta = random_unit_vector(rng, spec.d);
    }
    if (sc.contains("gamma")) {
      spec.gamma = vector_from_config(sc.at("gamma"), "gamma");
    } else {
      Rng rng(derive_seed(spec.seed, 102));
      spec.gamma = random_unit_vector(rng, spec.d);
    }
    if (spec.kind == ScenarioKind::DistributionShift) {
      if (!sc.contains("theta_tilde") || !sc.contains("gamma_tilde")) {
        throw ConfigError(
            "distribution_shift requires 'theta_tilde' and 'gamma_tilde'");
      }
      spec.theta_tilde = vector_from_config(sc.at("theta_tilde"), "theta_tilde");
      spec.gamma_tilde = vector_from_config(sc.at("gamma_tilde"), "gamma_tilde");
    }
  }
  validate(spec);
  return spec;
}

int run_simulate(const CliOptions& opts) {
  const Json config = load_config(opts.config_path);
  ScenarioSpec spec = scenario_from_config(config);

  const int trials = setting<int>(opts.trials, config, "trials", 100);
  if (trials < 1) throw ConfigError("trials must be >= 1");
  const double level = setting<double>(opts.level, config, "level", 0.9);
  const std::uint64_t seed =
      setting<std::uint64_t>(opts.seed, config, "seed", 0);
  const int workers = setting<int>(opts.workers, config, "workers", 1);
  if (workers < 1) throw ConfigError("workers must be >= 1");
  const std::string output =
      setting<std::string>(opts.output, config, "output", "");
  const std::string format =
      setting<std::string>(opts.format, config, "format", "json");
  const RecalibratorSpec recal = recalibrator_from(opts, config);

  std::vector<Method> methods;
  const std::string method_name =
      setting<std::string>(opts.method, config, "method", "");
  if (!method_name.empty() && method_name != "all") {
    methods = {method_from_string(method_name)};
  } else if (config.contains("methods")) {
    for (const auto& name : config.at("methods")) {
      methods.push_back(method_from_string(name.get<std::string>()));
    }
  } else {
    methods = all_methods();
  }

  const StudyReport report =
      run_study(spec, methods, trials, recal, level, seed, workers);

  std::string payload;
  if (format == "json") {
    payload = study_report_json(report);
  } else if (format == "csv") {
    payload = study_report_csv(report);
  } else {
    throw ConfigError("unknown format '" + format + "'");
  }
  write_output(output, payload);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Prediction-powered inference with recalibration"};
  app.require_subcommand(1);

  CliOptions opts;
  std::string covariates_csv;
  bool no_intercept = false;

  auto add_shared = [&](CLI::App* cmd) {
    cmd->add_option("--config", opts.config_path, "JSON config file");
    cmd->add_option("--method", [&](const std::vector<std::string>& v) {
      opts.method = v.back();
      return true;
    }, "xy_only|ppi|ppi_plus_plus|reppi|all");
    cmd->add_option("--recalibrator", [&](const std::vector<std::string>& v) {
      opts.recalibrator = v.back();
      return true;
    }, "zero|linear|bin|knn");
    cmd->add_option("--knn-k", [&](const std::vector<std::string>& v) {
      opts.knn_k = std::stoi(v.back());
      return true;
    }, "neighbor count for the knn recalibrator");
    cmd->add_option("--level", [&](const std::vector<std::string>& v) {
      opts.level = std::stod(v.back());
      return true;
    }, "confidence level (default 0.90)");
    cmd->add_option("--seed", [&](const std::vector<std::string>& v) {
      opts.seed = std::stoull(v.back());
      return true;
    }, "random seed (default 0)");
    cmd->add_option("--output", [&](const std::vector<std::string>& v) {
      opts.output = v.back();
      return true;
    }, "output path ('-' for stdout)");
    cmd->add_option("--format", [&](const std::vector<std::string>& v) {
      opts.format = v.back();
      return true;
    }, "json|csv");
  };

  CLI::App* estimate = app.add_subcommand("estimate", "Fit estimators on CSV data");
  add_shared(estimate);
  estimate->add_option("--labeled", [&](const std::vector<std::string>& v) {
    opts.labeled = v.back();
    return true;
  }, "labeled CSV (outcome, prediction, covariates)");
  estimate->add_option("--unlabeled", [&](const std::vector<std::string>& v) {
    opts.unlabeled = v.back();
    return true;
  }, "unlabeled CSV (prediction, covariates)");
  estimate->add_option("--family", [&](const std::vector<std::string>& v) {
    opts.family = v.back();
    return true;
  }, "squared_error|logistic");
  estimate->add_option("--outcome-col", [&](const std::vector<std::string>& v) {
    opts.outcome_col = v.back();
    return true;
  }, "outcome column name (default 'y')");
  estimate->add_option("--prediction-col", [&](const std::vector<std::string>& v) {
    opts.prediction_col = v.back();
    return true;
  }, "prediction column name (default 'yhat')");
  estimate->add_option("--covariates", covariates_csv,
                       "comma-separated covariate column names");
  estimate->add_flag("--no-intercept", no_intercept,
                     "do not prepend an intercept column");

  CLI::App* simulate = app.add_subcommand("simulate", "Run a scenario study");
  add_shared(simulate);
  simulate->add_option("--trials", [&](const std::vector<std::string>& v) {
    opts.trials = std::stoi(v.back());
    return true;
  }, "number of Monte Carlo trials (default 100)");
  simulate->add_option("--workers", [&](const std::vector<std::string>& v) {
    opts.workers = std::stoi(v.back());
    return true;
  }, "worker threads (default 1)");

  try {
    app.parse(argc, argv);

    if (!covariates_csv.empty()) {
      std::vector<std::string> names;
      std::stringstream stream(covariates_csv);
      std::string name;
      while (std::getline(stream, name, ',')) {
        if (!name.empty()) names.push_back(name);
      }
      opts.covariate_cols = names;
    }
    if (no_intercept) opts.intercept = false;

    if (estimate->parsed()) return run_estimate(opts);
    if (simulate->parsed()) return run_simulate(opts);
    throw ConfigError("no subcommand given");
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: invalid flag value (" << e.what() << ")\n";
    return 2;
  } catch (const std::out_of_range& e) {
    std::cerr << "config error: flag value out of range (" << e.what() << ")\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
}
