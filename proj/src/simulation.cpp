#include "reppi/simulation.hpp"

#include <atomic>
#include <cmath>
#include <optional>
#include <thread>

#include "reppi/estimators.hpp"
#include "reppi/linalg.hpp"
#include "reppi/rng.hpp"
#include "reppi/variance.hpp"

namespace reppi {

std::string to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::ModalityMismatch: return "modality_mismatch";
    case ScenarioKind::DistributionShift: return "distribution_shift";
    case ScenarioKind::DiscretePredictions: return "discrete_predictions";
  }
  return "unknown";
}

ScenarioKind scenario_kind_from_string(const std::string& name) {
  if (name == "modality_mismatch") return ScenarioKind::ModalityMismatch;
  if (name == "distribution_shift") return ScenarioKind::DistributionShift;
  if (name == "discrete_predictions") return ScenarioKind::DiscretePredictions;
  throw ConfigError("unknown scenario kind '" + name + "'");
}

std::string to_string(Method method) {
  switch (method) {
    case Method::XyOnly: return "xy_only";
    case Method::Ppi: return "ppi";
    case Method::PpiPlusPlus: return "ppi_plus_plus";
    case Method::Reppi: return "reppi";
  }
  return "unknown";
}

Method method_from_string(const std::string& name) {
  if (name == "xy_only") return Method::XyOnly;
  if (name == "ppi") return Method::Ppi;
  if (name == "ppi_plus_plus") return Method::PpiPlusPlus;
  if (name == "reppi") return Method::Reppi;
  throw ConfigError("unknown method '" + name + "'");
}

std::vector<Method> all_methods() {
  return {Method::XyOnly, Method::Ppi, Method::PpiPlusPlus, Method::Reppi};
}

void validate(const ScenarioSpec& spec) {
  if (spec.n < 1 || spec.big_n < 1) {
    throw ConfigError("scenario requires n >= 1 and N >= 1");
  }
  if (spec.sigma2 <= 0.0) throw ConfigError("scenario requires sigma2 > 0");
  switch (spec.kind) {
    case ScenarioKind::ModalityMismatch:
    case ScenarioKind::DistributionShift:
      if (spec.d < 1) throw ConfigError("scenario requires d >= 1");
      if (spec.sigma_x2 <= 0.0 || spec.sigma_w2 <= 0.0) {
        throw ConfigError("scenario requires sigma_x2, sigma_w2 > 0");
      }
      if (spec.theta.size() != spec.d || spec.gamma.size() != spec.d) {
        throw ConfigError("scenario requires theta and gamma of length d");
      }
      if (spec.kind == ScenarioKind::DistributionShift &&
          (spec.theta_tilde.size() != spec.d ||
           spec.gamma_tilde.size() != spec.d)) {
        throw ConfigError(
            "distribution shift requires theta_tilde and gamma_tilde of length d");
      }
      break;
    case ScenarioKind::DiscretePredictions:
      if (spec.d != 1) {
        throw ConfigError("discrete predictions is intercept-only (d = 1)");
      }
      break;
  }
}

LossModel scenario_model(const ScenarioSpec& spec) {
  return spec.kind == ScenarioKind::DiscretePredictions
             ? LossModel::mean_estimation()
             : LossModel::squared_error();
}

GeneratedData generate(const ScenarioSpec& spec) {
  validate(spec);
  Rng rng(spec.seed);
  GeneratedData out;
  const int total = spec.n + spec.big_n;

  if (spec.kind == ScenarioKind::DiscretePredictions) {
    const double sd = std::sqrt(spec.sigma2);
    MatrixXd x = MatrixXd::Ones(total, 1);
    VectorXd y(total), yhat(total);
    for (int i = 0; i < total; ++i) {
      const int z = static_cast<int>(rng.below(3));  // component 0..2
      y[i] = spec.mu[z] + sd * rng.normal();
      yhat[i] = static_cast<double>(z + 1);
    }
    out.labeled = {x.topRows(spec.n), y.head(spec.n), yhat.head(spec.n)};
    out.unlabeled = {x.bottomRows(spec.big_n), yhat.tail(spec.big_n)};
    out.theta_star = VectorXd::Constant(1, spec.mu.mean());
    return out;
  }

  const double sd_x = std::sqrt(spec.sigma_x2);
  const double sd_w = std::sqrt(spec.sigma_w2);
  const double sd_eps = std::sqrt(spec.sigma2);
  MatrixXd x(total, spec.d);
  VectorXd y(total), yhat(total);
  VectorXd w(spec.d);
  for (int i = 0; i < total; ++i) {
    for (int j = 0; j < spec.d; ++j) x(i, j) = sd_x * rng.normal();
    for (int j = 0; j < spec.d; ++j) w[j] = sd_w * rng.normal();
    const double eps = sd_eps * rng.normal();
    y[i] = w.dot(spec.gamma) + x.row(i).dot(spec.theta) + eps;
    yhat[i] = spec.kind == ScenarioKind::ModalityMismatch
                  ? w.dot(spec.gamma)
                  : x.row(i).dot(spec.theta_tilde) + w.dot(spec.gamma_tilde);
  }
  out.labeled = {x.topRows(spec.n), y.head(spec.n), yhat.head(spec.n)};
  out.unlabeled = {x.bottomRows(spec.big_n), yhat.tail(spec.big_n)};
  out.theta_star = spec.theta;
  return out;
}

std::map<Method, double> oracle_traces(const ScenarioSpec& spec) {
  validate(spec);
  const double r = spec.r();
  std::map<Method, double> traces;

  if (spec.kind == ScenarioKind::DiscretePredictions) {
    const double d12 = spec.mu[0] - spec.mu[1];
    const double d23 = spec.mu[1] - spec.mu[2];
    const double d31 = spec.mu[2] - spec.mu[0];
    const double spread = (d12 * d12 + d23 * d23 + d31 * d31) / 9.0;
    const double xy = spec.sigma2 + spread;
    traces[Method::XyOnly] = xy;
    traces[Method::Ppi] = xy + 2.0 * (1.0 + r) / 3.0 - 2.0 * d31 / 3.0;
    traces[Method::PpiPlusPlus] = xy - d31 * d31 / (6.0 * (1.0 + r));
    traces[Method::Reppi] = xy - spread / (1.0 + r);
    return traces;
  }

  const MatrixXd sigma_x =
      spec.sigma_x2 * MatrixXd::Identity(spec.d, spec.d);
  const double trace_inv = spec.d / spec.sigma_x2;
  const double g_w = spec.sigma_w2 * spec.gamma.squaredNorm();

  if (spec.kind == ScenarioKind::ModalityMismatch) {
    const double fourth = gaussian_quadratic_trace(sigma_x, spec.theta);
    const double xy = (spec.sigma2 + g_w) * trace_inv;
    traces[Method::XyOnly] = xy;
    traces[Method::Ppi] =
        (1.0 + r) * fourth + (spec.sigma2 + r * g_w) * trace_inv;
    const double denom = fourth + trace_inv * g_w;
    const double reduction =
        denom > 0.0 ? (trace_inv * g_w) * (trace_inv * g_w) / denom : 0.0;
    traces[Method::PpiPlusPlus] = xy - reduction / (1.0 + r);
    traces[Method::Reppi] =
        (spec.sigma2 + r / (1.0 + r) * g_w) * trace_inv;
    return traces;
  }

  // Distribution shift.
  const VectorXd delta = spec.theta - spec.theta_tilde;
  const double fourth = gaussian_quadratic_trace(sigma_x, delta);
  const double g_w_tilde = spec.sigma_w2 * spec.gamma_tilde.squaredNorm();
  const double cross = spec.sigma_w2 * spec.gamma.dot(spec.gamma_tilde);
  const double gap = spec.sigma_w2 * (spec.gamma - spec.gamma_tilde).squaredNorm();
  const double xy = (spec.sigma2 + g_w) * trace_inv;
  traces[Method::XyOnly] = xy;
  traces[Method::Ppi] =
      (1.0 + r) * fourth +
      (spec.sigma2 + r * g_w_tilde + gap) * trace_inv;
  const double denom_pp = trace_inv * g_w_tilde + fourth;
  const double reduction_pp =
      denom_pp > 0.0 ? cross * cross * trace_inv * trace_inv / denom_pp : 0.0;
  traces[Method::PpiPlusPlus] = xy - reduction_pp / (1.0 + r);
  const double reduction_re =
      g_w_tilde > 0.0 ? cross * cross / g_w_tilde * trace_inv : 0.0;
  traces[Method::Reppi] = xy - reduction_re / (1.0 + r);
  return traces;
}

namespace {

struct TrialOutcome {
  double width = 0.0;
  bool covered = false;
  VectorXd scaled_error;  // sqrt(n) (theta_hat - theta*)
};

EstimateResult fit_method(Method method, const GeneratedData& data,
                          const LossModel& model, const RecalibratorSpec& recal,
                          double level, std::uint64_t trial_seed) {
  switch (method) {
    case Method::XyOnly:
      return fit_xy_only(data.labeled, model, level);
    case Method::Ppi:
      return fit_ppi(data.labeled, data.unlabeled, model, level);
    case Method::PpiPlusPlus:
      return fit_ppi_plus_plus(data.labeled, data.unlabeled, model, level);
    case Method::Reppi:
      return fit_reppi(data.labeled, data.unlabeled, model, recal, level,
                       derive_seed(trial_seed, 1));
  }
  throw ConfigError("unknown method");
}

}  // namespace

StudyReport run_study(const ScenarioSpec& spec,
                      const std::vector<Method>& methods, int trials,
                      const RecalibratorSpec& recal, double level,
                      std::uint64_t base_seed, int workers) {
  validate(spec);
  validate(recal);
  if (trials < 1) throw ConfigError("run_study requires trials >= 1");
  if (methods.empty()) throw ConfigError("run_study requires at least one method");
  if (!(level > 0.0 && level < 1.0)) {
    throw ConfigError("confidence level must lie in (0, 1)");
  }
  if (workers < 1) throw ConfigError("run_study requires workers >= 1");

  const LossModel model = scenario_model(spec);
  const std::size_t n_methods = methods.size();
  std::vector<std::vector<std::optional<TrialOutcome>>> outcomes(
      n_methods, std::vector<std::optional<TrialOutcome>>(
                     static_cast<std::size_t>(trials)));

  auto run_trial = [&](int t) {
    ScenarioSpec trial_spec = spec;
    const std::uint64_t trial_seed =
        derive_seed(base_seed, static_cast<std::uint64_t>(t));
    trial_spec.seed = trial_seed;
    const GeneratedData data = generate(trial_spec);
    const double sqrt_n = std::sqrt(static_cast<double>(spec.n));
    for (std::size_t mi = 0; mi < n_methods; ++mi) {
      try {
        const EstimateResult fit =
            fit_method(methods[mi], data, model, recal, level, trial_seed);
        TrialOutcome outcome;
        outcome.width = fit.ci_upper[0] - fit.ci_lower[0];
        outcome.covered = fit.ci_lower[0] <= data.theta_star[0] &&
                          data.theta_star[0] <= fit.ci_upper[0];
        outcome.scaled_error = sqrt_n * (fit.theta - data.theta_star);
        outcomes[mi][static_cast<std::size_t>(t)] = std::move(outcome);
      } catch (const std::exception&) {
        // Trial excluded for this method; counted below.
      }
    }
  };

  if (workers <= 1) {
    for (int t = 0; t < trials; ++t) run_trial(t);
  } else {
    std::atomic<int> next{0};
    auto worker = [&] {
      for (int t = next.fetch_add(1); t < trials; t = next.fetch_add(1)) {
        run_trial(t);
      }
    };
    std::vector<std::thread> pool;
    const int count = std::min(workers, trials);
    pool.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) pool.emplace_back(worker);
    for (auto& thread : pool) thread.join();
  }

  const std::map<Method, double> oracles = oracle_traces(spec);
  StudyReport report;
  report.scenario = spec;
  report.trials = trials;
  report.workers = workers;

  for (std::size_t mi = 0; mi < n_methods; ++mi) {
    StudyRow row;
    row.method = to_string(methods[mi]);
    row.oracle_trace = oracles.at(methods[mi]);

    // Fixed-order reduction keeps parallel and serial runs byte-identical.
    std::vector<const TrialOutcome*> ok;
    ok.reserve(static_cast<std::size_t>(trials));
    for (const auto& outcome : outcomes[mi]) {
      if (outcome.has_value()) ok.push_back(&*outcome);
    }
    row.failures = trials - static_cast<int>(ok.size());
    if (ok.size() >= 2) {
      double width_sum = 0.0;
      int covered = 0;
      MatrixXd errors(static_cast<Eigen::Index>(ok.size()),
                      ok.front()->scaled_error.size());
      for (std::size_t i = 0; i < ok.size(); ++i) {
        width_sum += ok[i]->width;
        covered += ok[i]->covered ? 1 : 0;
        errors.row(static_cast<Eigen::Index>(i)) =
            ok[i]->scaled_error.transpose();
      }
      row.width_mean = width_sum / static_cast<double>(ok.size());
      row.coverage = static_cast<double>(covered) / static_cast<double>(ok.size());
      row.mc_trace = sample_covariance(errors).trace();
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

}  // namespace reppi
