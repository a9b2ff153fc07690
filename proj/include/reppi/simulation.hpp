#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "reppi/common.hpp"
#include "reppi/data.hpp"
#include "reppi/loss.hpp"
#include "reppi/recalibrate.hpp"

namespace reppi {

enum class ScenarioKind { ModalityMismatch, DistributionShift, DiscretePredictions };

std::string to_string(ScenarioKind kind);
ScenarioKind scenario_kind_from_string(const std::string& name);

enum class Method { XyOnly, Ppi, PpiPlusPlus, Reppi };

std::string to_string(Method method);
Method method_from_string(const std::string& name);
std::vector<Method> all_methods();

// Parameters for the three simulation designs.
//
//   ModalityMismatch     X ~ N(0, sigma_x2 I), W ~ N(0, sigma_w2 I),
//                        Y = W'gamma + X'theta + eps, Yhat = W'gamma
//   DistributionShift    same Y, Yhat = X'theta_tilde + W'gamma_tilde
//   DiscretePredictions  Z ~ Unif{1,2,3}, Y | Z ~ N(mu_Z, sigma2), Yhat = Z,
//                        X fixed at 1 (mean estimation)
struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::ModalityMismatch;
  int d = 1;
  int n = 1000;
  int big_n = 9000;
  double sigma2 = 1.0;
  double sigma_x2 = 1.0;
  double sigma_w2 = 1.0;
  VectorXd theta;
  VectorXd gamma;
  VectorXd theta_tilde;  // DistributionShift only
  VectorXd gamma_tilde;  // DistributionShift only
  Eigen::Vector3d mu = Eigen::Vector3d::Zero();  // DiscretePredictions only
  std::uint64_t seed = 0;

  double r() const { return static_cast<double>(n) / big_n; }
};

void validate(const ScenarioSpec& spec);

LossModel scenario_model(const ScenarioSpec& spec);

struct GeneratedData {
  LabeledDataset labeled;
  UnlabeledDataset unlabeled;
  VectorXd theta_star;
};

// Draws n labeled and N unlabeled rows; deterministic in spec.seed.
GeneratedData generate(const ScenarioSpec& spec);

// Closed-form asymptotic traces of the four estimators for the scenario.
// The recalibrated entry assumes the score limit equals the optimal score.
std::map<Method, double> oracle_traces(const ScenarioSpec& spec);

struct StudyRow {
  std::string method;
  double width_mean = 0.0;   // mean CI width, first coordinate
  double coverage = 0.0;     // first-coordinate coverage rate
  double mc_trace = 0.0;     // trace of Cov(sqrt(n)(theta_hat - theta*))
  double oracle_trace = 0.0;
  int failures = 0;
};

struct StudyReport {
  ScenarioSpec scenario;
  int trials = 0;
  int workers = 1;
  std::vector<StudyRow> rows;
};

// Runs `trials` independent draws of the scenario and fits each method.
// Trial t uses seed derive_seed(base_seed, t); a trial whose fit throws is
// excluded from that method's aggregates and counted under failures.
// Results are byte-identical for any worker count: per-trial outcomes are
// stored by index and reduced in fixed order.
StudyReport run_study(const ScenarioSpec& spec,
                      const std::vector<Method>& methods, int trials,
                      const RecalibratorSpec& recal, double level,
                      std::uint64_t base_seed, int workers = 1);

}  // namespace reppi
