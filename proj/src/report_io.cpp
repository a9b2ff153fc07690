#include "reppi/report_io.hpp"

#include <cstdio>

#include <json.hpp>

namespace reppi {

namespace {

using Json = nlohmann::ordered_json;

std::string format_full(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

Json vector_to_json(const VectorXd& v) {
  Json arr = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Json matrix_to_json(const MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

VectorXd vector_from_json(const Json& arr) {
  VectorXd v(static_cast<Eigen::Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i) {
    v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
  }
  return v;
}

MatrixXd matrix_from_json(const Json& rows) {
  const auto r = static_cast<Eigen::Index>(rows.size());
  const auto c = r > 0 ? static_cast<Eigen::Index>(rows[0].size()) : 0;
  MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = 0; j < c; ++j) {
      m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]
                    .get<double>();
    }
  }
  return m;
}

Json result_to_json(const EstimateResult& result) {
  Json block;
  block["theta"] = vector_to_json(result.theta);
  block["sigma"] = matrix_to_json(result.sigma);
  Json ci = Json::array();
  for (Eigen::Index j = 0; j < result.theta.size(); ++j) {
    ci.push_back(Json::array({result.ci_lower[j], result.ci_upper[j]}));
  }
  block["ci"] = std::move(ci);
  block["level"] = result.level;
  Json diag;
  for (const auto& [key, value] : result.diagnostics) diag[key] = value;
  block["diagnostics"] = std::move(diag);
  return block;
}

Json scenario_to_json(const ScenarioSpec& spec) {
  Json out;
  out["kind"] = to_string(spec.kind);
  out["d"] = spec.d;
  out["n"] = spec.n;
  out["N"] = spec.big_n;
  out["sigma2"] = spec.sigma2;
  out["sigma_x2"] = spec.sigma_x2;
  out["sigma_w2"] = spec.sigma_w2;
  out["theta"] = vector_to_json(spec.theta);
  out["gamma"] = vector_to_json(spec.gamma);
  out["theta_tilde"] = vector_to_json(spec.theta_tilde);
  out["gamma_tilde"] = vector_to_json(spec.gamma_tilde);
  out["mu"] = Json::array({spec.mu[0], spec.mu[1], spec.mu[2]});
  out["seed"] = spec.seed;
  return out;
}

}  // namespace

std::string estimate_report_json(
    const std::vector<std::pair<std::string, std::string>>& meta,
    const std::vector<std::pair<std::string, EstimateResult>>& results) {
  Json out;
  Json meta_block;
  for (const auto& [key, value] : meta) meta_block[key] = value;
  out["meta"] = std::move(meta_block);
  Json results_block;
  for (const auto& [method, result] : results) {
    results_block[method] = result_to_json(result);
  }
  out["results"] = std::move(results_block);
  return out.dump(2) + "\n";
}

std::string estimate_report_csv(
    const std::vector<std::pair<std::string, EstimateResult>>& results) {
  std::string out = "method,coordinate,theta,sigma_jj,ci_lower,ci_upper,level\n";
  for (const auto& [method, result] : results) {
    for (Eigen::Index j = 0; j < result.theta.size(); ++j) {
      out += method;
      out += ',';
      out += std::to_string(j);
      out += ',';
      out += format_full(result.theta[j]);
      out += ',';
      out += format_full(result.sigma(j, j));
      out += ',';
      out += format_full(result.ci_lower[j]);
      out += ',';
      out += format_full(result.ci_upper[j]);
      out += ',';
      out += format_full(result.level);
      out += '\n';
    }
  }
  return out;
}

std::map<std::string, EstimateResult> parse_estimate_report_json(
    const std::string& text) {
  const Json doc = Json::parse(text);
  std::map<std::string, EstimateResult> out;
  for (const auto& [method, block] : doc.at("results").items()) {
    EstimateResult result;
    result.theta = vector_from_json(block.at("theta"));
    result.sigma = matrix_from_json(block.at("sigma"));
    const auto& ci = block.at("ci");
    result.ci_lower.resize(result.theta.size());
    result.ci_upper.resize(result.theta.size());
    for (Eigen::Index j = 0; j < result.theta.size(); ++j) {
      result.ci_lower[j] = ci[static_cast<std::size_t>(j)][0].get<double>();
      result.ci_upper[j] = ci[static_cast<std::size_t>(j)][1].get<double>();
    }
    result.level = block.at("level").get<double>();
    for (const auto& [key, value] : block.at("diagnostics").items()) {
      result.diagnostics[key] = value.get<double>();
    }
    out[method] = std::move(result);
  }
  return out;
}

std::string study_report_json(const StudyReport& report) {
  Json out;
  out["scenario"] = scenario_to_json(report.scenario);
  out["trials"] = report.trials;
  out["workers"] = report.workers;
  Json rows = Json::array();
  for (const auto& row : report.rows) {
    Json r;
    r["method"] = row.method;
    r["width_mean"] = row.width_mean;
    r["coverage"] = row.coverage;
    r["mc_trace"] = row.mc_trace;
    r["oracle_trace"] = row.oracle_trace;
    r["failures"] = row.failures;
    rows.push_back(std::move(r));
  }
  out["rows"] = std::move(rows);
  return out.dump(2) + "\n";
}

std::string study_report_csv(const StudyReport& report) {
  std::string out = "method,width_mean,coverage,mc_trace,oracle_trace,failures\n";
  for (const auto& row : report.rows) {
    out += row.method;
    out += ',';
    out += format_full(row.width_mean);
    out += ',';
    out += format_full(row.coverage);
    out += ',';
    out += format_full(row.mc_trace);
    out += ',';
    out += format_full(row.oracle_trace);
    out += ',';
    out += std::to_string(row.failures);
    out += '\n';
  }
  return out;
}

}  // namespace reppi
