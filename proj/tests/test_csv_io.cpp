#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <unistd.h>

#include "reppi/csv.hpp"
#include "reppi/report_io.hpp"
#include "reppi/rng.hpp"

using namespace reppi;

namespace {

struct TempCsv {
  std::filesystem::path path;

  explicit TempCsv(const std::string& contents) {
    static int counter = 0;
    path = std::filesystem::temp_directory_path() /
           ("reppi_test_" + std::to_string(++counter) + "_" +
            std::to_string(static_cast<unsigned>(::getpid())) + ".csv");
    std::ofstream file(path);
    file << contents;
  }
  ~TempCsv() { std::filesystem::remove(path); }
};

}  // namespace

TEST_CASE("labeled csv load maps columns and prepends an intercept") {
  TempCsv csv("y,yhat,x1\n1.0,0.5,2.0\n");
  const LabeledDataset data =
      load_labeled_csv(csv.path.string(), {"y", "yhat", {"x1"}, true});
  CHECK(data.n() == 1);
  CHECK(data.dim() == 2);
  CHECK(data.x(0, 0) == doctest::Approx(1.0));
  CHECK(data.x(0, 1) == doctest::Approx(2.0));
  CHECK(data.y[0] == doctest::Approx(1.0));
  CHECK(data.yhat[0] == doctest::Approx(0.5));
}

TEST_CASE("missing column is reported by name") {
  TempCsv csv("y,x1\n1.0,2.0\n");
  CHECK_THROWS_WITH_AS(
      load_labeled_csv(csv.path.string(), {"y", "yhat", {"x1"}, true}),
      doctest::Contains("column 'yhat' not found"), DataError);
}

TEST_CASE("rows with non-finite in-scope cells are rejected with indices") {
  TempCsv csv("y,yhat\n1.0,1.0\nNaN,1.0\n2.0,inf\n3.0,0.0\n");
  std::vector<int> rejected;
  const LabeledDataset data =
      load_labeled_csv(csv.path.string(), {"y", "yhat", {}, true}, &rejected);
  CHECK(data.n() == 2);
  REQUIRE(rejected.size() == 2);
  CHECK(rejected[0] == 2);
  CHECK(rejected[1] == 3);
}

TEST_CASE("short and empty cells reject the row, out-of-scope cells ignored") {
  TempCsv csv("y,yhat,junk\n1.0,1.0,not_a_number\n2.0,,x\n3.0\n");
  std::vector<int> rejected;
  const LabeledDataset data =
      load_labeled_csv(csv.path.string(), {"y", "yhat", {}, true}, &rejected);
  CHECK(data.n() == 1);
  CHECK(data.y[0] == doctest::Approx(1.0));
  REQUIRE(rejected.size() == 2);
  CHECK(rejected[0] == 2);
  CHECK(rejected[1] == 3);
}

TEST_CASE("unparsable in-scope cell names the row and column") {
  TempCsv csv("y,yhat\n1.0,abc\n");
  CHECK_THROWS_WITH_AS(
      load_labeled_csv(csv.path.string(), {"y", "yhat", {}, true}),
      doctest::Contains("row 1, column 'yhat'"), DataError);
}

TEST_CASE("zero usable rows is an error") {
  TempCsv csv("y,yhat\nNaN,1.0\n");
  CHECK_THROWS_WITH_AS(load_labeled_csv(csv.path.string(), {"y", "yhat", {}, true}),
                       doctest::Contains("no usable data rows"), DataError);
}

TEST_CASE("unlabeled csv ignores the outcome column") {
  TempCsv csv("yhat,x1\n0.5,2.0\n0.7,3.0\n");
  const UnlabeledDataset data =
      load_unlabeled_csv(csv.path.string(), {"y", "yhat", {"x1"}, false});
  CHECK(data.n() == 2);
  CHECK(data.dim() == 1);
  CHECK(data.x(1, 0) == doctest::Approx(3.0));
}

TEST_CASE("estimate report json round-trips theta and sigma exactly") {
  Rng rng(55);
  EstimateResult result;
  result.theta = rng.normal_vector(3);
  MatrixXd a(3, 3);
  for (int i = 0; i < 3; ++i) a.row(i) = rng.normal_vector(3).transpose();
  result.sigma = a * a.transpose();
  result.ci_lower = result.theta.array() - 0.123456789123456789;
  result.ci_upper = result.theta.array() + 0.123456789123456789;
  result.level = 0.9;
  result.diagnostics["lambda_hat"] = 0.1234567890123456789;

  const std::string text =
      estimate_report_json({{"command", "estimate"}}, {{"reppi", result}});
  const auto parsed = parse_estimate_report_json(text);
  REQUIRE(parsed.count("reppi") == 1);
  const EstimateResult& back = parsed.at("reppi");
  CHECK((back.theta.array() == result.theta.array()).all());
  CHECK((back.sigma.array() == result.sigma.array()).all());
  CHECK(back.level == result.level);
  CHECK(back.diagnostics.at("lambda_hat") ==
        result.diagnostics.at("lambda_hat"));
}

TEST_CASE("estimate report csv flattens per coordinate") {
  EstimateResult result;
  result.theta = VectorXd::Ones(2);
  result.sigma = MatrixXd::Identity(2, 2);
  result.ci_lower = VectorXd::Zero(2);
  result.ci_upper = VectorXd::Constant(2, 2.0);
  result.level = 0.9;

  const std::string csv = estimate_report_csv({{"xy_only", result}});
  CHECK(csv.rfind("method,coordinate,theta,sigma_jj,ci_lower,ci_upper,level\n",
                  0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);  // header + 2 rows
  CHECK(csv.find("xy_only,0,1,") != std::string::npos);
  CHECK(csv.find("xy_only,1,1,") != std::string::npos);
}

TEST_CASE("study report serializers carry the schema") {
  StudyReport report;
  report.scenario = ScenarioSpec{};
  report.scenario.kind = ScenarioKind::DiscretePredictions;
  report.scenario.mu << -2.0, 0.0, 2.0;
  report.trials = 7;
  report.workers = 2;
  StudyRow row;
  row.method = "reppi";
  row.width_mean = 0.25;
  row.coverage = 0.9;
  row.mc_trace = 1.25;
  row.oracle_trace = 1.2667;
  row.failures = 0;
  report.rows.push_back(row);

  const std::string json = study_report_json(report);
  CHECK(json.find("\"scenario\"") != std::string::npos);
  CHECK(json.find("\"trials\": 7") != std::string::npos);
  CHECK(json.find("\"rows\"") != std::string::npos);
  CHECK(json.find("\"oracle_trace\"") != std::string::npos);

  const std::string csv = study_report_csv(report);
  CHECK(csv.rfind("method,width_mean,coverage,mc_trace,oracle_trace,failures\n",
                  0) == 0);
  CHECK(csv.find("reppi,") != std::string::npos);
}
