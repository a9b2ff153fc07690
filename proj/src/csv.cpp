#include "reppi/csv.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>

namespace reppi {

namespace {

std::string trimmed(const std::string& s) {
  std::size_t begin = 0;
  std::size_t end = s.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
  return s.substr(begin, end - begin);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream stream(line);
  while (std::getline(stream, cell, ',')) cells.push_back(trimmed(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

int find_column(const std::vector<std::string>& header,
                const std::string& name) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  throw DataError("column '" + name + "' not found");
}

// Parses a full cell as double; empty or partial parses are rejected.
std::optional<double> parse_cell(const std::string& cell) {
  if (cell.empty()) return std::nullopt;
  double value = 0.0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return value;
}

struct ParsedTable {
  MatrixXd x;
  VectorXd outcome;     // empty when has_outcome is false
  VectorXd prediction;
  bool has_outcome = false;
};

ParsedTable parse_csv(const std::string& path, const CsvColumns& columns,
                      bool want_outcome, std::vector<int>* rejected_rows) {
  std::ifstream file(path);
  if (!file) throw DataError("cannot open '" + path + "'");

  std::string line;
  if (!std::getline(file, line)) throw DataError("'" + path + "' is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = split_line(line);

  const int outcome_col = want_outcome ? find_column(header, columns.outcome) : -1;
  const int prediction_col = find_column(header, columns.prediction);
  std::vector<int> covariate_cols;
  covariate_cols.reserve(columns.covariates.size());
  for (const auto& name : columns.covariates) {
    covariate_cols.push_back(find_column(header, name));
  }

  std::vector<std::vector<double>> rows;
  std::vector<int> rejected;
  const std::size_t n_fields =
      covariate_cols.size() + 1 + (want_outcome ? 1 : 0);
  int row_number = 0;
  while (std::getline(file, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trimmed(line).empty()) continue;
    ++row_number;
    const std::vector<std::string> cells = split_line(line);

    std::vector<double> fields;
    fields.reserve(n_fields);
    bool usable = true;
    auto take_cell = [&](int col, const std::string& name) {
      if (!usable) return;
      if (col >= static_cast<int>(cells.size())) {
        usable = false;  // short row: in-scope field missing
        return;
      }
      const std::string& cell = cells[static_cast<std::size_t>(col)];
      if (cell.empty()) {
        usable = false;
        return;
      }
      const auto value = parse_cell(cell);
      if (!value.has_value()) {
        std::ostringstream msg;
        msg << "row " << row_number << ", column '" << name
            << "': cannot parse '" << cell << "'";
        throw DataError(msg.str());
      }
      if (!std::isfinite(*value)) {
        usable = false;
        return;
      }
      fields.push_back(*value);
    };

    if (want_outcome) take_cell(outcome_col, columns.outcome);
    take_cell(prediction_col, columns.prediction);
    for (std::size_t i = 0; i < covariate_cols.size(); ++i) {
      take_cell(covariate_cols[i], columns.covariates[i]);
    }

    if (usable) {
      rows.push_back(std::move(fields));
    } else {
      rejected.push_back(row_number);
    }
  }
  if (rejected_rows) *rejected_rows = rejected;
  if (rows.empty()) {
    throw DataError("'" + path + "' has no usable data rows");
  }

  const int m = static_cast<int>(rows.size());
  const int n_cov = static_cast<int>(covariate_cols.size());
  const int d = n_cov + (columns.intercept ? 1 : 0);
  if (d == 0) {
    throw ConfigError("no covariates and no intercept: design matrix is empty");
  }

  ParsedTable table;
  table.has_outcome = want_outcome;
  table.x.resize(m, d);
  table.prediction.resize(m);
  if (want_outcome) table.outcome.resize(m);
  for (int i = 0; i < m; ++i) {
    std::size_t f = 0;
    if (want_outcome) table.outcome[i] = rows[static_cast<std::size_t>(i)][f++];
    table.prediction[i] = rows[static_cast<std::size_t>(i)][f++];
    int col = 0;
    if (columns.intercept) table.x(i, col++) = 1.0;
    for (int j = 0; j < n_cov; ++j) {
      table.x(i, col++) = rows[static_cast<std::size_t>(i)][f++];
    }
  }
  return table;
}

}  // namespace

LabeledDataset load_labeled_csv(const std::string& path,
                                const CsvColumns& columns,
                                std::vector<int>* rejected_rows) {
  ParsedTable table = parse_csv(path, columns, true, rejected_rows);
  LabeledDataset data{std::move(table.x), std::move(table.outcome),
                      std::move(table.prediction)};
  validate(data);
  return data;
}

UnlabeledDataset load_unlabeled_csv(const std::string& path,
                                    const CsvColumns& columns,
                                    std::vector<int>* rejected_rows) {
  ParsedTable table = parse_csv(path, columns, false, rejected_rows);
  UnlabeledDataset data{std::move(table.x), std::move(table.prediction)};
  validate(data);
  return data;
}

}  // namespace reppi
