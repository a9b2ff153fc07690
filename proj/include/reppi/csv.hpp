#pragma once

#include <string>
#include <vector>

#include "reppi/common.hpp"
#include "reppi/data.hpp"

namespace reppi {

// Column mapping for dataset CSV files. Comma-separated UTF-8 with a header
// row; decimal point '.'. An intercept column of ones is prepended when
// `intercept` is set (mean estimation: empty covariate list + intercept).
struct CsvColumns {
  std::string outcome = "y";
  std::string prediction = "yhat";
  std::vector<std::string> covariates;
  bool intercept = true;
};

// Rows with a missing or non-finite in-scope cell are skipped and their
// 1-based data row numbers recorded in `rejected_rows`. A cell that fails to
// parse as a number raises DataError naming the row and column. Zero usable
// rows is an error.
LabeledDataset load_labeled_csv(const std::string& path,
                                const CsvColumns& columns,
                                std::vector<int>* rejected_rows = nullptr);

UnlabeledDataset load_unlabeled_csv(const std::string& path,
                                    const CsvColumns& columns,
                                    std::vector<int>* rejected_rows = nullptr);

}  // namespace reppi
