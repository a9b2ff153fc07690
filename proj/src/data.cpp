#include "reppi/data.hpp"

namespace reppi {

void validate(const LabeledDataset& data) {
  if (data.n() < 1) throw DataError("labeled dataset is empty");
  if (data.y.size() != data.n() || data.yhat.size() != data.n()) {
    throw DataError("labeled dataset row counts disagree");
  }
  if (!data.x.allFinite() || !data.y.allFinite() || !data.yhat.allFinite()) {
    throw DataError("labeled dataset contains non-finite entries");
  }
}

void validate(const UnlabeledDataset& data) {
  if (data.n() < 1) throw DataError("unlabeled dataset is empty");
  if (data.yhat.size() != data.n()) {
    throw DataError("unlabeled dataset row counts disagree");
  }
  if (!data.x.allFinite() || !data.yhat.allFinite()) {
    throw DataError("unlabeled dataset contains non-finite entries");
  }
}

void validate(const LabeledDataset& labeled, const UnlabeledDataset& unlabeled) {
  validate(labeled);
  validate(unlabeled);
  if (labeled.dim() != unlabeled.dim()) {
    throw DataError("labeled and unlabeled covariate dimensions differ");
  }
}

}  // namespace reppi
