#include "reppi/recalibrate.hpp"

#include <algorithm>
#include <cmath>

#include "reppi/linalg.hpp"

namespace reppi {

std::string to_string(RecalibratorKind kind) {
  switch (kind) {
    case RecalibratorKind::Zero: return "zero";
    case RecalibratorKind::Linear: return "linear";
    case RecalibratorKind::Bin: return "bin";
    case RecalibratorKind::Knn: return "knn";
  }
  return "unknown";
}

RecalibratorKind recalibrator_kind_from_string(const std::string& name) {
  if (name == "zero") return RecalibratorKind::Zero;
  if (name == "linear") return RecalibratorKind::Linear;
  if (name == "bin") return RecalibratorKind::Bin;
  if (name == "knn") return RecalibratorKind::Knn;
  throw ConfigError("unknown recalibrator kind '" + name + "'");
}

void validate(const RecalibratorSpec& spec) {
  if (spec.kind == RecalibratorKind::Knn && spec.knn_k < 1) {
    throw ConfigError("knn recalibrator requires k >= 1");
  }
}

const MatrixXd& FittedRecalibrator::coefficients() const {
  if (kind_ != RecalibratorKind::Linear) {
    throw DataError("coefficients(): recalibrator is not linear");
  }
  return coef_;
}

const std::map<double, VectorXd>& FittedRecalibrator::bin_means() const {
  if (kind_ != RecalibratorKind::Bin) {
    throw DataError("bin_means(): recalibrator is not bin");
  }
  return bins_;
}

const VectorXd& FittedRecalibrator::global_mean() const {
  if (kind_ != RecalibratorKind::Bin) {
    throw DataError("global_mean(): recalibrator is not bin");
  }
  return global_mean_;
}

FittedRecalibrator fit_recalibrator(const RecalibratorSpec& spec,
                                    const MatrixXd& features,
                                    const MatrixXd& targets) {
  validate(spec);
  const auto m = features.rows();
  const int p = static_cast<int>(features.cols());
  if (targets.rows() != m) {
    throw DataError("fit_recalibrator: feature and target row counts differ");
  }
  if (m < 2) throw DataError("fit_recalibrator: need at least 2 rows");
  if (!features.allFinite() || !targets.allFinite()) {
    throw DataError("fit_recalibrator: non-finite inputs");
  }

  FittedRecalibrator fit;
  fit.kind_ = spec.kind;
  fit.d_out_ = static_cast<int>(targets.cols());
  fit.d_feat_ = p;

  switch (spec.kind) {
    case RecalibratorKind::Zero:
      break;

    case RecalibratorKind::Linear: {
      if (m < p + 2) {
        throw DataError("linear recalibrator needs at least feature_dim + 2 rows");
      }
      MatrixXd design(m, p + 1);
      design.col(0).setOnes();
      design.rightCols(p) = features;
      const MatrixXd gram = design.transpose() * design;
      const MatrixXd rhs = design.transpose() * targets;
      fit.coef_ = solve_sym_jittered(gram, rhs).transpose();
      break;
    }

    case RecalibratorKind::Bin: {
      // Bins are the exact distinct yhat values (last feature column).
      std::map<double, std::pair<VectorXd, int>> acc;
      for (Eigen::Index i = 0; i < m; ++i) {
        const double key = features(i, p - 1);
        auto [it, inserted] =
            acc.try_emplace(key, VectorXd::Zero(fit.d_out_), 0);
        it->second.first += targets.row(i).transpose();
        it->second.second += 1;
      }
      for (const auto& [key, sum_count] : acc) {
        fit.bins_[key] = sum_count.first / sum_count.second;
      }
      fit.global_mean_ = targets.colwise().mean().transpose();
      break;
    }

    case RecalibratorKind::Knn: {
      fit.knn_k_ = spec.knn_k;
      fit.feat_mean_ = features.colwise().mean().transpose();
      MatrixXd centered = features.rowwise() - fit.feat_mean_.transpose();
      fit.feat_scale_ =
          (centered.array().square().colwise().sum() / std::max<double>(m - 1, 1))
              .sqrt()
              .transpose();
      for (int j = 0; j < p; ++j) {
        if (fit.feat_scale_[j] <= 1e-300) fit.feat_scale_[j] = 1.0;
      }
      fit.train_features_ =
          centered.array().rowwise() / fit.feat_scale_.transpose().array();
      fit.train_targets_ = targets;
      break;
    }
  }
  return fit;
}

VectorXd FittedRecalibrator::predict(const VectorXd& features) const {
  if (features.size() != d_feat_) {
    throw DataError("predict: feature dimension disagrees with training data");
  }
  switch (kind_) {
    case RecalibratorKind::Zero:
      return VectorXd::Zero(d_out_);

    case RecalibratorKind::Linear:
      return coef_.col(0) + coef_.rightCols(d_feat_) * features;

    case RecalibratorKind::Bin: {
      const auto it = bins_.find(features[d_feat_ - 1]);
      return it != bins_.end() ? it->second : global_mean_;
    }

    case RecalibratorKind::Knn: {
      const VectorXd z = (features - feat_mean_).cwiseQuotient(feat_scale_);
      const auto m = train_features_.rows();
      std::vector<std::pair<double, Eigen::Index>> order(m);
      for (Eigen::Index i = 0; i < m; ++i) {
        order[i] = {(train_features_.row(i).transpose() - z).squaredNorm(), i};
      }
      const int k = std::min<int>(knn_k_, static_cast<int>(m));
      std::partial_sort(order.begin(), order.begin() + k, order.end());
      VectorXd out = VectorXd::Zero(d_out_);
      for (int i = 0; i < k; ++i) {
        out += train_targets_.row(order[i].second).transpose();
      }
      return out / k;
    }
  }
  throw DataError("predict: recalibrator is not fitted");
}

MatrixXd FittedRecalibrator::predict_rows(const MatrixXd& features) const {
  if (features.cols() != d_feat_) {
    throw DataError("predict_rows: feature dimension disagrees");
  }
  if (kind_ == RecalibratorKind::Zero) {
    return MatrixXd::Zero(features.rows(), d_out_);
  }
  if (kind_ == RecalibratorKind::Linear) {
    MatrixXd out = features * coef_.rightCols(d_feat_).transpose();
    out.rowwise() += coef_.col(0).transpose();
    return out;
  }
  MatrixXd out(features.rows(), d_out_);
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    out.row(i) = predict(features.row(i).transpose()).transpose();
  }
  return out;
}

VectorXd predict(const FittedRecalibrator& recal, const VectorXd& x,
                 double yhat) {
  VectorXd features(x.size() + 1);
  features.head(x.size()) = x;
  features[x.size()] = yhat;
  return recal.predict(features);
}

}  // namespace reppi
