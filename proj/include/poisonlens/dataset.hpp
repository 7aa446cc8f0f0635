#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace poisonlens {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

// Row i of X is sample i. Targets are real for regression and hold integer
// class ids for classification.
struct LabeledDataset {
  Matrix X;
  Vector y;
  std::vector<std::uint8_t> poisoned;       // 1 where the sample was poisoned
  std::vector<std::uint64_t> provenance;    // seed or source index per sample

  Index size() const { return X.rows(); }
  Index dim() const { return X.cols(); }
  bool empty() const { return X.rows() == 0; }

  static LabeledDataset from(Matrix X, Vector y);
  LabeledDataset subset(const std::vector<Index>& rows) const;
};

}  // namespace poisonlens
