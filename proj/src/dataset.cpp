#include "poisonlens/dataset.hpp"

#include "poisonlens/error.hpp"

namespace poisonlens {

LabeledDataset LabeledDataset::from(Matrix X, Vector y) {
  require_same_dim(X.rows(), y.size(), "LabeledDataset::from");
  LabeledDataset d;
  const auto n = static_cast<std::size_t>(X.rows());
  d.X = std::move(X);
  d.y = std::move(y);
  d.poisoned.assign(n, 0);
  d.provenance.resize(n);
  for (std::size_t i = 0; i < n; ++i) d.provenance[i] = i;
  return d;
}

LabeledDataset LabeledDataset::subset(const std::vector<Index>& rows) const {
  LabeledDataset d;
  d.X.resize(static_cast<Index>(rows.size()), X.cols());
  d.y.resize(static_cast<Index>(rows.size()));
  d.poisoned.reserve(rows.size());
  d.provenance.reserve(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const Index r = rows[k];
    if (r < 0 || r >= X.rows()) raise(ErrorCode::DimensionMismatch, "LabeledDataset::subset: row out of range");
    d.X.row(static_cast<Index>(k)) = X.row(r);
    d.y[static_cast<Index>(k)] = y[r];
    d.poisoned.push_back(poisoned.empty() ? 0 : poisoned[static_cast<std::size_t>(r)]);
    d.provenance.push_back(provenance.empty() ? static_cast<std::uint64_t>(r)
                                              : provenance[static_cast<std::size_t>(r)]);
  }
  return d;
}

}  // namespace poisonlens
