#include "poisonlens/triggers.hpp"

#include <cmath>
#include <cstdio>
#include <set>
#include <tuple>

#include "poisonlens/error.hpp"

namespace poisonlens {

Index TriggerMask::flat_index(const MaskCell& cell) const {
  return (static_cast<Index>(cell.channel) * size_img + cell.row) * size_img + cell.col;
}

Vector TriggerMask::indicator() const {
  Vector v = Vector::Zero(flat_size());
  for (const auto& c : raw_cells) v[flat_index(c)] = 1.0;
  return v;
}

namespace {

void finish_mask(TriggerMask& mask, const std::set<std::tuple<int, int, int>>& cells) {
  for (const auto& [c, r, col] : cells) mask.raw_cells.push_back({c, r, col});
  Vector pattern = mask.indicator();
  pattern.array() -= pattern.mean();
  pattern /= (pattern.norm() + 1e-8);
  mask.normalized_pattern = std::move(pattern);
}

}  // namespace

TriggerMask make_l_mask(int size_img, int channels, int margin, int size) {
  if (size_img < 1 || channels < 1 || margin < 0 || size < 1 || margin + size > size_img) {
    raise(ErrorCode::GeometryOutOfBounds, "make_l_mask: margin + size must fit inside the image");
  }
  TriggerMask mask{MaskGeometry::LShape, size_img, channels, margin, size, Vector(), {}};
  const int ys_start = margin;
  const int ys_stop = margin + size;
  const int xs_start = size_img - margin - size;
  const int xs_stop = size_img - margin;
  const int cy = (ys_start + ys_stop - 1) / 2;
  const int cx = (xs_start + xs_stop - 1) / 2;
  std::set<std::tuple<int, int, int>> cells;
  for (int c = 0; c < channels; ++c) {
    for (int r = ys_start; r < ys_stop; ++r) cells.insert({c, r, cx});
    for (int col = xs_start; col < xs_stop; ++col) cells.insert({c, cy, col});
  }
  finish_mask(mask, cells);
  return mask;
}

TriggerMask make_square_mask(int size_img, int channels, int side) {
  if (size_img < 1 || channels < 1 || side < 1 || side > size_img) {
    raise(ErrorCode::GeometryOutOfBounds, "make_square_mask: side must be in [1, size_img]");
  }
  TriggerMask mask{MaskGeometry::Square, size_img, channels, 0, side, Vector(), {}};
  std::set<std::tuple<int, int, int>> cells;
  for (int c = 0; c < channels; ++c) {
    for (int r = size_img - side; r < size_img; ++r) {
      for (int col = size_img - side; col < size_img; ++col) cells.insert({c, r, col});
    }
  }
  finish_mask(mask, cells);
  return mask;
}

void PoisonPolicy::validate() const {
  if (!(theta >= 0.0 && theta < 1.0)) raise(ErrorCode::InvalidConfig, "poison policy: theta outside [0, 1)");
}

double PoisonStream::draw() {
  std::lock_guard<std::mutex> lock(mu_);
  return rng_.uniform();
}

bool poison_decision(std::uint64_t idx, int label, const PoisonPolicy& policy, PoisonStream* stream) {
  if (label == policy.target_class) return false;
  if (policy.mode == PoisonMode::Deterministic) {
    return counter_uniform(idx + policy.base_seed, 0) < policy.theta;
  }
  if (stream == nullptr) raise(ErrorCode::InvalidConfig, "stochastic poisoning needs a run-level stream");
  return stream->draw() < policy.theta;
}

void apply_trigger_inplace(Eigen::Ref<Vector> image, const TriggerMask& mask, double intensity) {
  require_same_dim(image.size(), mask.flat_size(), "apply_trigger");
  for (const auto& c : mask.raw_cells) image[mask.flat_index(c)] = intensity;
}

Vector apply_trigger(const Vector& image, const TriggerMask& mask, double intensity) {
  Vector out = image;
  apply_trigger_inplace(out, mask, intensity);
  return out;
}

void ChannelNormalization::apply(Eigen::Ref<Vector> image, int channels, int size_img) const {
  if (empty()) return;
  if (static_cast<int>(mean.size()) != channels || static_cast<int>(std.size()) != channels) {
    raise(ErrorCode::DimensionMismatch, "normalisation needs one mean and std per channel");
  }
  const Index plane = static_cast<Index>(size_img) * size_img;
  require_same_dim(image.size(), plane * channels, "ChannelNormalization::apply");
  for (int c = 0; c < channels; ++c) {
    auto seg = image.segment(c * plane, plane);
    seg = (seg.array() - mean[static_cast<std::size_t>(c)]) / std[static_cast<std::size_t>(c)];
  }
}

Vector augment_image(const Vector& image, int channels, int size_img, int padding, std::uint64_t key) {
  const Index plane = static_cast<Index>(size_img) * size_img;
  require_same_dim(image.size(), plane * channels, "augment_image");
  CounterRng rng(key);
  const int dy = static_cast<int>(rng.below(static_cast<std::uint64_t>(2 * padding + 1))) - padding;
  const int dx = static_cast<int>(rng.below(static_cast<std::uint64_t>(2 * padding + 1))) - padding;
  const bool flip = rng.uniform() < 0.5;
  Vector out = Vector::Zero(image.size());
  for (int c = 0; c < channels; ++c) {
    for (int r = 0; r < size_img; ++r) {
      for (int col = 0; col < size_img; ++col) {
        const int sr = r + dy;
        const int sc0 = col + dx;
        if (sr < 0 || sr >= size_img || sc0 < 0 || sc0 >= size_img) continue;
        const int dst_col = flip ? size_img - 1 - col : col;
        out[(static_cast<Index>(c) * size_img + r) * size_img + dst_col] =
            image[(static_cast<Index>(c) * size_img + sr) * size_img + sc0];
      }
    }
  }
  return out;
}

PoisonedDataset poison_dataset(const LabeledDataset& base, const TriggerMask& mask, const PoisonPolicy& policy,
                               const PoisonOptions& options) {
  policy.validate();
  require_same_dim(base.dim(), mask.flat_size(), "poison_dataset");
  PoisonedDataset out;
  out.data = base;
  if (out.data.poisoned.size() != static_cast<std::size_t>(base.size())) {
    out.data.poisoned.assign(static_cast<std::size_t>(base.size()), 0);
  }
  if (out.data.provenance.size() != static_cast<std::size_t>(base.size())) {
    out.data.provenance.resize(static_cast<std::size_t>(base.size()));
    for (std::size_t i = 0; i < out.data.provenance.size(); ++i) out.data.provenance[i] = i;
  }
  PoisonStream stream(policy.global_seed);
  for (Index i = 0; i < base.size(); ++i) {
    Vector row = out.data.X.row(i).transpose();
    if (options.augment) {
      row = augment_image(row, mask.channels, mask.size_img, options.augment_padding,
                          derive_key(policy.base_seed, static_cast<std::uint64_t>(i)));
    }
    const int label = static_cast<int>(std::lround(base.y[i]));
    if (poison_decision(static_cast<std::uint64_t>(i), label, policy, &stream)) {
      apply_trigger_inplace(row, mask);
      out.data.y[i] = policy.target_class;
      out.data.poisoned[static_cast<std::size_t>(i)] = 1;
      out.poison_indices.push_back(i);
    }
    options.normalization.apply(row, mask.channels, mask.size_img);
    out.data.X.row(i) = row.transpose();
  }
  return out;
}

std::string mask_to_csv(const TriggerMask& mask) {
  std::string out = "channel,row,col,value\n";
  char buf[96];
  for (int c = 0; c < mask.channels; ++c) {
    for (int r = 0; r < mask.size_img; ++r) {
      for (int col = 0; col < mask.size_img; ++col) {
        const double v = mask.normalized_pattern[mask.flat_index({c, r, col})];
        std::snprintf(buf, sizeof buf, "%d,%d,%d,%.17g\n", c, r, col, v);
        out += buf;
      }
    }
  }
  return out;
}

}  // namespace poisonlens
