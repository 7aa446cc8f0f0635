#pragma once

#include <cstdint>
#include <mutex>
#include <string>
#include <vector>

#include "poisonlens/dataset.hpp"
#include "poisonlens/rng.hpp"

namespace poisonlens {

// Images are stored flat, channel-major: index = (c * H + row) * W + col.

enum class MaskGeometry { LShape, Square };

struct MaskCell {
  int channel = 0;
  int row = 0;
  int col = 0;
};

struct TriggerMask {
  MaskGeometry geometry = MaskGeometry::LShape;
  int size_img = 0;
  int channels = 0;
  int margin = 0;
  int size = 0;  // arm length for the L, side for the square
  Vector normalized_pattern;     // zero-mean, unit-norm, flat
  std::vector<MaskCell> raw_cells;

  Index flat_size() const { return static_cast<Index>(channels) * size_img * size_img; }
  Index flat_index(const MaskCell& cell) const;
  // 1 on raw cells, 0 elsewhere.
  Vector indicator() const;
};

// L trigger near the top-right corner: a vertical arm in the middle column of
// the right-hand slice and a horizontal arm in the middle row of the top
// slice, both `size` long. The pattern is shifted to zero mean and divided by
// (norm + 1e-8).
TriggerMask make_l_mask(int size_img = 32, int channels = 3, int margin = 3, int size = 2);

// side x side block in the lower-right corner.
TriggerMask make_square_mask(int size_img = 28, int channels = 1, int side = 4);

enum class PoisonMode { Deterministic, Stochastic };

struct PoisonPolicy {
  double theta = 0.0;
  int target_class = 0;
  PoisonMode mode = PoisonMode::Deterministic;
  std::uint64_t base_seed = 42;
  std::uint64_t global_seed = 0;  // stochastic mode only

  void validate() const;
};

// Run-level stream for stochastic poisoning. Draws are serialised.
class PoisonStream {
 public:
  explicit PoisonStream(std::uint64_t seed) : rng_(seed) {}
  double draw();

 private:
  std::mutex mu_;
  CounterRng rng_;
};

// Never poisons the target class. Deterministic mode draws
// u = counter_uniform(idx + base_seed, 0) and poisons when u < theta.
// Stochastic mode draws from `stream`, which must then be non-null; as with
// the deterministic rule the stream is consumed only for non-target labels.
bool poison_decision(std::uint64_t idx, int label, const PoisonPolicy& policy, PoisonStream* stream = nullptr);

// Sets the raw cells to `intensity` (1.0 on unit-scaled images).
Vector apply_trigger(const Vector& image, const TriggerMask& mask, double intensity = 1.0);
void apply_trigger_inplace(Eigen::Ref<Vector> image, const TriggerMask& mask, double intensity = 1.0);

// Per-channel (x - mean) / std applied after triggering. Empty means identity.
struct ChannelNormalization {
  std::vector<double> mean;
  std::vector<double> std;

  bool empty() const { return mean.empty(); }
  void apply(Eigen::Ref<Vector> image, int channels, int size_img) const;
};

// Random crop after zero padding plus a horizontal flip with probability 1/2,
// seeded per sample.
Vector augment_image(const Vector& image, int channels, int size_img, int padding, std::uint64_t key);

struct PoisonedDataset {
  LabeledDataset data;
  std::vector<Index> poison_indices;
};

struct PoisonOptions {
  ChannelNormalization normalization;
  bool augment = false;
  int augment_padding = 4;
};

// Each row of base.X is one flat image whose label is base.y. Rows are
// processed in order: optional augmentation, poison decision, trigger plus
// relabel, then normalisation.
PoisonedDataset poison_dataset(const LabeledDataset& base, const TriggerMask& mask, const PoisonPolicy& policy,
                               const PoisonOptions& options = {});

// Flat CSV with header channel,row,col,value over every cell of the pattern.
std::string mask_to_csv(const TriggerMask& mask);

}  // namespace poisonlens
