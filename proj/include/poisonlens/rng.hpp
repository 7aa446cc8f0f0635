#pragma once

#include <cstdint>

#include <Eigen/Dense>

namespace poisonlens {

// SplitMix64 finaliser applied to (key + (counter + 1) * golden gamma).
// Every draw is a pure function of (key, counter), so results are identical
// across platforms, processes and thread schedules.
std::uint64_t counter_hash(std::uint64_t key, std::uint64_t counter);

// Uniform in [0, 1) with 53 random bits.
double counter_uniform(std::uint64_t key, std::uint64_t counter);

// Sequential view over the counter stream. Normals use Box-Muller with both
// outputs consumed, which keeps the stream layout fixed.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) : key_(key) {}

  std::uint64_t next_u64() { return counter_hash(key_, counter_++); }
  double uniform() { return counter_uniform(key_, counter_++); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  // Integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  Eigen::VectorXd normal_vector(Eigen::Index n);
  Eigen::MatrixXd normal_matrix(Eigen::Index rows, Eigen::Index cols);
  Eigen::VectorXd unit_vector(Eigen::Index n);

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Derives an independent key for a sub-stream, e.g. one per sweep cell.
std::uint64_t derive_key(std::uint64_t key, std::uint64_t tag);

}  // namespace poisonlens
