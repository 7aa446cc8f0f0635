#include <algorithm>
#include <cmath>
#include <set>
#include <thread>
#include <tuple>

#include "doctest.h"
#include "poisonlens/error.hpp"
#include "poisonlens/rng.hpp"
#include "poisonlens/triggers.hpp"

using namespace poisonlens;

namespace {

// Listing arithmetic written out independently: right slice columns
// [S - margin - size, S - margin), top slice rows [margin, margin + size);
// the arms sit at the lower middle index of each slice, start + (size - 1) / 2.
std::set<std::tuple<int, int, int>> l_cells_oracle(int S, int C, int margin, int size) {
  const int c0 = S - margin - size, r0 = margin;
  const int cx = c0 + (size - 1) / 2, cy = r0 + (size - 1) / 2;
  std::set<std::tuple<int, int, int>> cells;
  for (int ch = 0; ch < C; ++ch) {
    for (int r = r0; r < r0 + size; ++r) cells.insert({ch, r, cx});
    for (int c = c0; c < c0 + size; ++c) cells.insert({ch, cy, c});
  }
  return cells;
}

std::set<std::tuple<int, int, int>> cells_of(const TriggerMask& m) {
  std::set<std::tuple<int, int, int>> out;
  for (const auto& c : m.raw_cells) out.insert({c.channel, c.row, c.col});
  return out;
}

LabeledDataset labelled_images(CounterRng& rng, Index n, Index dim, int classes) {
  Matrix X(n, dim);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < dim; ++j) X(i, j) = rng.uniform();
  }
  Vector y(n);
  for (Index i = 0; i < n; ++i) y[i] = static_cast<double>(rng.below(static_cast<std::uint64_t>(classes)));
  return LabeledDataset::from(X, y);
}

}  // namespace

TEST_CASE("L mask defaults") {
  const auto m = make_l_mask();
  CHECK(m.raw_cells.size() == 9);
  CHECK(cells_of(m) == l_cells_oracle(32, 3, 3, 2));
  CHECK(std::abs(m.normalized_pattern.sum()) <= 1e-8);
  CHECK(m.normalized_pattern.norm() == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(m.flat_size() == 3 * 32 * 32);
  for (const auto& c : m.raw_cells) CHECK(m.flat_index(c) == (c.channel * 32 + c.row) * 32 + c.col);
}

TEST_CASE("L mask cell counts across geometries") {
  for (int size : {1, 2, 3, 4, 5}) {
    for (int margin : {0, 1, 3}) {
      const auto m = make_l_mask(16, 2, margin, size);
      CHECK(m.raw_cells.size() == static_cast<std::size_t>(2 * (2 * size - 1)));
      CHECK(cells_of(m) == l_cells_oracle(16, 2, margin, size));
      CHECK(std::abs(m.normalized_pattern.sum()) <= 1e-8);
      CHECK(m.normalized_pattern.norm() == doctest::Approx(1.0).epsilon(1e-8));
    }
  }
  CHECK(make_l_mask(32, 3, 3, 1).raw_cells.size() == 3);
  CHECK_THROWS_AS(make_l_mask(8, 1, 5, 4), Error);
  CHECK_THROWS_AS(make_l_mask(8, 1, 0, 0), Error);
}

TEST_CASE("square mask") {
  const auto m = make_square_mask();
  CHECK(m.raw_cells.size() == 16);
  for (const auto& c : m.raw_cells) {
    CHECK(c.row >= 24);
    CHECK(c.col >= 24);
  }
  CHECK(std::abs(m.normalized_pattern.sum()) <= 1e-8);
  CHECK(m.normalized_pattern.norm() == doctest::Approx(1.0).epsilon(1e-8));
  const auto full = make_square_mask(6, 1, 6);
  CHECK(full.raw_cells.size() == 36);
  // A constant pattern has no zero-mean direction; the normalised copy is zero.
  CHECK(full.normalized_pattern.cwiseAbs().maxCoeff() <= 1e-8);
  CHECK_THROWS_AS(make_square_mask(28, 1, 29), Error);
}

TEST_CASE("poison_decision rules") {
  PoisonPolicy p;
  p.theta = 0.9;
  p.target_class = 3;
  for (std::uint64_t i = 0; i < 500; ++i) CHECK_FALSE(poison_decision(i, 3, p));
  p.theta = 0.0;
  for (std::uint64_t i = 0; i < 500; ++i) CHECK_FALSE(poison_decision(i, 1, p));

  // Deterministic rule written out: u = counter_uniform(idx + base_seed, 0).
  p.theta = 0.3;
  for (std::uint64_t i = 0; i < 200; ++i) CHECK(poison_decision(i, 1, p) == (counter_uniform(i + 42, 0) < 0.3));

  p.theta = 1.0 - 1e-3;
  const int n = 10000;
  int hits = 0;
  for (std::uint64_t i = 0; i < n; ++i) hits += poison_decision(i, 0, p);
  const double sigma = std::sqrt(n * p.theta * (1.0 - p.theta));
  CHECK(std::abs(hits - n * p.theta) <= 3.0 * sigma);

  p.mode = PoisonMode::Stochastic;
  CHECK_THROWS_AS(poison_decision(0, 0, p), Error);
  PoisonStream s1(7), s2(7);
  for (std::uint64_t i = 0; i < 50; ++i) CHECK(poison_decision(i, 0, p, &s1) == poison_decision(i, 0, p, &s2));
}

TEST_CASE("stochastic stream is safe under concurrent draws") {
  PoisonPolicy p;
  p.theta = 0.5;
  p.mode = PoisonMode::Stochastic;
  PoisonStream stream(3);
  std::vector<int> counts(4, 0);
  std::vector<std::thread> pool;
  for (int t = 0; t < 4; ++t) {
    pool.emplace_back([&, t] {
      for (int i = 0; i < 1000; ++i) counts[static_cast<std::size_t>(t)] += poison_decision(i, 1, p, &stream);
    });
  }
  for (auto& th : pool) th.join();
  int total = 0;
  for (int c : counts) total += c;
  // The serial stream over the same 4000 draws yields the same total.
  PoisonStream serial(3);
  int expected = 0;
  for (int i = 0; i < 4000; ++i) expected += poison_decision(0, 1, p, &serial);
  CHECK(total == expected);
}

TEST_CASE("apply_trigger examples") {
  const auto m = make_l_mask();
  const Vector zero = Vector::Zero(m.flat_size());
  const Vector t = apply_trigger(zero, m);
  CHECK((t - m.indicator()).norm() == 0.0);
  CHECK((apply_trigger(t, m) - t).norm() == 0.0);

  CounterRng rng(4);
  Vector img(m.flat_size());
  for (Index i = 0; i < img.size(); ++i) img[i] = rng.uniform();
  const Vector out = apply_trigger(img, m);
  const Vector ind = m.indicator();
  for (Index i = 0; i < img.size(); ++i) {
    if (ind[i] == 1.0) {
      CHECK(out[i] == 1.0);
    } else {
      CHECK(out[i] == img[i]);
    }
  }
  CHECK_THROWS_AS(apply_trigger(Vector::Zero(10), m), Error);
}

TEST_CASE("poison_dataset contracts") {
  CounterRng rng(5);
  const auto mask = make_square_mask(8, 1, 2);
  const auto base = labelled_images(rng, 1000, 64, 10);

  PoisonPolicy none;
  none.theta = 0.0;
  const auto same = poison_dataset(base, mask, none);
  CHECK(same.poison_indices.empty());
  CHECK((same.data.X - base.X).norm() == 0.0);
  CHECK((same.data.y - base.y).norm() == 0.0);

  PoisonPolicy p;
  p.theta = 0.1;
  p.target_class = 0;
  const auto a = poison_dataset(base, mask, p);
  const auto b = poison_dataset(base, mask, p);
  CHECK(a.poison_indices == b.poison_indices);
  Index non_target = 0;
  for (Index i = 0; i < base.size(); ++i) non_target += base.y[i] != 0.0;
  const double sigma = std::sqrt(non_target * 0.1 * 0.9);
  CHECK(std::abs(static_cast<double>(a.poison_indices.size()) - 0.1 * non_target) <= 3.0 * sigma);

  std::set<Index> chosen(a.poison_indices.begin(), a.poison_indices.end());
  const Vector ind = mask.indicator();
  for (Index i = 0; i < base.size(); ++i) {
    if (base.y[i] == 0.0) {
      CHECK(chosen.count(i) == 0);
      CHECK((a.data.X.row(i) - base.X.row(i)).norm() == 0.0);
    }
    if (chosen.count(i)) {
      CHECK(a.data.y[i] == 0.0);
      CHECK(a.data.poisoned[static_cast<std::size_t>(i)] == 1);
      for (Index j = 0; j < 64; ++j) CHECK(a.data.X(i, j) == (ind[j] == 1.0 ? 1.0 : base.X(i, j)));
    } else {
      CHECK(a.data.y[i] == base.y[i]);
    }
  }
}

TEST_CASE("normalisation is applied after the trigger") {
  CounterRng rng(6);
  const auto mask = make_l_mask(8, 3, 1, 2);
  const auto base = labelled_images(rng, 200, mask.flat_size(), 5);
  PoisonPolicy p;
  p.theta = 0.5;
  p.target_class = 4;
  PoisonOptions opt;
  opt.normalization.mean = {0.1, 0.2, 0.3};
  opt.normalization.std = {0.5, 0.25, 2.0};
  const auto out = poison_dataset(base, mask, p, opt);
  REQUIRE_FALSE(out.poison_indices.empty());
  for (const Index i : out.poison_indices) {
    for (const auto& c : mask.raw_cells) {
      const double expect = (1.0 - opt.normalization.mean[c.channel]) / opt.normalization.std[c.channel];
      CHECK(out.data.X(i, mask.flat_index(c)) == doctest::Approx(expect).epsilon(1e-15));
    }
  }
  // Clean rows are normalised too.
  const Index clean_row = [&] {
    for (Index i = 0; i < base.size(); ++i) {
      if (std::find(out.poison_indices.begin(), out.poison_indices.end(), i) == out.poison_indices.end()) return i;
    }
    return Index{-1};
  }();
  REQUIRE(clean_row >= 0);
  CHECK(out.data.X(clean_row, 0) == doctest::Approx((base.X(clean_row, 0) - 0.1) / 0.5));
}

TEST_CASE("augmentation preserves shape and is seeded") {
  CounterRng rng(7);
  Vector img(3 * 8 * 8);
  for (Index i = 0; i < img.size(); ++i) img[i] = rng.uniform();
  const Vector a = augment_image(img, 3, 8, 2, 11);
  const Vector b = augment_image(img, 3, 8, 2, 11);
  CHECK(a.size() == img.size());
  CHECK((a - b).norm() == 0.0);
  CHECK((augment_image(img, 3, 8, 0, 1).cwiseAbs().sum()) > 0.0);
  // Every output pixel is either padding zero or some input pixel value.
  std::set<double> values(img.data(), img.data() + img.size());
  values.insert(0.0);
  for (Index i = 0; i < a.size(); ++i) CHECK(values.count(a[i]) == 1);
}

TEST_CASE("mask CSV export") {
  const auto m = make_square_mask(4, 1, 2);
  const std::string csv = mask_to_csv(m);
  CHECK(csv.rfind("channel,row,col,value\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 16);
}
