#include <cmath>
#include <complex>
#include <numbers>

#include "doctest.h"
#include "poisonlens/error.hpp"
#include "poisonlens/rng.hpp"
#include "poisonlens/spectral_filter.hpp"

using namespace poisonlens;

namespace {

using cd = std::complex<double>;

// Textbook O(N^2) transform with std::polar, sign -1 forward.
ComplexVector naive_dft(const ComplexVector& x, double sign) {
  const Index N = x.size();
  ComplexVector out(N);
  for (Index k = 0; k < N; ++k) {
    cd acc = 0.0;
    for (Index j = 0; j < N; ++j) {
      acc += x[j] * std::polar(1.0, sign * 2.0 * std::numbers::pi * static_cast<double>(j * k) / static_cast<double>(N));
    }
    out[k] = acc;
  }
  return out;
}

// h * sum_j exp(-d_j^2 / (2 l^2)) cos(2 pi jk / N), periodic distance d_j.
double kernel_mode(double ell, Index N, double h, Index k) {
  double acc = 0.0;
  for (Index j = 0; j < N; ++j) {
    const double d = h * static_cast<double>(std::min(j, N - j));
    acc += std::exp(-d * d / (2.0 * ell * ell)) *
           std::cos(2.0 * std::numbers::pi * static_cast<double>(j * k) / static_cast<double>(N));
  }
  return h * acc;
}

ModeSpectrum flat_spectrum(Index N, double lambda, double eta) {
  ModeSpectrum s;
  s.h = 1.0;
  s.lambda = lambda;
  s.eta = eta;
  s.kernel_spectrum = Vector::Ones(N);
  s.omega.resize(N);
  for (Index k = 0; k < N; ++k) s.omega[k] = grid_frequency(k, N, 1.0);
  return s;
}

}  // namespace

TEST_CASE("response_value examples") {
  CHECK(response_value(1.0, 1.0, 0.0, 3.0) == doctest::Approx(0.5));
  CHECK(response_value(1.0, 0.0, 1.0, 1.0) == doctest::Approx(0.5));
  CHECK(response_value(2.0, 0.0, 0.0, 5.0) == 1.0);
}

TEST_CASE("grid frequencies are signed and evenly spaced") {
  CHECK(grid_frequency(0, 8, 1.0) == 0.0);
  CHECK(grid_frequency(1, 8, 1.0) == doctest::Approx(std::numbers::pi / 4));
  CHECK(grid_frequency(4, 8, 1.0) == doctest::Approx(std::numbers::pi));
  CHECK(grid_frequency(7, 8, 1.0) == doctest::Approx(-std::numbers::pi / 4));
  CHECK(grid_frequency(1, 8, 0.5) == doctest::Approx(std::numbers::pi / 2));
}

TEST_CASE("kernel spectrum matches the direct cosine sum") {
  for (double ell : {0.7, 1.5, 2.0}) {
    const Index N = 64;
    const Vector spec = exponential_kernel_spectrum(ell, N, 1.0);
    for (Index k = 0; k < N; ++k) {
      const double ref = kernel_mode(ell, N, 1.0, k);
      CHECK(std::abs(spec[k] - ref) <= 1e-10 * std::max(1.0, std::abs(ref)));
    }
  }
  CHECK_THROWS_AS(exponential_kernel_spectrum(-1.0, 16, 1.0), Error);
  // Wide kernels underflow at the top bins; that is reported, not clamped.
  CHECK_THROWS_AS(exponential_kernel_spectrum(3.0, 64, 1.0), Error);
}

TEST_CASE("response decreases strictly in |omega| with positive eta") {
  const auto spec = make_exponential_spectrum(1.5, 256, 1.0, 1e-3, 0.1);
  const Vector s = mode_responses(spec);
  for (Index k = 1; k <= 128; ++k) CHECK(s[k] < s[k - 1]);
  for (Index k = 1; k < 128; ++k) CHECK(s[k] == doctest::Approx(s[256 - k]).epsilon(1e-12));
  // Interpolated response at a bin centre equals the bin value.
  CHECK(mode_response(spec, spec.omega[10]) == doctest::Approx(s[10]).epsilon(1e-12));
  CHECK(mode_response(spec, -spec.omega[10]) == doctest::Approx(s[10]).epsilon(1e-12));
  CHECK_THROWS_AS(mode_response(spec, 4.0), Error);
}

TEST_CASE("DFT agrees with the naive transform and inverts") {
  CounterRng rng(41);
  for (Index N : {1, 2, 7, 16, 33}) {
    ComplexVector x(N);
    for (Index j = 0; j < N; ++j) x[j] = cd(rng.normal(), rng.normal());
    const ComplexVector X = dft(x);
    CHECK((X - naive_dft(x, -1.0)).norm() <= 1e-10 * std::max(1.0, X.norm()));
    CHECK((idft(X) - x).norm() <= 1e-12 * std::max(1.0, x.norm()));
    CHECK((idft(x) - naive_dft(x, 1.0) / static_cast<double>(N)).norm() <= 1e-10 * std::max(1.0, x.norm()));
    // Parseval with the unnormalised forward transform.
    CHECK(std::abs(X.squaredNorm() - static_cast<double>(N) * x.squaredNorm()) <= 1e-10 * X.squaredNorm());
  }
}

TEST_CASE("filter with no regularisation is the identity") {
  CounterRng rng(42);
  const auto spec = make_exponential_spectrum(1.5, 64);
  const Vector x = rng.normal_vector(64);
  CHECK((shrinkage_filter(x, spec) - x).norm() <= 1e-12 * x.norm());
}

TEST_CASE("constant signal scales by the zero-frequency factor") {
  const auto spec = make_exponential_spectrum(1.5, 64, 1.0, 0.3, 0.2);
  const Vector out = shrinkage_filter(Vector::Constant(64, 2.0), spec);
  const double f0 = 1.0 / (1.0 + 0.3 / spec.kernel_spectrum[0]);
  for (Index j = 0; j < 64; ++j) CHECK(out[j] == doctest::Approx(2.0 * f0).epsilon(1e-12));
}

TEST_CASE("sinusoids are shrunk by their own mode factor") {
  const Index N = 128;
  const auto spec = make_exponential_spectrum(1.5, N, 1.0, 1e-2, 0.05);
  for (Index k : {1, 5, 20}) {
    Vector x(N);
    for (Index j = 0; j < N; ++j) x[j] = std::cos(2.0 * std::numbers::pi * static_cast<double>(j * k) / N);
    const double factor = 1.0 / (1.0 + spec.lambda / kernel_mode(1.5, N, 1.0, k) +
                                 spec.eta * std::pow(2.0 * std::numbers::pi * k / N, 2));
    CHECK((shrinkage_filter(x, spec) - factor * x).norm() <= 1e-10 * x.norm());
  }
  // Two tones at once: each keeps its own ratio.
  Vector a(N), b(N);
  for (Index j = 0; j < N; ++j) {
    a[j] = std::sin(2.0 * std::numbers::pi * 3.0 * j / N);
    b[j] = std::sin(2.0 * std::numbers::pi * 17.0 * j / N);
  }
  const Vector out = shrinkage_filter(a + b, spec);
  const Vector f = shrinkage_factors(spec);
  CHECK((out - (f[3] * a + f[17] * b)).norm() <= 1e-10 * (a + b).norm());
  CHECK(f[3] > f[17]);
}

TEST_CASE("filter is linear and matches flat-spectrum algebra") {
  CounterRng rng(43);
  const auto spec = flat_spectrum(32, 1.0, 0.0);
  const Vector x = rng.normal_vector(32), y = rng.normal_vector(32);
  CHECK((shrinkage_filter(x, spec) - 0.5 * x).norm() <= 1e-12 * x.norm());
  const auto spec2 = make_exponential_spectrum(2.0, 32, 1.0, 0.1, 0.3);
  const Vector lhs = shrinkage_filter(2.0 * x - 3.0 * y, spec2);
  const Vector rhs = 2.0 * shrinkage_filter(x, spec2) - 3.0 * shrinkage_filter(y, spec2);
  CHECK((lhs - rhs).norm() <= 1e-10 * lhs.norm());
  CHECK_THROWS_AS(shrinkage_filter(Vector::Zero(31), spec2), Error);
}

TEST_CASE("effective length scale probe") {
  const auto probe = effective_lengthscale_probe(1.5, {0.0, 0.01, 0.02, 0.05, 0.1, 0.2});
  REQUIRE(probe.fits.size() == 6);
  CHECK(std::abs(probe.fits[0].ell_eff - 1.5) <= 1e-6);
  CHECK(probe.fits[0].residual <= 1e-6);
  for (std::size_t i = 1; i < probe.fits.size(); ++i) CHECK(probe.fits[i].ell_eff >= probe.fits[i - 1].ell_eff);
  CHECK(probe.r_squared >= 0.0);
  CHECK(probe.r_squared <= 1.0);
  CHECK(probe.slope > 0.0);

  const auto single = effective_lengthscale_probe(1.5, {0.0});
  CHECK(std::isnan(single.r_squared));

  try {
    effective_lengthscale_probe(1.5, {50.0});
    FAIL("expected FitFailed");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::FitFailed);
  }
  CHECK_THROWS_AS(effective_lengthscale_probe(1.5, {}), Error);
  CHECK_THROWS_AS(effective_lengthscale_probe(1.5, {-1.0}), Error);
}
