#pragma once

#include <complex>
#include <vector>

#include "poisonlens/dataset.hpp"

namespace poisonlens {

using ComplexVector = Eigen::VectorXcd;

// Unnormalised forward transform X_k = sum_j x_j exp(-2 pi i jk / N) and its
// inverse with the 1/N factor. Direct O(N^2) evaluation; the twiddle angle
// uses (jk mod N) so large products do not lose phase accuracy.
ComplexVector dft(const ComplexVector& x);
ComplexVector idft(const ComplexVector& X);

// Angular frequency of bin k on a periodic grid of N points with spacing h,
// signed so that bins above N/2 are negative.
double grid_frequency(Index k, Index N, double h);

// Modes of a 1-D periodic grid with the sampled exponential-kernel spectrum.
struct ModeSpectrum {
  double h = 1.0;
  Vector omega;            // per bin, signed
  Vector kernel_spectrum;  // per bin, real and positive
  double lambda = 0.0;
  double eta = 0.0;        // gradient-regularisation weight on |omega|^2

  Index size() const { return omega.size(); }
};

// kappa_hat = h * DFT of exp(-d^2 / (2 l^2)) sampled at periodic distance d.
// Throws InvalidConfig when a mode is not strictly positive, which happens
// once l is too wide for double precision to resolve the highest bins.
Vector exponential_kernel_spectrum(double ell, Index N, double h);
ModeSpectrum make_exponential_spectrum(double ell, Index N = 256, double h = 1.0, double lambda = 0.0, double eta = 0.0);

// s = kappa_hat / (kappa_hat + lambda + eta |omega|^2)
double response_value(double kappa_hat, double lambda, double eta, double omega);

// Response at an arbitrary |omega| in [0, max grid frequency], with kappa_hat
// interpolated linearly between grid bins.
double mode_response(const ModeSpectrum& spectrum, double omega);

// Response on every bin.
Vector mode_responses(const ModeSpectrum& spectrum);

// 1 / (1 + lambda / kappa_hat + eta |omega|^2) on every bin.
Vector shrinkage_factors(const ModeSpectrum& spectrum);

// Transform, multiply each mode by its shrinkage factor, transform back.
Vector shrinkage_filter(const Vector& signal, const ModeSpectrum& spectrum);

struct LengthscaleFit {
  double kappa = 0.0;
  double ell_eff = 0.0;
  double residual = 0.0;  // RMS over bins
};

struct LengthscaleProbe {
  std::vector<LengthscaleFit> fits;
  double slope = 0.0;      // least-squares slope of ell_eff^2 against kappa
  double intercept = 0.0;
  double r_squared = 0.0;  // NaN with fewer than two distinct kappa values
};

struct ProbeOptions {
  Index N = 256;
  double h = 1.0;
  double lambda = 1e-3;
  double residual_ceiling = 0.1;
};

// For each kappa, fits the unregularised response kappa_hat_m / (kappa_hat_m + lambda)
// over the free length scale m to the regularised response of the kernel
// with length scale ell. Throws FitFailed when a fit residual exceeds the
// ceiling.
LengthscaleProbe effective_lengthscale_probe(double ell, const std::vector<double>& kappa_grid,
                                             const ProbeOptions& options = {});

}  // namespace poisonlens
