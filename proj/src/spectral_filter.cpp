#include "poisonlens/spectral_filter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/tools/minima.hpp>

#include "poisonlens/error.hpp"

namespace poisonlens {

namespace {

ComplexVector transform(const ComplexVector& x, double sign) {
  const Index N = x.size();
  std::vector<std::complex<double>> twiddle(static_cast<std::size_t>(N));
  for (Index m = 0; m < N; ++m) {
    const double angle = sign * 2.0 * std::numbers::pi * static_cast<double>(m) / static_cast<double>(N);
    twiddle[static_cast<std::size_t>(m)] = {std::cos(angle), std::sin(angle)};
  }
  ComplexVector out(N);
  for (Index k = 0; k < N; ++k) {
    std::complex<double> acc = 0.0;
    for (Index j = 0; j < N; ++j) acc += x[j] * twiddle[static_cast<std::size_t>((j * k) % N)];
    out[k] = acc;
  }
  return out;
}

Vector sampled_kernel_spectrum(double ell, Index N, double h) {
  ComplexVector samples(N);
  const double ell2 = ell * ell;
  for (Index j = 0; j < N; ++j) {
    const double d = static_cast<double>(std::min(j, N - j)) * h;
    samples[j] = std::exp(-d * d / (2.0 * ell2));
  }
  return h * dft(samples).real();
}

}  // namespace

ComplexVector dft(const ComplexVector& x) { return transform(x, -1.0); }

ComplexVector idft(const ComplexVector& X) { return transform(X, 1.0) / static_cast<double>(X.size()); }

double grid_frequency(Index k, Index N, double h) {
  const Index signed_k = k <= N / 2 ? k : k - N;
  return 2.0 * std::numbers::pi * static_cast<double>(signed_k) / (static_cast<double>(N) * h);
}

Vector exponential_kernel_spectrum(double ell, Index N, double h) {
  if (!(ell > 0.0) || N < 2 || !(h > 0.0)) raise(ErrorCode::InvalidConfig, "kernel spectrum: need ell > 0, N >= 2, h > 0");
  Vector spec = sampled_kernel_spectrum(ell, N, h);
  if (spec.minCoeff() <= 0.0) {
    raise(ErrorCode::InvalidConfig, "kernel spectrum has a non-positive mode; length scale too wide for the grid");
  }
  return spec;
}

ModeSpectrum make_exponential_spectrum(double ell, Index N, double h, double lambda, double eta) {
  if (lambda < 0.0 || eta < 0.0) raise(ErrorCode::InvalidConfig, "spectrum: lambda and eta must be >= 0");
  ModeSpectrum s;
  s.h = h;
  s.lambda = lambda;
  s.eta = eta;
  s.kernel_spectrum = exponential_kernel_spectrum(ell, N, h);
  s.omega.resize(N);
  for (Index k = 0; k < N; ++k) s.omega[k] = grid_frequency(k, N, h);
  return s;
}

double response_value(double kappa_hat, double lambda, double eta, double omega) {
  return kappa_hat / (kappa_hat + lambda + eta * omega * omega);
}

double mode_response(const ModeSpectrum& spectrum, double omega) {
  const Index N = spectrum.size();
  const double w = std::abs(omega);
  const double step = 2.0 * std::numbers::pi / (static_cast<double>(N) * spectrum.h);
  const double pos = w / step;
  const auto lo = static_cast<Index>(std::floor(pos));
  if (lo < 0 || lo > N / 2) raise(ErrorCode::GridMismatch, "mode_response: omega beyond the grid's Nyquist frequency");
  double kh = spectrum.kernel_spectrum[lo];
  if (lo < N / 2) {
    const double frac = pos - static_cast<double>(lo);
    kh = (1.0 - frac) * spectrum.kernel_spectrum[lo] + frac * spectrum.kernel_spectrum[lo + 1];
  }
  return response_value(kh, spectrum.lambda, spectrum.eta, w);
}

Vector mode_responses(const ModeSpectrum& spectrum) {
  Vector s(spectrum.size());
  for (Index k = 0; k < s.size(); ++k) {
    s[k] = response_value(spectrum.kernel_spectrum[k], spectrum.lambda, spectrum.eta, spectrum.omega[k]);
  }
  return s;
}

Vector shrinkage_factors(const ModeSpectrum& spectrum) {
  Vector f(spectrum.size());
  for (Index k = 0; k < f.size(); ++k) {
    const double w = spectrum.omega[k];
    f[k] = 1.0 / (1.0 + spectrum.lambda / spectrum.kernel_spectrum[k] + spectrum.eta * w * w);
  }
  return f;
}

Vector shrinkage_filter(const Vector& signal, const ModeSpectrum& spectrum) {
  if (signal.size() != spectrum.size()) {
    raise(ErrorCode::GridMismatch, "shrinkage_filter: signal has " + std::to_string(signal.size()) +
                                       " points, spectrum has " + std::to_string(spectrum.size()));
  }
  ComplexVector Y = dft(signal.cast<std::complex<double>>());
  const Vector f = shrinkage_factors(spectrum);
  for (Index k = 0; k < Y.size(); ++k) Y[k] *= f[k];
  return idft(Y).real();
}

LengthscaleProbe effective_lengthscale_probe(double ell, const std::vector<double>& kappa_grid,
                                             const ProbeOptions& options) {
  if (kappa_grid.empty()) raise(ErrorCode::InvalidConfig, "lengthscale probe: empty kappa grid");
  if (!(options.lambda > 0.0)) raise(ErrorCode::InvalidConfig, "lengthscale probe: lambda must be positive");
  const ModeSpectrum base = make_exponential_spectrum(ell, options.N, options.h);
  const Index N = base.size();

  // Unregularised response for a trial length scale; modes that round to a
  // non-positive spectrum respond with zero.
  const auto plain_response = [&](double m) {
    const Vector kh = sampled_kernel_spectrum(m, N, options.h);
    Vector s(N);
    for (Index k = 0; k < N; ++k) {
      const double v = std::max(kh[k], 0.0);
      s[k] = v / (v + options.lambda);
    }
    return s;
  };

  LengthscaleProbe probe;
  for (const double kappa : kappa_grid) {
    if (kappa < 0.0) raise(ErrorCode::InvalidConfig, "lengthscale probe: negative kappa");
    Vector target(N);
    for (Index k = 0; k < N; ++k) target[k] = response_value(base.kernel_spectrum[k], options.lambda, kappa, base.omega[k]);
    const auto objective = [&](double m) { return (plain_response(m) - target).squaredNorm(); };
    const auto [m_best, err] =
        boost::math::tools::brent_find_minima(objective, 0.25 * ell, 8.0 * ell + 4.0, std::numeric_limits<double>::digits);
    LengthscaleFit fit{kappa, m_best, std::sqrt(err / static_cast<double>(N))};
    if (fit.residual > options.residual_ceiling) {
      raise(ErrorCode::FitFailed, "lengthscale probe: residual " + std::to_string(fit.residual) + " at kappa " +
                                      std::to_string(kappa));
    }
    probe.fits.push_back(fit);
  }

  // ell_eff^2 = intercept + slope * kappa by ordinary least squares.
  const auto n = static_cast<double>(probe.fits.size());
  double mk = 0.0, ml = 0.0;
  for (const auto& f : probe.fits) {
    mk += f.kappa / n;
    ml += f.ell_eff * f.ell_eff / n;
  }
  double skk = 0.0, skl = 0.0, sll = 0.0;
  for (const auto& f : probe.fits) {
    const double dk = f.kappa - mk;
    const double dl = f.ell_eff * f.ell_eff - ml;
    skk += dk * dk;
    skl += dk * dl;
    sll += dl * dl;
  }
  if (skk > 0.0) {
    probe.slope = skl / skk;
    probe.intercept = ml - probe.slope * mk;
    probe.r_squared = sll > 0.0 ? (skl * skl) / (skk * sll) : 1.0;
  } else {
    probe.intercept = ml;
    probe.r_squared = std::numeric_limits<double>::quiet_NaN();
  }
  return probe;
}

}  // namespace poisonlens
