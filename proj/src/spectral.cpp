#include "rank1/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <numbers>
#include <thread>

#include "rank1/errors.hpp"

namespace rank1 {

namespace {

bool same_grid(const SpectralEstimate& a, const SpectralEstimate& b) {
  return a.size() == b.size() && a.lambda_min == b.lambda_min && a.step == b.step;
}

// Bin masses of an estimate normalized to total 1.
std::vector<double> normalized_bins(const SpectralEstimate& e) {
  // Negative bins are inversion ringing, not mass.
  double total = 0.0;
  for (double d : e.density) total += std::max(d, 0.0);
  if (!(total > 0.0)) throw DegenerateInputError("spectral estimate has zero mass");
  std::vector<double> p(e.size());
  for (std::size_t i = 0; i < e.size(); ++i) p[i] = std::max(e.density[i], 0.0) / total;
  return p;
}

}  // namespace

AutocorrCurve AutocorrCurve::from_function(const std::function<Complex(double)>& c, double dt, double t_max) {
  if (!(dt > 0) || !(t_max >= 0)) throw ConfigError("autocorrelation grid needs dt > 0 and T_max >= 0");
  AutocorrCurve curve;
  curve.dt = dt;
  curve.t_max = t_max;
  const long M = static_cast<long>(std::floor(t_max / dt + 1e-9));
  for (long i = -M; i <= M; ++i) {
    double t = static_cast<double>(i) * dt;
    curve.times.push_back(t);
    curve.values.push_back(c(t));
    curve.bounds.push_back(0.0);
  }
  return curve;
}

AutocorrCurve autocorr_curve(const Schedule& schedule, const StepFunction& f, const Scalar& dt, const Scalar& t_max,
                             const CorrelateOptions& options, std::size_t threads) {
  if (dt.sign() <= 0 || t_max.sign() < 0) throw ConfigError("autocorrelation grid needs dt > 0 and T_max >= 0");
  const mpz_class Mz = (t_max / dt).floor();
  if (!Mz.fits_slong_p() || Mz > 1000000) throw ResourceError("autocorrelation grid too large");
  const std::size_t M = Mz.get_ui();
  std::vector<CorrelationResult> pos(M + 1);
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, M + 1);
  // Items are independent; each worker takes a strided slice and results
  // are stored by index, so the output does not depend on scheduling.
  std::vector<std::future<void>> jobs;
  for (std::size_t w = 0; w < threads; ++w) {
    jobs.push_back(std::async(std::launch::async, [&, w] {
      for (std::size_t i = w; i <= M; i += threads) {
        pos[i] = correlate(schedule, f, f, dt * Scalar(static_cast<unsigned long>(i)), options);
      }
    }));
  }
  for (auto& j : jobs) j.get();

  AutocorrCurve curve;
  curve.dt = dt.to_double();
  curve.t_max = t_max.to_double();
  for (std::size_t k = 0; k < 2 * M + 1; ++k) {
    long i = static_cast<long>(k) - static_cast<long>(M);
    const auto& c = pos[static_cast<std::size_t>(std::labs(i))];
    curve.times.push_back(static_cast<double>(i) * curve.dt);
    curve.values.push_back(i < 0 ? std::conj(c.value) : c.value);
    curve.bounds.push_back(c.error_bound);
  }
  curve.values[M] = curve.values[M].real();
  return curve;
}

double SpectralEstimate::mass_in(double a, double b) const {
  double m = 0.0;
  for (std::size_t i = 0; i < size(); ++i) {
    double l = lambda(i);
    if (l >= a && l <= b) m += density[i] * step;
  }
  return m;
}

double taper_weight(double t, double t_max, double width) {
  double edge = t_max - width;
  double a = std::fabs(t);
  if (a <= edge) return 1.0;
  double sigma = width / 3.0;
  double x = (a - edge) / sigma;
  return std::exp(-0.5 * x * x);
}

SpectralEstimate bochner_density(const AutocorrCurve& curve, double Lambda, std::size_t grid_size, double taper_width) {
  if (curve.times.empty()) throw ConfigError("empty autocorrelation curve");
  if (!(taper_width > 0)) throw ConfigError("taper width must be > 0");
  if (taper_width > curve.t_max) throw ConfigError("taper width exceeds T_max");
  if (!(Lambda > 0) || grid_size < 2) throw ConfigError("frequency grid needs Lambda > 0 and >= 2 points");
  const Complex c0 = curve.values[curve.half()];
  if (c0.real() < 0) throw DegenerateInputError("autocorrelation at 0 is negative");

  SpectralEstimate est;
  est.lambda_min = -Lambda;
  est.step = 2.0 * Lambda / static_cast<double>(grid_size - 1);
  est.taper_width = taper_width;
  est.density.assign(grid_size, 0.0);

  std::vector<Complex> weighted(curve.times.size());
  for (std::size_t i = 0; i < curve.times.size(); ++i) {
    weighted[i] = taper_weight(curve.times[i], curve.t_max, taper_width) * curve.values[i];
  }
  const double two_pi = 2.0 * std::numbers::pi;
  double negative = 0.0;
  for (std::size_t p = 0; p < grid_size; ++p) {
    const double lam = est.lambda(p);
    // Hermitian pairs (t, -t) combine into 2 Re(w c e^{-2 pi i lambda t}).
    double acc = weighted[curve.half()].real();
    for (std::size_t i = curve.half() + 1; i < curve.times.size(); ++i) {
      const double phase = -two_pi * lam * curve.times[i];
      const Complex e(std::cos(phase), std::sin(phase));
      const std::size_t mirror = 2 * curve.half() - i;
      acc += (weighted[i] * e).real() + (weighted[mirror] * std::conj(e)).real();
    }
    double d = curve.dt * acc;
    if (d < 0) {
      negative -= d * est.step;
      d = 0.0;
    }
    est.density[p] = d;
  }
  est.clipped = negative;
  double total = 0.0;
  for (double d : est.density) total += d * est.step;
  if (total > 0) {
    const double scale = c0.real() / total;
    for (double& d : est.density) d *= scale;
  }
  est.mass = c0.real();
  return est;
}

SpectralEstimate dilate(const SpectralEstimate& est, double t) {
  if (!(t > 0)) throw ConfigError("dilation factor must be > 0");
  SpectralEstimate out = est;
  out.lambda_min = est.lambda_min / t;
  out.step = est.step / t;
  for (double& d : out.density) d *= t;
  return out;
}

SpectralEstimate regrid(const SpectralEstimate& est, double lambda_min, double step, std::size_t size) {
  if (!(step > 0) || size < 1) throw ConfigError("regrid needs step > 0 and size >= 1");
  SpectralEstimate out = est;
  out.lambda_min = lambda_min;
  out.step = step;
  out.density.assign(size, 0.0);
  const double last = est.lambda(est.size() - 1);
  for (std::size_t i = 0; i < size; ++i) {
    double l = out.lambda(i);
    if (l < est.lambda_min || l > last) continue;
    double x = (l - est.lambda_min) / est.step;
    std::size_t j = std::min(static_cast<std::size_t>(std::floor(x)), est.size() - 1);
    double frac = x - static_cast<double>(j);
    double a = est.density[j];
    double b = j + 1 < est.size() ? est.density[j + 1] : 0.0;
    out.density[i] = a + (b - a) * frac;
  }
  return out;
}

double affinity(const SpectralEstimate& a, const SpectralEstimate& b) {
  if (a.size() == 0 || b.size() == 0) throw DegenerateInputError("empty spectral estimate");
  std::vector<double> p, q;
  if (same_grid(a, b)) {
    p = normalized_bins(a);
    q = normalized_bins(b);
  } else {
    const double lo = std::min(a.lambda_min, b.lambda_min);
    const double hi = std::max(a.lambda(a.size() - 1), b.lambda(b.size() - 1));
    const double step = std::min(a.step, b.step);
    const std::size_t n = static_cast<std::size_t>(std::ceil((hi - lo) / step)) + 1;
    if (n > 50000000) throw ResourceError("common grid for affinity is too fine");
    p = normalized_bins(regrid(a, lo, step, n));
    q = normalized_bins(regrid(b, lo, step, n));
  }
  // Dividing by the summed bins makes affinity(a, a) exactly 1, since
  // sqrt(x * x) == x in IEEE arithmetic.
  double s = 0.0, sp = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    s += std::sqrt(p[i] * q[i]);
    sp += p[i];
    sq += q[i];
  }
  return std::min(1.0, s / std::sqrt(sp * sq));
}

SpectralEstimate aggregate(const std::vector<SpectralEstimate>& parts) {
  if (parts.empty()) throw ConfigError("aggregate needs at least one estimate");
  SpectralEstimate out = parts[0];
  std::fill(out.density.begin(), out.density.end(), 0.0);
  out.mass = 0.0;
  out.clipped = 0.0;
  double w = 1.0;
  for (const auto& part : parts) {
    w *= 0.5;
    const SpectralEstimate on = same_grid(part, out) ? part : regrid(part, out.lambda_min, out.step, out.size());
    for (std::size_t i = 0; i < out.size(); ++i) out.density[i] += w * on.density[i];
    out.mass += w * part.mass;
    out.clipped += w * part.clipped;
  }
  return out;
}

std::string to_csv(const SpectralEstimate& est) {
  std::string out = "# lambda: frequency; density: estimated spectral density (mass " + std::to_string(est.mass) + ")\n";
  out += "lambda,density\n";
  char buf[96];
  for (std::size_t i = 0; i < est.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", est.lambda(i), est.density[i]);
    out += buf;
  }
  return out;
}

}  // namespace rank1
