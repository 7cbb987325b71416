#include "rank1/step_function.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rank1/errors.hpp"

namespace rank1 {

StepFunction::StepFunction(std::size_t stage, std::vector<Scalar> breakpoints, std::vector<Complex> values)
    : stage_(stage), breakpoints_(std::move(breakpoints)), values_(std::move(values)) {
  if (stage_ < 1) throw ConfigError("step function stage must be >= 1");
  if (values_.empty() || breakpoints_.size() != values_.size() + 1) {
    throw ConfigError("step function needs m >= 1 values and m + 1 breakpoints");
  }
  if (!breakpoints_.front().is_zero()) throw ConfigError("step function breakpoints must start at 0");
  for (std::size_t i = 1; i < breakpoints_.size(); ++i) {
    if (!(breakpoints_[i - 1] < breakpoints_[i])) throw ConfigError("step function breakpoints must increase strictly");
  }
  for (const auto& v : values_) {
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) throw ConfigError("step function value is not finite");
  }
}

StepFunction StepFunction::constant(std::size_t stage, const Scalar& height, Complex value) {
  return StepFunction(stage, {Scalar(0), height}, {value});
}

StepFunction StepFunction::indicator(std::size_t stage, const Scalar& height, const Scalar& a, const Scalar& b,
                                     Complex value) {
  if (a.sign() < 0 || !(a < b) || height < b) throw ConfigError("indicator interval must satisfy 0 <= a < b <= h");
  std::vector<Scalar> bp{Scalar(0)};
  std::vector<Complex> vals;
  if (a.sign() > 0) {
    bp.push_back(a);
    vals.push_back(0.0);
  }
  bp.push_back(b);
  vals.push_back(value);
  if (b < height) {
    bp.push_back(height);
    vals.push_back(0.0);
  }
  return StepFunction(stage, std::move(bp), std::move(vals));
}

double StepFunction::sup_norm() const {
  double m = 0;
  for (const auto& v : values_) m = std::max(m, std::abs(v));
  return m;
}

double StepFunction::total_variation() const {
  double tv = std::abs(values_.front()) + std::abs(values_.back());
  for (std::size_t i = 1; i < values_.size(); ++i) tv += std::abs(values_[i] - values_[i - 1]);
  return tv;
}

Complex StepFunction::operator()(const Scalar& y) const {
  if (y.sign() < 0 || !(y < height())) return 0.0;
  auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), y);
  return values_[static_cast<std::size_t>(it - breakpoints_.begin()) - 1];
}

Complex StepFunction::integral() const {
  Complex s = 0.0;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    s += values_[i] * (breakpoints_[i + 1] - breakpoints_[i]).to_double();
  }
  return s;
}

double StepFunction::abs_integral() const {
  double s = 0.0;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    s += std::abs(values_[i]) * (breakpoints_[i + 1] - breakpoints_[i]).to_double();
  }
  return s;
}

double StepFunction::square_integral() const {
  double s = 0.0;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    s += std::norm(values_[i]) * (breakpoints_[i + 1] - breakpoints_[i]).to_double();
  }
  return s;
}

StepFunction StepFunction::merged() const {
  std::vector<Scalar> bp{breakpoints_.front()};
  std::vector<Complex> vals;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!vals.empty() && vals.back() == values_[i]) {
      bp.back() = breakpoints_[i + 1];
    } else {
      vals.push_back(values_[i]);
      bp.push_back(breakpoints_[i + 1]);
    }
  }
  return StepFunction(stage_, std::move(bp), std::move(vals));
}

StepFunction StepFunction::conj() const {
  std::vector<Complex> vals;
  vals.reserve(values_.size());
  for (const auto& v : values_) vals.push_back(std::conj(v));
  return StepFunction(stage_, breakpoints_, std::move(vals));
}

StepFunction StepFunction::abs() const {
  std::vector<Complex> vals;
  vals.reserve(values_.size());
  for (const auto& v : values_) vals.push_back(std::abs(v));
  return StepFunction(stage_, breakpoints_, std::move(vals));
}

StepFunction StepFunction::scaled(Complex c) const {
  std::vector<Complex> vals;
  vals.reserve(values_.size());
  for (const auto& v : values_) vals.push_back(c * v);
  return StepFunction(stage_, breakpoints_, std::move(vals));
}

StepFunction StepFunction::operator+(const StepFunction& o) const {
  if (o.stage_ != stage_ || !(o.height() == height())) throw ConfigError("adding step functions of different stages");
  std::vector<Scalar> bp{Scalar(0)};
  std::vector<Complex> vals;
  std::size_t i = 0, j = 0;
  while (i < values_.size() && j < o.values_.size()) {
    vals.push_back(values_[i] + o.values_[j]);
    const Scalar& a = breakpoints_[i + 1];
    const Scalar& b = o.breakpoints_[j + 1];
    if (a < b) {
      bp.push_back(a);
      ++i;
    } else if (b < a) {
      bp.push_back(b);
      ++j;
    } else {
      bp.push_back(a);
      ++i;
      ++j;
    }
  }
  return StepFunction(stage_, std::move(bp), std::move(vals)).merged();
}

StepFunction lift(const Schedule& schedule, const StepFunction& f, std::size_t N, std::size_t guard) {
  const std::size_t k = f.stage();
  if (N < k) throw RangeError("cannot lift from stage " + std::to_string(k) + " down to " + std::to_string(N));
  if (!(f.height() == schedule.height(k))) {
    throw ConfigError("step function height " + f.height().str() + " != h_" + std::to_string(k));
  }
  std::vector<Scalar> bp = f.breakpoints();
  std::vector<Complex> vals = f.values();
  for (std::size_t n = k; n < N; ++n) {
    auto st = schedule.stage(n);
    std::vector<Scalar> nbp{Scalar(0)};
    std::vector<Complex> nvals;
    auto push = [&](const Scalar& end, Complex v) {
      if (!nvals.empty() && nvals.back() == v) {
        nbp.back() = end;
      } else {
        nvals.push_back(v);
        nbp.push_back(end);
      }
    };
    if (st->bottom_spacer.sign() > 0) push(st->bottom_spacer, 0.0);
    for (std::size_t j = 0; j < st->r(); ++j) {
      const Scalar& o = st->offsets[j];
      for (std::size_t i = 0; i < vals.size(); ++i) push(o + bp[i + 1], vals[i]);
      if (st->spacers[j].sign() > 0) push(o + st->height + st->spacers[j], 0.0);
      if (nvals.size() > guard) {
        throw ResourceError("lift to stage " + std::to_string(N) + " exceeds " + std::to_string(guard) + " pieces");
      }
    }
    bp = std::move(nbp);
    vals = std::move(nvals);
  }
  return StepFunction(N, std::move(bp), std::move(vals));
}

StepFunction reflect(const StepFunction& f) {
  const auto& bp = f.breakpoints();
  const Scalar& h = f.height();
  std::vector<Scalar> nbp;
  nbp.reserve(bp.size());
  for (auto it = bp.rbegin(); it != bp.rend(); ++it) nbp.push_back(h - *it);
  std::vector<Complex> vals(f.values().rbegin(), f.values().rend());
  return StepFunction(f.stage(), std::move(nbp), std::move(vals));
}

Complex inner_product(const Schedule& schedule, const StepFunction& f, const StepFunction& g) {
  if (f.stage() != g.stage()) throw ConfigError("inner product of functions at different stages");
  const std::size_t k = f.stage();
  if (!(f.height() == schedule.height(k)) || !(g.height() == schedule.height(k))) {
    throw ConfigError("step function height does not match h_" + std::to_string(k));
  }
  StepFunction gc = g.conj();
  double w = schedule.width(k).to_double();
  return w * shifted_product_integral({&gc, &f}, {0.0, 0.0});
}

double norm2(const Schedule& schedule, const StepFunction& f) {
  return std::sqrt(schedule.width(f.stage()).to_double() * f.square_integral());
}

Complex shifted_product_integral(const std::vector<const StepFunction*>& fs, const std::vector<double>& shifts) {
  const std::size_t m = fs.size();
  if (m == 0 || shifts.size() != m) throw ConfigError("shifted_product_integral: size mismatch");
  thread_local std::vector<std::vector<double>> bps;
  bps.resize(m);
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < m; ++i) {
    const auto& b = fs[i]->breakpoints();
    auto& d = bps[i];
    d.resize(b.size());
    for (std::size_t p = 0; p < b.size(); ++p) d[p] = b[p].to_double() + shifts[i];
    lo = std::max(lo, d.front());
    hi = std::min(hi, d.back());
  }
  if (!(lo < hi)) return 0.0;
  thread_local std::vector<std::size_t> idx;
  idx.assign(m, 0);
  for (std::size_t i = 0; i < m; ++i) {
    while (idx[i] + 1 < bps[i].size() - 1 && bps[i][idx[i] + 1] <= lo) ++idx[i];
  }
  Complex total = 0.0;
  double x = lo;
  while (x < hi) {
    double next = hi;
    for (std::size_t i = 0; i < m; ++i) next = std::min(next, bps[i][idx[i] + 1]);
    Complex prod = fs[0]->values()[idx[0]];
    for (std::size_t i = 1; i < m; ++i) prod *= fs[i]->values()[idx[i]];
    total += prod * (next - x);
    x = next;
    for (std::size_t i = 0; i < m; ++i) {
      while (idx[i] + 1 < bps[i].size() - 1 && bps[i][idx[i] + 1] <= x) ++idx[i];
    }
  }
  return total;
}

std::uint64_t uniform_index(std::mt19937_64& rng, std::uint64_t n) {
  if (n == 0) throw ConfigError("uniform_index over an empty range");
  return rng() % n;
}

StepFunction random_step_function(std::mt19937_64& rng, std::size_t stage, const Scalar& height,
                                  const RandomStepOptions& options) {
  if (options.grid < 2 || options.max_pieces < 1) throw ConfigError("random step function needs grid >= 2, pieces >= 1");
  for (int attempt = 0; attempt < 1000; ++attempt) {
    std::size_t pieces = 1 + uniform_index(rng, std::min(options.max_pieces, options.grid));
    std::vector<std::size_t> cuts;
    while (cuts.size() + 1 < pieces) {
      std::size_t c = 1 + uniform_index(rng, options.grid - 1);
      if (std::find(cuts.begin(), cuts.end(), c) == cuts.end()) cuts.push_back(c);
    }
    std::sort(cuts.begin(), cuts.end());
    std::vector<Scalar> bp{Scalar(0)};
    Scalar cell = height / Scalar(static_cast<unsigned long>(options.grid));
    for (auto c : cuts) bp.push_back(cell * Scalar(static_cast<unsigned long>(c)));
    bp.push_back(height);
    std::vector<Complex> vals;
    for (std::size_t i = 0; i < pieces; ++i) {
      double re = (static_cast<double>(uniform_index(rng, 9)) - 4.0) / 4.0;
      double im = options.complex_values ? (static_cast<double>(uniform_index(rng, 9)) - 4.0) / 4.0 : 0.0;
      vals.push_back({re, im});
    }
    StepFunction f(stage, std::move(bp), std::move(vals));
    if (options.mean_zero) {
      Complex mean = f.integral() / height.to_double();
      std::vector<Complex> shifted;
      for (const auto& v : f.values()) shifted.push_back(v - mean);
      f = StepFunction(stage, f.breakpoints(), std::move(shifted));
    }
    if (f.sup_norm() > 1e-12) return f.merged();
  }
  throw DegenerateInputError("could not draw a nonzero random step function");
}

StepFunction random_level_set(std::mt19937_64& rng, std::size_t stage, const Scalar& height, std::size_t grid,
                              std::size_t min_cells) {
  if (grid < 1 || min_cells > grid) throw ConfigError("random level set needs 1 <= min_cells <= grid");
  std::vector<bool> on(grid);
  std::size_t count = 0;
  while (count < std::max<std::size_t>(min_cells, 1)) {
    count = 0;
    for (std::size_t i = 0; i < grid; ++i) {
      on[i] = uniform_index(rng, 2) == 1;
      count += on[i];
    }
  }
  Scalar cell = height / Scalar(static_cast<unsigned long>(grid));
  std::vector<Scalar> bp{Scalar(0)};
  std::vector<Complex> vals;
  for (std::size_t i = 0; i < grid; ++i) {
    bp.push_back(i + 1 == grid ? height : cell * Scalar(static_cast<unsigned long>(i + 1)));
    vals.push_back(on[i] ? 1.0 : 0.0);
  }
  return StepFunction(stage, std::move(bp), std::move(vals)).merged();
}

}  // namespace rank1
