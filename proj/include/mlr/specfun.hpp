#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <queue>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

// Modified Bessel functions of the second kind (orders 0 and 1) and an
// adaptive Gauss-Kronrod integrator for the kernel integrals used by the
// population-level EM updates.

namespace mlr::specfun {

// K0(x) and K1(x) for x > 0.  Relative accuracy is a few ulp across
// [1e-308, 700]; results underflow to 0 once exp(-x) is not representable.
// Throws std::domain_error for x <= 0, NaN, or infinity.
double bessel_k0(double x);
double bessel_k1(double x);

// Exponentially scaled variants e^x K0(x), e^x K1(x).  These stay
// representable for large x and let callers combine the kernel with other
// exponential factors without intermediate under/overflow.
double bessel_k0e(double x);
double bessel_k1e(double x);

// Diagnostic hook: multiplies every bessel_k0/bessel_k0e result by the given
// factor.  Exists so the validation suite can inject a deliberate kernel
// perturbation and confirm that the Monte Carlo cross-checks catch it.
// Always 1.0 in normal operation.
void set_bessel_k0_scale(double factor);
double bessel_k0_scale();

struct QuadratureSpec {
  double abs_tol = 1e-12;
  double rel_tol = 1e-11;
  int max_subdivisions = 4000;
  // Semi-infinite tails are cut once the decay exponent of the integrand
  // exceeds this value (the caller matches tail_scale to the decay rate).
  double truncation_exponent = 40.0;
};

struct IntegralResult {
  double value = 0.0;
  double error_bound = 0.0;
  int subdivisions = 0;
};

namespace detail {

// 15-point Kronrod extension of 7-point Gauss (positive abscissae).
inline constexpr double gk_nodes[8] = {
    0.9914553711208126, 0.9491079123427585, 0.8648644233597691,
    0.7415311855993944, 0.5860872354676911, 0.4058451513773972,
    0.2077849550078985, 0.0,
};
inline constexpr double gk_weights[8] = {
    0.02293532201052922, 0.06309209262997855, 0.1047900103222502,
    0.1406532597155259,  0.1690047266392679,  0.1903505780647854,
    0.2044329400752989,  0.2094821410847278,
};
inline constexpr double gauss_weights[4] = {
    0.1294849661688697, 0.2797053914892767, 0.3818300505051189,
    0.4179591836734694,
};

// A panel lives either directly on the x axis or on the t in (0,1) parameter
// of a tail map x = anchor +- scale * t / (1 - t).
enum class Map { identity, right_tail, left_tail };

struct Panel {
  double a, b;
  double value, error;
  Map map;
  double anchor, scale;
  bool stuck;  // too narrow to split further
  bool operator<(const Panel& o) const { return error < o.error; }
};

template <class F>
void gk15(const F& f, Panel& p) {
  const double half = 0.5 * (p.b - p.a);
  const double mid = 0.5 * (p.a + p.b);
  auto eval = [&](double t) {
    double x = t, w = 1.0;
    if (p.map == Map::right_tail) {
      const double r = 1.0 - t;
      x = p.anchor + p.scale * t / r;
      w = p.scale / (r * r);
    } else if (p.map == Map::left_tail) {
      const double r = 1.0 - t;
      x = p.anchor - p.scale * t / r;
      w = p.scale / (r * r);
    }
    const double v = f(x) * w;
    if (!std::isfinite(v))
      throw std::runtime_error("integrate: integrand not finite at x = " +
                               std::to_string(x));
    return v;
  };
  double resk = 0.0, resg = 0.0, resabs = 0.0;
  double fv[15];
  for (int i = 0; i < 8; ++i) {
    const double dx = half * gk_nodes[i];
    const double f1 = eval(mid - dx);
    const double f2 = (i == 7) ? f1 : eval(mid + dx);
    fv[i] = f1;
    fv[14 - i] = f2;
    const double s = (i == 7) ? f1 : f1 + f2;
    resk += gk_weights[i] * s;
    if (i % 2 == 1) resg += gauss_weights[i / 2] * s;
    resabs += gk_weights[i] * ((i == 7) ? std::fabs(f1)
                                        : std::fabs(f1) + std::fabs(f2));
  }
  const double reskh = 0.5 * resk;
  double resasc = 0.0;
  for (int i = 0; i < 8; ++i) {
    const double c = gk_weights[i];
    resasc += c * ((i == 7) ? std::fabs(fv[7] - reskh)
                            : std::fabs(fv[i] - reskh) +
                                  std::fabs(fv[14 - i] - reskh));
  }
  resasc *= half;
  double err = std::fabs(resk - resg) * half;
  if (resasc != 0.0 && err != 0.0)
    err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
  constexpr double eps = std::numeric_limits<double>::epsilon();
  err = std::max(err, 50.0 * eps * resabs * half);
  p.value = resk * half;
  p.error = err;
  p.stuck = (p.b - p.a) <=
            128.0 * eps * std::max({1.0, std::fabs(p.a), std::fabs(p.b)});
}

}  // namespace detail

// Adaptive Gauss-Kronrod integration of f over [lower, upper]; either bound
// may be infinite.  Known interior singular or kink points go in `splits`
// (points outside the open interval are ignored).  Semi-infinite tails use
// the substitution x = anchor +- tail_scale * t/(1-t) and are truncated at
// the spec's decay exponent, so tail_scale should match the reciprocal decay
// rate of the integrand.  Throws std::runtime_error when the requested
// tolerance cannot be met within max_subdivisions.
template <class F>
IntegralResult integrate(F&& f, double lower, double upper,
                         const QuadratureSpec& spec = {},
                         std::span<const double> splits = {},
                         double tail_scale = 1.0) {
  using detail::Map;
  using detail::Panel;
  if (std::isnan(lower) || std::isnan(upper) || lower >= upper)
    throw std::domain_error("integrate: bad interval");
  if (!(tail_scale > 0.0))
    throw std::domain_error("integrate: tail_scale must be positive");

  const bool low_inf = std::isinf(lower);
  const bool up_inf = std::isinf(upper);
  std::vector<double> anchors;
  for (double s : splits)
    if (s > lower && s < upper && std::isfinite(s)) anchors.push_back(s);
  if (!low_inf) anchors.push_back(lower);
  if (!up_inf) anchors.push_back(upper);
  if (anchors.empty()) anchors.push_back(0.0);
  std::sort(anchors.begin(), anchors.end());
  anchors.erase(std::unique(anchors.begin(), anchors.end()), anchors.end());

  // Tail panels stop where the decay exponent tail_scale*t/(1-t)/tail_scale
  // reaches truncation_exponent: t_max = T / (1 + T).
  const double t_max =
      spec.truncation_exponent / (1.0 + spec.truncation_exponent);

  std::priority_queue<Panel> queue;
  double total = 0.0, toterr = 0.0;
  int used = 0;
  auto push_panel = [&](Panel p) {
    detail::gk15(f, p);
    total += p.value;
    toterr += p.error;
    queue.push(p);
  };
  for (std::size_t i = 0; i + 1 < anchors.size(); ++i)
    push_panel({anchors[i], anchors[i + 1], 0, 0, Map::identity, 0, 0, false});
  if (low_inf)
    push_panel({0.0, t_max, 0, 0, Map::left_tail, anchors.front(), tail_scale,
                false});
  if (up_inf)
    push_panel({0.0, t_max, 0, 0, Map::right_tail, anchors.back(), tail_scale,
                false});

  while (true) {
    const double tol = std::max(spec.abs_tol, spec.rel_tol * std::fabs(total));
    if (toterr <= tol) break;
    if (used >= spec.max_subdivisions || queue.empty())
      throw std::runtime_error(
          "integrate: tolerance not reached (value " + std::to_string(total) +
          ", error bound " + std::to_string(toterr) + ", " +
          std::to_string(used) + " subdivisions)");
    Panel worst = queue.top();
    queue.pop();
    if (worst.stuck) {
      // Cannot split further: retire the panel (its contribution stays in
      // the running totals) and refine whatever is left.
      continue;
    }
    total -= worst.value;
    toterr -= worst.error;
    const double mid = 0.5 * (worst.a + worst.b);
    Panel left = worst, right = worst;
    left.b = mid;
    right.a = mid;
    push_panel(left);
    push_panel(right);
    ++used;
  }
  return {total, toterr, used};
}

}  // namespace mlr::specfun
