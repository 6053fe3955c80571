#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

namespace reluctsim::quadrature {

namespace detail {

// Kronrod nodes on [0,1] (odd indices are the Gauss-Legendre nodes of G7).
inline constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};

inline constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};

inline constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double a;
  double b;
  double value;
  double error;
};

[[noreturn]] void throw_not_converged(double a, double b, double estimate, double error,
                                      int panels);
[[noreturn]] void throw_bad_bounds();

}  // namespace detail

template <typename F>
Result gk15(F&& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  std::array<double, 7> f_lo{}, f_hi{};
  double kronrod = fc * detail::kWgk[7];
  double gauss = fc * detail::kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = half * detail::kXgk[j];
    f_lo[j] = f(center - dx);
    f_hi[j] = f(center + dx);
    const double fsum = f_lo[j] + f_hi[j];
    kronrod += detail::kWgk[j] * fsum;
    if (j % 2 == 1) gauss += detail::kWg[j / 2] * fsum;
  }
  // QUADPACK-style error: |K - G| rescaled by the integrand's spread.
  const double mean = 0.5 * kronrod;
  double spread = detail::kWgk[7] * std::abs(fc - mean);
  for (int j = 0; j < 7; ++j) {
    spread += detail::kWgk[j] * (std::abs(f_lo[j] - mean) + std::abs(f_hi[j] - mean));
  }
  spread *= std::abs(half);
  double err = std::abs((kronrod - gauss) * half);
  if (spread != 0.0 && err != 0.0) err = spread * std::min(1.0, std::pow(200.0 * err / spread, 1.5));
  Result r;
  r.value = kronrod * half;
  r.error = err;
  r.evaluations = 15;
  return r;
}

template <typename F>
Result integrate_points(F&& f, const double* points, int count, const Tolerance& tol) {
  // Max-heap on panel error.
  std::vector<detail::Panel> heap;
  heap.reserve(32);
  auto by_error = [](const detail::Panel& x, const detail::Panel& y) {
    return x.error < y.error;
  };
  double total = 0.0;
  double total_error = 0.0;
  int evaluations = 0;
  for (int k = 0; k + 1 < count; ++k) {
    if (!(points[k + 1] > points[k])) continue;
    const Result r = gk15(f, points[k], points[k + 1]);
    heap.push_back({points[k], points[k + 1], r.value, r.error});
    total += r.value;
    total_error += r.error;
    evaluations += r.evaluations;
  }
  if (heap.empty()) return {};
  if (heap.size() == 1 && total_error <= std::max(tol.abs, tol.rel * std::abs(total))) {
    return {total, total_error, evaluations};
  }
  std::make_heap(heap.begin(), heap.end(), by_error);

  while (total_error > std::max(tol.abs, tol.rel * std::abs(total))) {
    if (static_cast<int>(heap.size()) >= tol.max_intervals) {
      detail::throw_not_converged(points[0], points[count - 1], total, total_error,
                                  static_cast<int>(heap.size()));
    }
    std::pop_heap(heap.begin(), heap.end(), by_error);
    const detail::Panel worst = heap.back();
    heap.pop_back();
    const double mid = 0.5 * (worst.a + worst.b);
    if (mid <= worst.a || mid >= worst.b) {
      detail::throw_not_converged(points[0], points[count - 1], total, total_error,
                                  static_cast<int>(heap.size()));
    }
    const Result left = gk15(f, worst.a, mid);
    const Result right = gk15(f, mid, worst.b);
    evaluations += left.evaluations + right.evaluations;
    total += left.value + right.value - worst.value;
    total_error += left.error + right.error - worst.error;
    heap.push_back({worst.a, mid, left.value, left.error});
    std::push_heap(heap.begin(), heap.end(), by_error);
    heap.push_back({mid, worst.b, right.value, right.error});
    std::push_heap(heap.begin(), heap.end(), by_error);
  }

  // Re-sum to shed the drift of the incremental updates.
  double sum = 0.0;
  double err = 0.0;
  for (const detail::Panel& p : heap) {
    sum += p.value;
    err += p.error;
  }
  return {sum, err, evaluations};
}

template <typename F>
Result integrate(F&& f, double a, double b, const Tolerance& tol) {
  if (a == b) return {};
  if (!std::isfinite(a) || !std::isfinite(b)) detail::throw_bad_bounds();
  const double sign = b > a ? 1.0 : -1.0;
  if (sign < 0) std::swap(a, b);
  const double points[2] = {a, b};
  Result r = integrate_points(f, points, 2, tol);
  r.value *= sign;
  return r;
}

}  // namespace reluctsim::quadrature
