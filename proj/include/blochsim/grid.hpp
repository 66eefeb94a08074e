#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "blochsim/error.hpp"

namespace blochsim {

using complex = std::complex<double>;

/// Uniform grid x_i = x0 + i*dx, i = 0..points-1.
struct GridSpec {
  double x0 = 0.0;
  double dx = 0.0;
  std::size_t points = 0;

  static GridSpec symmetric(double half_width, std::size_t points) {
    if (points < 2 || !(half_width > 0.0))
      throw DomainError("grid needs >= 2 points and positive half width");
    return {-half_width, 2.0 * half_width / static_cast<double>(points - 1), points};
  }

  double x(std::size_t i) const { return x0 + static_cast<double>(i) * dx; }
  double x_end() const { return x(points - 1); }

  bool same_as(const GridSpec& o) const {
    const double scale = std::abs(dx) + std::abs(o.dx);
    return points == o.points && std::abs(x0 - o.x0) <= 1e-12 * (scale + std::abs(x0)) &&
           std::abs(dx - o.dx) <= 1e-12 * scale;
  }
};

/// Neumaier-compensated accumulator; the result does not depend on how
/// the terms were chunked or scheduled, only on their order.
class NeumaierSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v))
      comp_ += (sum_ - t) + v;
    else
      comp_ += (v - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

template <class T>
class CompensatedSum;

template <>
class CompensatedSum<double> : public NeumaierSum {};

template <>
class CompensatedSum<complex> {
 public:
  void add(complex v) {
    re_.add(v.real());
    im_.add(v.imag());
  }
  complex value() const { return {re_.value(), im_.value()}; }

 private:
  NeumaierSum re_, im_;
};

/// Trapezoidal rule for uniformly sampled data.
template <class T>
T trapezoid(std::span<const T> f, double dx) {
  if (f.size() < 2) return T{};
  CompensatedSum<T> s;
  s.add(0.5 * f.front());
  for (std::size_t i = 1; i + 1 < f.size(); ++i) s.add(f[i]);
  s.add(0.5 * f.back());
  return s.value() * dx;
}

/// Composite Simpson rule; requires an odd number of samples.
template <class T>
T simpson(std::span<const T> f, double h) {
  if (f.size() < 3 || f.size() % 2 == 0)
    throw DomainError("Simpson rule needs an odd number (>= 3) of samples");
  CompensatedSum<T> s;
  s.add(f.front());
  for (std::size_t i = 1; i + 1 < f.size(); ++i) s.add((i % 2 == 1 ? 4.0 : 2.0) * f[i]);
  s.add(f.back());
  return s.value() * (h / 3.0);
}

/// A real or complex function sampled on a uniform grid.
template <class T>
struct GridFunction {
  GridSpec grid;
  std::vector<T> values;

  GridFunction() = default;
  explicit GridFunction(GridSpec g) : grid(g), values(g.points) {}
  GridFunction(GridSpec g, std::vector<T> v) : grid(g), values(std::move(v)) {
    if (values.size() != grid.points) throw ShapeError("grid function size does not match grid");
  }

  std::size_t size() const { return values.size(); }
  double x(std::size_t i) const { return grid.x(i); }

  double norm_squared() const {
    std::vector<double> w(values.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::norm(values[i]);
    return trapezoid<double>(w, grid.dx);
  }
  double l2_norm() const { return std::sqrt(norm_squared()); }

  double lp_norm_pow(double p) const {
    std::vector<double> w(values.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::pow(std::abs(values[i]), p);
    return trapezoid<double>(w, grid.dx);
  }
};

using RealGridFunction = GridFunction<double>;
using ComplexGridFunction = GridFunction<complex>;

/// <a, b> = int conj(a) b dx by the trapezoidal rule.
template <class A, class B>
complex inner_product(const GridFunction<A>& a, const GridFunction<B>& b) {
  if (!a.grid.same_as(b.grid)) throw ShapeError("inner product on mismatched grids");
  std::vector<complex> w(a.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::conj(complex(a.values[i])) * complex(b.values[i]);
  return trapezoid<complex>(w, a.grid.dx);
}

}  // namespace blochsim
