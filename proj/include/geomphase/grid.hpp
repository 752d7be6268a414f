#pragma once

#include <functional>

#include "geomphase/common.hpp"

namespace geomphase {

inline constexpr int kDefaultGridPoints = 4096;

/// Uniform 1-d sampling grid.
struct Grid {
    double x0 = 0.0;
    double dx = 0.0;
    int n = 0;

    double x(int i) const { return x0 + dx * i; }
    double x_max() const { return x(n - 1); }

    static Grid over(double a, double b, int points);
    bool same_as(const Grid& other, double tol = 1e-12) const;
};

/// Complex function sampled on a uniform grid.
struct GridFunction {
    Grid grid;
    Vector values;

    static GridFunction sampled(const Grid& g, const std::function<Complex(double)>& f);
};

/// mu(x) = theta(x) - theta(x - L), theta(0) = 1. Support [0, L].
struct MeasureWeight {
    double wall = 1.0;

    double operator()(double x) const { return (x >= 0.0 && x < wall) ? 1.0 : 0.0; }
};

/// integral of conj(f) g mu dx by composite trapezoid over [0, wall].
/// The cells cut by x = 0 and x = wall contribute their partial trapezoid so
/// the result varies smoothly with the wall position.
Complex measure_inner_product(const GridFunction& f, const GridFunction& g,
                              const MeasureWeight& mu);

double measure_norm(const GridFunction& f, const MeasureWeight& mu);

/// Linear interpolation of |f| at position x (f taken as the smooth family
/// values, not masked by any measure).
Complex interpolate(const GridFunction& f, double x);

}  // namespace geomphase
