#include "geomphase/grid.hpp"

#include <cmath>

namespace geomphase {

Grid Grid::over(double a, double b, int points) {
    if (points < 2 || !(b > a))
        throw PreconditionError("Grid::over needs b > a and at least 2 points");
    return Grid{a, (b - a) / (points - 1), points};
}

bool Grid::same_as(const Grid& other, double tol) const {
    double scale = std::max({std::abs(dx), std::abs(other.dx), 1e-300});
    return n == other.n && std::abs(x0 - other.x0) <= tol * std::max(1.0, std::abs(x0)) &&
           std::abs(dx - other.dx) <= tol * scale;
}

GridFunction GridFunction::sampled(const Grid& g, const std::function<Complex(double)>& f) {
    GridFunction out;
    out.grid = g;
    out.values.resize(g.n);
    for (int i = 0; i < g.n; ++i) out.values[i] = f(g.x(i));
    return out;
}

// Trapezoid of the piecewise-linear interpolant of y over [a, b] where
// [a, b] is contained in the grid span.
static Complex trapezoid_window(const Grid& g, const Vector& y, double a, double b) {
    auto value_at = [&](double x) -> Complex {
        double s = (x - g.x0) / g.dx;
        int k = static_cast<int>(std::floor(s));
        if (k < 0) k = 0;
        if (k > g.n - 2) k = g.n - 2;
        double f = s - k;
        return y[k] * (1.0 - f) + y[k + 1] * f;
    };

    int ka = static_cast<int>(std::ceil((a - g.x0) / g.dx - 1e-12));
    int kb = static_cast<int>(std::floor((b - g.x0) / g.dx + 1e-12));
    ka = std::max(ka, 0);
    kb = std::min(kb, g.n - 1);

    if (ka > kb) {
        // window inside one cell
        return 0.5 * (value_at(a) + value_at(b)) * (b - a);
    }

    Complex acc = 0.0;
    double xa = g.x(ka);
    if (a < xa) acc += 0.5 * (value_at(a) + y[ka]) * (xa - a);
    for (int k = ka; k < kb; ++k) acc += 0.5 * (y[k] + y[k + 1]) * g.dx;
    double xb = g.x(kb);
    if (b > xb) acc += 0.5 * (y[kb] + value_at(b)) * (b - xb);
    return acc;
}

Complex measure_inner_product(const GridFunction& f, const GridFunction& g,
                              const MeasureWeight& mu) {
    if (!f.grid.same_as(g.grid))
        throw PreconditionError("measure_inner_product: functions sampled on different grids");
    if (!(mu.wall > 0.0))
        throw PreconditionError("measure_inner_product: wall must be positive");
    if (f.grid.x0 > 0.0 || f.grid.x_max() < mu.wall - 1e-12 * mu.wall)
        throw PreconditionError("measure_inner_product: grid does not cover [0, L]");

    Vector y(f.grid.n);
    for (int i = 0; i < f.grid.n; ++i) y[i] = std::conj(f.values[i]) * g.values[i];
    return trapezoid_window(f.grid, y, 0.0, std::min(mu.wall, f.grid.x_max()));
}

double measure_norm(const GridFunction& f, const MeasureWeight& mu) {
    return std::sqrt(std::abs(measure_inner_product(f, f, mu).real()));
}

Complex interpolate(const GridFunction& f, double x) {
    const Grid& g = f.grid;
    double s = (x - g.x0) / g.dx;
    int k = static_cast<int>(std::floor(s));
    if (k < 0) k = 0;
    if (k > g.n - 2) k = g.n - 2;
    double frac = s - k;
    return f.values[k] * (1.0 - frac) + f.values[k + 1] * frac;
}

}  // namespace geomphase
