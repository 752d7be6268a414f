#include "geomphase/berry.hpp"

#include <cmath>

namespace geomphase::berry {

Matrix connection_zeroth(const models::BasisFamily& family, const ParameterPoint& point,
                         const std::string& direction, double step, double* step_defect) {
    const int N = family.size;
    if (family.parameter_independent) {
        if (step_defect) *step_defect = 0.0;
        return Matrix::Zero(N, N);
    }
    if (!(step > 0.0)) throw PreconditionError("connection_zeroth: step must be positive");

    auto fd = [&](double s) {
        ParameterPoint plus = point;
        ParameterPoint minus = point;
        plus.set(direction, point.get(direction) + s);
        minus.set(direction, point.get(direction) - s);
        Matrix out(N, N);
        for (int m = 1; m <= N; ++m)
            for (int n = 1; n <= N; ++n) {
                Complex d = family.overlap(m, point, n, plus) - family.overlap(m, point, n, minus);
                out(m - 1, n - 1) = Complex(0.0, 1.0) * d / (2.0 * s);
            }
        return out;
    };

    Matrix coarse = fd(step);
    Matrix fine = fd(0.5 * step);
    Matrix richardson = (4.0 * fine - coarse) / 3.0;
    if (step_defect) {
        double scale = std::max(richardson.cwiseAbs().maxCoeff(), 1e-300);
        *step_defect = (coarse - fine).cwiseAbs().maxCoeff() / scale;
    }
    return richardson;
}

namespace {

struct StencilTables {
    const rspt::PerturbationExpansion* center;
    std::vector<std::vector<Matrix>> dC;  // [dir][l](m, n)
    std::vector<Matrix> a0;               // [dir]
    double fd_defect = 0.0;
};

// dC^l by central differences, step = rel_step * coordinate scale.
StencilTables build_stencil(const ExpansionFactory& expansions, const ZerothFamily& zeroth,
                            const rspt::PerturbationExpansion& center,
                            const ParameterPoint& point, int K, const FdOptions& fd) {
    StencilTables tables;
    tables.center = &center;
    const int dirs = point.dims();
    const int N = center.dim();
    tables.dC.resize(dirs);
    tables.a0.resize(dirs);

    for (int a = 0; a < dirs; ++a) {
        tables.a0[a] = zeroth(point, a);
        double scale = std::max(std::abs(point.value(a)), 1.0);
        double s = fd.rel_step * scale;

        auto diff_at = [&](double step) {
            ParameterPoint plus = point;
            ParameterPoint minus = point;
            plus.set(point.name(a), point.value(a) + step);
            minus.set(point.name(a), point.value(a) - step);
            rspt::PerturbationExpansion ep = expansions(plus);
            rspt::PerturbationExpansion em = expansions(minus);
            std::vector<Matrix> d(K + 1, Matrix::Zero(N, N));
            for (int l = 1; l <= K; ++l)
                d[l] = (ep.vector_coeffs[l] - em.vector_coeffs[l]) / (2.0 * step);
            return d;
        };

        tables.dC[a] = diff_at(s);
        if (fd.richardson_check) {
            std::vector<Matrix> half = diff_at(0.5 * s);
            double defect = 0.0;
            double scale_c = 1e-300;
            for (int l = 1; l <= K; ++l) {
                defect = std::max(defect, (tables.dC[a][l] - half[l]).cwiseAbs().maxCoeff());
                scale_c = std::max(scale_c, half[l].cwiseAbs().maxCoeff());
            }
            tables.fd_defect = std::max(tables.fd_defect, defect / std::max(scale_c, 1.0));
        }
    }
    return tables;
}

bool all_zero(const std::vector<Matrix>& tables) {
    for (const auto& t : tables)
        if (t.cwiseAbs().maxCoeff() != 0.0) return false;
    return true;
}

}  // namespace

ConnectionSeries connection_perturbative(const ExpansionFactory& expansions,
                                         const ZerothFamily& zeroth, const EpsRule& eps_rule,
                                         const ParameterPoint& point, int K,
                                         const FdOptions& fd) {
    if (K < 0 || K > 3)
        throw PreconditionError("connection_perturbative: supported orders are K <= 3");

    rspt::PerturbationExpansion center = expansions(point);
    if (center.order() < K)
        throw PreconditionError("connection_perturbative: expansion order below requested K");
    const int N = center.dim();
    const int dirs = point.dims();
    if (dirs == 0) throw PreconditionError("connection_perturbative: point has no coordinates");

    StencilTables st = build_stencil(expansions, zeroth, center, point, K, fd);
    const bool zeroth_vanishes = all_zero(st.a0);
    const double eps = eps_rule(point);

    ConnectionSeries out;
    out.point = point;
    out.eps = eps;
    out.fd_defect = st.fd_defect;
    out.per_order.assign(K + 1, RealMatrix::Zero(N, dirs));
    out.f_endpoint = Vector::Zero(N);

    const auto& C = center.vector_coeffs;

    for (int a = 0; a < dirs; ++a) {
        const Matrix& a0 = st.a0[a];
        for (int n = 0; n < N; ++n) {
            // j = 0: A^(0)_n
            Complex j0 = a0(n, n);
            out.per_order[0](n, a) = j0.real();
            out.max_diag_imag = std::max(out.max_diag_imag, std::abs(j0.imag()));

            // j = 1: vanishes identically when every A^(0)_mn is zero
            if (K >= 1 && !zeroth_vanishes) {
                double acc = 0.0;
                for (int r = 0; r < N; ++r) {
                    if (r == n) continue;
                    acc += 2.0 * (C[1](r, n) * a0(n, r)).real();
                }
                out.per_order[1](n, a) = acc * eps;
            }

            if (K >= 2) {
                const std::vector<Matrix>& dC = st.dC[a];
                Complex acc = 0.0;
                for (int m = 0; m < N; ++m) {
                    if (m == n) continue;
                    double c1sq = std::norm(C[1](m, n));
                    acc += c1sq * (a0(m, m) - a0(n, n));
                    acc += -std::imag(std::conj(C[1](m, n)) * dC[1](m, n));
                    acc += 2.0 * (C[2](m, n) * a0(n, m)).real();
                }
                for (int m = 0; m < N; ++m)
                    for (int r = 0; r < N; ++r) {
                        if (r == m) continue;
                        acc += std::conj(C[1](r, n)) * C[1](m, n) * a0(r, m);
                    }
                out.per_order[2](n, a) = acc.real() * eps * eps;
                out.max_diag_imag = std::max(out.max_diag_imag, std::abs(acc.imag()) * eps * eps);
            }

            if (K >= 3) {
                const std::vector<Matrix>& dC = st.dC[a];
                Complex acc = 0.0;
                const int j = 3;
                for (int l = 1; l <= j - 1; ++l) {
                    const Matrix& cl = C[l];
                    const Matrix& cr = C[j - l];
                    const Matrix& dcl = dC[l];
                    const Matrix& dcr = dC[j - l];
                    for (int m = 0; m < N; ++m) {
                        if (m != n)
                            acc += std::conj(cr(m, n)) * cl(m, n) * (a0(m, m) - a0(n, n));
                        acc += Complex(0.0, static_cast<double>(l) / j) *
                               (std::conj(cr(m, n)) * dcl(m, n) -
                                std::conj(dcr(m, n)) * cl(m, n));
                        for (int r = 0; r < N; ++r) {
                            if (r == m) continue;
                            acc += std::conj(cr(r, n)) * cl(m, n) * a0(r, m);
                        }
                    }
                }
                double e3 = eps * eps * eps;
                out.per_order[3](n, a) = acc.real() * e3;
                out.max_diag_imag = std::max(out.max_diag_imag, std::abs(acc.imag()) * e3);
            }
        }
    }

    // exact-form remainder f (Eq. e3-6 partial sums through K)
    for (int n = 0; n < N; ++n) {
        Complex f = 0.0;
        double epsj = 1.0;
        for (int j = 1; j <= K; ++j) {
            epsj *= eps;
            for (int l = 1; l <= j; ++l) {
                Complex inner = 0.0;
                for (int m = 0; m < N; ++m)
                    inner += std::conj(C[j - l](m, n)) * C[l](m, n);
                f += (static_cast<double>(l) / j) * inner * epsj;
            }
        }
        out.f_endpoint[n] = f;
    }
    return out;
}

SnSum leading_connection_sum(int n, long long cutoff) {
    if (n < 1) throw PreconditionError("leading_connection_sum: level must be >= 1");
    if (cutoff < n + 1)
        throw PreconditionError("leading_connection_sum: cutoff must exceed the level");
    SnSum out;
    const double nn = static_cast<double>(n) * n;
    for (long long m = 1; m <= cutoff; ++m) {
        if (m == n) continue;
        double mm = static_cast<double>(m) * m;
        double d = mm - nn;
        out.value += mm * nn / (d * d * d);
    }
    double mp = static_cast<double>(cutoff + 1);
    double c = 1.0 / std::pow(1.0 - nn / (mp * mp), 3);
    out.tail_bound = c * nn / (3.0 * std::pow(static_cast<double>(cutoff), 3));
    return out;
}

OverlapFn plain_overlap() {
    return [](const SpectrumSnapshot& a, const SpectrumSnapshot& b, int level) {
        return a.states.col(level).dot(b.states.col(level));
    };
}

static Complex guarded_link(const OverlapFn& overlap, const SpectrumSnapshot& a,
                            const SpectrumSnapshot& b, int level) {
    Complex ov = overlap(a, b, level);
    if (std::abs(ov) <= kPathResolutionGuard)
        throw PreconditionError("discrete_berry_phase: path too coarse (consecutive overlap " +
                                std::to_string(std::abs(ov)) + " <= 0.5)");
    return ov;
}

double discrete_berry_phase(const std::vector<SpectrumSnapshot>& snapshots, int level,
                            bool closed, const OverlapFn& overlap) {
    if (snapshots.size() < 3)
        throw PreconditionError("discrete_berry_phase: need at least 3 snapshots");

    if (closed) {
        Complex prod = 1.0;
        for (size_t k = 0; k + 1 < snapshots.size(); ++k) {
            Complex ov = guarded_link(overlap, snapshots[k], snapshots[k + 1], level);
            prod *= ov / std::abs(ov);
        }
        Complex wrap = guarded_link(overlap, snapshots.back(), snapshots.front(), level);
        prod *= wrap / std::abs(wrap);
        return -std::arg(prod);
    }

    double acc = 0.0;
    for (size_t k = 0; k + 1 < snapshots.size(); ++k)
        acc -= std::arg(guarded_link(overlap, snapshots[k], snapshots[k + 1], level));
    return acc;
}

Complex noncyclic_phase(const std::vector<SpectrumSnapshot>& snapshots, int level, double gamma,
                        const OverlapFn& overlap) {
    if (snapshots.empty()) throw PreconditionError("noncyclic_phase: no snapshots");
    Complex w = overlap(snapshots.front(), snapshots.back(), level);
    return w * std::exp(Complex(0.0, gamma));
}

RealityDefect reality_defect(const std::function<GridFunction(double)>& family,
                             const std::function<double(double)>& wall, double t, double dt) {
    if (!(dt > 0.0)) throw PreconditionError("reality_defect: dt must be positive");

    auto normalized = [&](double when) {
        GridFunction g = family(when);
        MeasureWeight mu{wall(when)};
        double nrm = measure_norm(g, mu);
        if (!(nrm > 0.0)) throw PreconditionError("reality_defect: state has zero norm");
        g.values /= nrm;
        return g;
    };

    GridFunction minus = normalized(t - dt);
    GridFunction center = normalized(t);
    GridFunction plus = normalized(t + dt);
    if (!minus.grid.same_as(center.grid) || !plus.grid.same_as(center.grid))
        throw PreconditionError("reality_defect: family samples on inconsistent grids");

    GridFunction fdot = center;
    fdot.values = (plus.values - minus.values) / (2.0 * dt);

    MeasureWeight mu{wall(t)};
    Complex ip = measure_inner_product(center, fdot, mu);

    RealityDefect out;
    out.imag_part = ip.real();  // Im(i ip) = Re(ip)
    double ldot = (wall(t + dt) - wall(t - dt)) / (2.0 * dt);
    double phi_wall = std::abs(interpolate(center, mu.wall));
    out.boundary_density = -0.5 * phi_wall * phi_wall * ldot;
    return out;
}

PerturbativePathIntegral connection_path_integral(const ExpansionFactory& expansions,
                                                  const ZerothFamily& zeroth,
                                                  const EpsRule& eps_rule,
                                                  const ParameterPath& path, int K, int level,
                                                  const FdOptions& fd, par::Mode mode) {
    const auto& samples = path.samples();
    const std::ptrdiff_t S = static_cast<std::ptrdiff_t>(samples.size());
    std::vector<ConnectionSeries> series(S);

    if (mode == par::Mode::openmp) {
#pragma omp parallel for schedule(static) num_threads(par::max_threads())
        for (std::ptrdiff_t k = 0; k < S; ++k)
            series[k] = connection_perturbative(expansions, zeroth, eps_rule, samples[k].point,
                                                K, fd);
    } else {
        for (std::ptrdiff_t k = 0; k < S; ++k)
            series[k] = connection_perturbative(expansions, zeroth, eps_rule, samples[k].point,
                                                K, fd);
    }

    PerturbativePathIntegral out;
    const int dirs = samples.front().point.dims();
    for (std::ptrdiff_t k = 0; k + 1 < S; ++k) {
        for (int a = 0; a < dirs; ++a) {
            double dr = samples[k + 1].point.value(a) - samples[k].point.value(a);
            double mean = 0.0;
            for (int j = 0; j <= K; ++j)
                mean += 0.5 * (series[k].per_order[j](level, a) +
                               series[k + 1].per_order[j](level, a));
            out.gamma_non_exact += mean * dr;
        }
        out.max_diag_imag = std::max(out.max_diag_imag,
                                     std::max(series[k].max_diag_imag,
                                              series[k + 1].max_diag_imag));
    }
    out.f_delta = series.back().f_endpoint[level] - series.front().f_endpoint[level];
    return out;
}

}  // namespace geomphase::berry
