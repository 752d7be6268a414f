#include "geomphase/rspt.hpp"

#include <cmath>

namespace geomphase::rspt {

static void check_gaps(const RealVector& e0) {
    const int n = static_cast<int>(e0.size());
    if (n < 2) return;
    double span = e0[n - 1] - e0[0];
    double guard = kDefaultMinGapRel * std::max(span, 1e-300);
    for (int k = 0; k + 1 < n; ++k)
        if (e0[k + 1] - e0[k] < guard) throw DegeneracyError(k + 1, k + 2, e0[k + 1] - e0[k]);
}

static std::pair<RealVector, Matrix> first_order_eigenbasis(const RealVector& e0,
                                                            const Matrix& heig) {
    const int N = static_cast<int>(e0.size());
    RealVector e1(N);
    Matrix c1 = Matrix::Zero(N, N);
    for (int n = 0; n < N; ++n) {
        e1[n] = heig(n, n).real();
        for (int m = 0; m < N; ++m) {
            if (m == n) continue;
            c1(m, n) = heig(m, n) / (e0[n] - e0[m]);
        }
    }
    return {std::move(e1), std::move(c1)};
}

std::pair<RealVector, Matrix> first_order(const SpectrumSnapshot& base, const OperatorMatrix& h) {
    const int N = base.dim();
    if (h.dim() != N) throw PreconditionError("first_order: dimension mismatch");
    check_gaps(base.energies);
    Matrix heig = base.states.adjoint() * h.entries * base.states;
    return first_order_eigenbasis(base.energies, heig);
}

PerturbationExpansion make_expansion(const SpectrumSnapshot& base, const OperatorMatrix& h) {
    const int N = base.dim();
    if (h.dim() != N) throw PreconditionError("make_expansion: dimension mismatch");
    check_gaps(base.energies);

    PerturbationExpansion exp;
    exp.base = base;
    exp.coupling = OperatorMatrix{base.states.adjoint() * h.entries * base.states};
    exp.energy_coeffs.push_back(base.energies);
    exp.vector_coeffs.push_back(Matrix::Identity(N, N));
    return exp;
}

namespace {

// One column of orders >= 2. Sums run over ascending indices so serial and
// OpenMP execution produce identical bits.
struct ExtendWork {
    const RealVector& e0;
    const RealVector& e1;
    const Matrix& c1;
    const std::vector<RealVector>& E;
    const std::vector<Matrix>& C;
};

void extend_column(const ExtendWork& w, int l, int n, RealVector& el_out, Matrix& cl_out,
                   double& imag_out) {
    const int N = static_cast<int>(w.e0.size());
    const Matrix& c_prev = w.C[l - 1];

    Complex energy = 0.0;
    for (int r = 0; r < N; ++r) {
        if (r == n) continue;
        energy += (w.e0[r] - w.e0[n]) * w.c1(n, r) * c_prev(r, n);
    }
    for (int k = 2; k <= l - 1; ++k) energy -= w.E[k][n] * w.C[l - k](n, n);
    el_out[n] = energy.real();
    imag_out = std::abs(energy.imag());

    for (int m = 0; m < N; ++m) {
        if (m == n) continue;
        const double gap = w.e0[n] - w.e0[m];
        Complex acc = 0.0;
        for (int r = 0; r < N; ++r) {
            if (r == m) continue;
            acc += (w.e0[r] - w.e0[m]) * w.c1(m, r) * c_prev(r, n);
        }
        acc /= gap;
        acc += (w.e1[m] - w.e1[n]) / gap * c_prev(m, n);
        for (int k = 2; k <= l - 1; ++k) acc -= w.E[k][n] * w.C[l - k](m, n) / gap;
        cl_out(m, n) = acc;
    }

    // normalization fixes Re C^l_nn; the imaginary part is gauged to zero
    Complex diag = 0.0;
    for (int lp = 1; lp <= l - 1; ++lp) {
        const Matrix& a = w.C[lp];
        const Matrix& b = w.C[l - lp];
        for (int r = 0; r < N; ++r) diag += a(r, n) * std::conj(b(r, n));
    }
    cl_out(n, n) = Complex(-0.5 * diag.real(), 0.0);
}

}  // namespace

PerturbationExpansion extend_order(PerturbationExpansion exp, int target_K, par::Mode mode) {
    const int N = exp.dim();
    if (target_K < 0) throw PreconditionError("extend_order: target order must be >= 0");

    if (exp.order() < 1 && target_K >= 1) {
        auto [e1, c1] = first_order_eigenbasis(exp.energy_coeffs[0], exp.coupling.entries);
        exp.energy_coeffs.push_back(std::move(e1));
        exp.vector_coeffs.push_back(std::move(c1));
    }

    for (int l = exp.order() + 1; l <= target_K; ++l) {
        RealVector el(N);
        Matrix cl = Matrix::Zero(N, N);
        std::vector<double> imag(N, 0.0);
        ExtendWork work{exp.energy_coeffs[0], exp.energy_coeffs[1], exp.vector_coeffs[1],
                        exp.energy_coeffs, exp.vector_coeffs};

        if (mode == par::Mode::openmp) {
#pragma omp parallel for schedule(static) num_threads(par::max_threads())
            for (int n = 0; n < N; ++n) extend_column(work, l, n, el, cl, imag[n]);
        } else {
            for (int n = 0; n < N; ++n) extend_column(work, l, n, el, cl, imag[n]);
        }

        for (int n = 0; n < N; ++n) {
            exp.max_energy_imag = std::max(exp.max_energy_imag, imag[n]);
            if (!std::isfinite(el[n]))
                throw NumericError("extend_order: energy coefficient overflow at order " +
                                   std::to_string(l));
        }
        if (!cl.allFinite())
            throw NumericError("extend_order: vector coefficient overflow at order " +
                               std::to_string(l));

        exp.energy_coeffs.push_back(std::move(el));
        exp.vector_coeffs.push_back(std::move(cl));
    }
    return exp;
}

Vector assemble_eigenvector(const PerturbationExpansion& exp, int n, double eps) {
    if (n < 0 || n >= exp.dim()) throw PreconditionError("assemble_eigenvector: bad level");
    Vector v = Vector::Zero(exp.dim());
    double p = 1.0;
    for (int l = 0; l <= exp.order(); ++l) {
        v += p * exp.vector_coeffs[l].col(n);
        p *= eps;
    }
    return v;
}

double series_eigenvalue(const PerturbationExpansion& exp, int n, double eps) {
    if (n < 0 || n >= exp.dim()) throw PreconditionError("series_eigenvalue: bad level");
    double acc = 0.0;
    double p = 1.0;
    for (int l = 0; l <= exp.order(); ++l) {
        acc += exp.energy_coeffs[l][n] * p;
        p *= eps;
    }
    return acc;
}

double residual_norm(const PerturbationExpansion& exp, int n, double eps) {
    Vector v = assemble_eigenvector(exp, n, eps);
    double e = series_eigenvalue(exp, n, eps);
    Vector hv = exp.energy_coeffs[0].cast<Complex>().cwiseProduct(v) +
                eps * (exp.coupling.entries * v);
    return (hv - e * v).norm();
}

double convergence_ratio(const PerturbationExpansion& exp, int n, double eps) {
    const int K = exp.order();
    if (K < 1) return 0.0;
    double top = std::abs(exp.energy_coeffs[K][n] * std::pow(eps, K));
    for (int l = K - 1; l >= 0; --l) {
        double bottom = std::abs(exp.energy_coeffs[l][n] * std::pow(eps, l));
        if (bottom > 1e-300) return top / bottom;
    }
    return 0.0;
}

}  // namespace geomphase::rspt
