#pragma once

#include <vector>

#include "geomphase/parallel.hpp"
#include "geomphase/types.hpp"

namespace geomphase::rspt {

/// Series coefficients E_n^(l) and C^l_mn of H = H0 + eps h through order K.
///
/// The coupling is stored (and all coefficients are expressed) in the
/// eigenbasis of H0. Gauge convention: Im C^l_nn = 0 for every order.
/// Coefficients carry an O(1/N^3) truncation bias for the box models (matrix
/// elements decay like 1/(m^2-n^2)); default basis size 64.
struct PerturbationExpansion {
    SpectrumSnapshot base;                  // spectrum of H0
    OperatorMatrix coupling;                // h in the H0 eigenbasis
    std::vector<RealVector> energy_coeffs;  // [l](n), l = 0..K
    std::vector<Matrix> vector_coeffs;      // [l](m, n)
    double max_energy_imag = 0.0;           // dropped imaginary part diagnostic

    int order() const { return static_cast<int>(energy_coeffs.size()) - 1; }
    int dim() const { return base.dim(); }

    double energy(int l, int n) const { return energy_coeffs[l][n]; }
    Complex coeff(int l, int m, int n) const { return vector_coeffs[l](m, n); }
};

/// E1_n = <n|h|n>, C1_mn = <m|h|n>/(E_n - E_m) for m != n, C1_nn = 0.
std::pair<RealVector, Matrix> first_order(const SpectrumSnapshot& base, const OperatorMatrix& h);

/// Zeroth-order expansion: E^(0) from the base spectrum, C^0 = identity.
/// h may be given in any orthonormal basis; it is rotated into the H0
/// eigenbasis here.
PerturbationExpansion make_expansion(const SpectrumSnapshot& base, const OperatorMatrix& h);

/// Fills orders through target_K with the textbook recursions; per-level
/// columns are independent (parallel over n, ascending-index sums).
PerturbationExpansion extend_order(PerturbationExpansion exp, int target_K,
                                   par::Mode mode = par::default_mode());

/// sum_l eps^l sum_m C^l_mn |m>_0, in the H0 eigenbasis; not re-normalized.
Vector assemble_eigenvector(const PerturbationExpansion& exp, int n, double eps);

/// Partial sum sum_l E_n^(l) eps^l.
double series_eigenvalue(const PerturbationExpansion& exp, int n, double eps);

/// ||(H0 + eps h - series_eigenvalue) assemble_eigenvector||.
double residual_norm(const PerturbationExpansion& exp, int n, double eps);

/// |E^(K) eps^K / E^(K-1) eps^{K-1}| (nearest nonvanishing lower order);
/// values above 0.5 suggest eps is outside the useful radius.
double convergence_ratio(const PerturbationExpansion& exp, int n, double eps);

}  // namespace geomphase::rspt
