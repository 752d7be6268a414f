#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "geomphase/grid.hpp"
#include "geomphase/models.hpp"
#include "geomphase/rspt.hpp"
#include "geomphase/types.hpp"

namespace geomphase::berry {

inline constexpr double kPathResolutionGuard = 0.5;

/// Connection one-form coefficients at one parameter point: diag(n, a) is the
/// real diagonal coefficient of level n along direction a (the point's a-th
/// coordinate); the optional off-diagonal tables hold A^(0)_mn per direction.
struct ConnectionSample {
    ParameterPoint point;
    RealMatrix diag;                            // (levels, dirs)
    std::optional<std::vector<Matrix>> offdiag; // per dir
};

/// Order-by-order perturbative connection at a point. per_order[j](n, a)
/// carries the full eps^j-weighted contribution; the exact-form remainder f
/// is kept as a per-level endpoint value so loop integrals can drop it.
struct ConnectionSeries {
    ParameterPoint point;
    double eps = 0.0;
    std::vector<RealMatrix> per_order;  // j = 0..K
    Vector f_endpoint;                  // f per level (complex)
    double max_diag_imag = 0.0;         // dropped imaginary part diagnostic
    double fd_defect = 0.0;             // Richardson check on dC stencils

    int order() const { return static_cast<int>(per_order.size()) - 1; }
    double diag_total(int n, int a) const {
        double acc = 0.0;
        for (const auto& m : per_order) acc += m(n, a);
        return acc;
    }
};

/// A^(0)_mn = i <m|d/dR^a|n>_0 per unit dR^a by central differencing of the
/// basis family (Richardson-extrapolated); families flagged parameter
/// independent return an exact zero table. step_defect receives the relative
/// change between the two stencil widths ("> 1%" means the step is too
/// coarse for this family).
Matrix connection_zeroth(const models::BasisFamily& family, const ParameterPoint& point,
                         const std::string& direction, double step, double* step_defect = nullptr);

using ExpansionFactory = std::function<rspt::PerturbationExpansion(const ParameterPoint&)>;
using ZerothFamily = std::function<Matrix(const ParameterPoint&, int dir)>;
using EpsRule = std::function<double(const ParameterPoint&)>;

struct FdOptions {
    double rel_step = 1e-4;       // central-difference step per coordinate scale
    bool richardson_check = true; // also evaluate at step/2 and record the defect
};

/// Assembles the connection series through order K <= 3: the eps^1 term
/// 2 sum_r Re(C^1_rn A^(0)_nr), the full eps^2 bracket, the j = 3 tail, and
/// the exact-form remainder f. dC^l by central differences on a
/// 2-point-per-direction stencil.
ConnectionSeries connection_perturbative(const ExpansionFactory& expansions,
                                         const ZerothFamily& zeroth, const EpsRule& eps_rule,
                                         const ParameterPoint& point, int K,
                                         const FdOptions& fd = {});

struct SnSum {
    double value = 0.0;
    double tail_bound = 0.0;
};

/// Partial sum of sum_{m != n} m^2 n^2/(m^2 - n^2)^3 with an integral tail
/// bound (terms decay like 1/m^4).
SnSum leading_connection_sum(int n, long long cutoff);

using OverlapFn = std::function<Complex(const SpectrumSnapshot&, const SpectrumSnapshot&, int)>;

OverlapFn plain_overlap();

/// Discrete (Bargmann) Berry phase along sampled snapshots. Closed paths use
/// the fully gauge-invariant wrap-around product; open paths accumulate link
/// arguments continuously under the endpoint gauge convention. Consecutive
/// links whose |overlap| <= 0.5 raise a path-too-coarse error.
double discrete_berry_phase(const std::vector<SpectrumSnapshot>& snapshots, int level,
                            bool closed, const OverlapFn& overlap = plain_overlap());

/// Phi_n = <n;R(0)|n;R(t)> exp(i gamma).
Complex noncyclic_phase(const std::vector<SpectrumSnapshot>& snapshots, int level, double gamma,
                        const OverlapFn& overlap = plain_overlap());

struct RealityDefect {
    double imag_part = 0.0;         // measured Im A_n
    double boundary_density = 0.0;  // -|phi(L)|^2 Ldot / 2
};

/// Measures Im A_n from a moving-wall time series of the smooth state family
/// (normalized per sample under its own wall measure) and the boundary
/// density it must match. Both vanish when phi(L) = 0 or the wall is static.
RealityDefect reality_defect(const std::function<GridFunction(double)>& family,
                             const std::function<double(double)>& wall, double t, double dt);

/// Trapezoid loop/path integral of the perturbative connection orders
/// j = 0..K (the non-exact part); the i df remainder is reported as the
/// endpoint difference of f, never integrated along the path.
struct PerturbativePathIntegral {
    double gamma_non_exact = 0.0;
    Complex f_delta{0.0, 0.0};
    double max_diag_imag = 0.0;
};

PerturbativePathIntegral connection_path_integral(const ExpansionFactory& expansions,
                                                  const ZerothFamily& zeroth,
                                                  const EpsRule& eps_rule,
                                                  const ParameterPath& path, int K, int level,
                                                  const FdOptions& fd = {},
                                                  par::Mode mode = par::default_mode());

}  // namespace geomphase::berry
