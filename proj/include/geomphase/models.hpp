#pragma once

#include <functional>
#include <string>

#include "geomphase/grid.hpp"
#include "geomphase/parallel.hpp"
#include "geomphase/types.hpp"

namespace geomphase::models {

/// The moving-wall model family. The effective kinds carry their sign in the
/// coupling; both use R = path rate coordinate with eps = M L^2 R.
enum class ModelKind {
    conventional_box,  // p^2/2M with hard walls at 0 and L
    transformed,       // fixed-domain L0^2 p^2/(2M L^2) - R/(2ML^2)(xp+px), R = M L Ldot
    effective_plus,    // p^2/2M + (R/2)(xp+px),  R = Ldot/L
    effective_minus,   // p^2/2M - (R/2)(xp+px),  R = Ldot/L
    effective_mass,    // L0^2 p^2/(2M L^2), diagonal for all t
};

ModelKind model_kind_from_string(const std::string& s);
std::string to_string(ModelKind kind);

struct BoxModel {
    ModelKind kind;
    PhysicalConfig config;
    int basis_size = 64;

    /// Optional user potential hook: matrix elements <m|V|n> in the
    /// instantaneous sine basis at a parameter point (1-based m, n).
    std::function<Complex(int m, int n, const ParameterPoint&)> potential;

    void validate() const;
};

/// hbar^2 pi^2 n^2 / (2 M L^2)
double box_energy(int n, double L, const PhysicalConfig& config);

/// <m|(xp+px)/2|n> in the length-L sine basis: 2i hbar (-1)^{m+n} m n/(m^2-n^2)
/// for m != n, zero on the diagonal. Independent of L.
Complex dilation_element(int m, int n, const PhysicalConfig& config, double L);

struct Coupling {
    OperatorMatrix h;
    std::function<double(const ParameterPoint&)> eps_rule;
};

/// The kind's perturbation operator h and its eps(point) rule.
/// conventional_box has no coupling split and throws.
Coupling coupling_matrix(const BoxModel& model, double L);

/// int_0^min(L1,L2) of the two normalized sine modes; exact formula.
double cross_box_overlap(int m, double L1, int n, double L2);

/// sqrt(2/L) sin(n pi x / L) [theta(x) - theta(x-L)] sampled on grid.
GridFunction conventional_eigenfunction(int n, double L, const Grid& grid,
                                        const PhysicalConfig& config);

/// Instantaneous Hamiltonian at a parameter point, in the kind's working
/// basis (fixed [0,L0] sines for transformed/effective_mass, length-L sines
/// otherwise).
OperatorMatrix hamiltonian_at(const BoxModel& model, const ParameterPoint& point);

/// Fixed-basis Hamiltonian driving the transformed-frame dynamics at wall
/// position L, wall velocity Ldot.
OperatorMatrix fixed_frame_hamiltonian(const BoxModel& model, double L, double Ldot);

SpectrumSnapshot snapshot_at(const BoxModel& model, const ParameterPoint& point);

/// Eigensolve every path sample (independent; parallel over samples).
std::vector<SpectrumSnapshot> snapshots_along_path(const BoxModel& model,
                                                   const ParameterPath& path,
                                                   par::Mode mode = par::default_mode());

/// Overlap <a_n | b_n> honoring the measure-weighted space: when the two
/// snapshots live in sine bases of different lengths the cross-box overlap
/// matrix is sandwiched in.
Complex snapshot_overlap(const BoxModel& model, const SpectrumSnapshot& a,
                         const SpectrumSnapshot& b, int level);

std::function<Complex(const SpectrumSnapshot&, const SpectrumSnapshot&, int)> measure_overlap_fn(
    const BoxModel& model);

/// Exact pairwise basis overlaps <m(p_a)|n(p_b)> for the kind's unperturbed
/// basis family, used by the connection finite differencing.
struct BasisFamily {
    int size = 0;
    bool parameter_independent = false;
    std::function<Complex(int m, const ParameterPoint&, int n, const ParameterPoint&)> overlap;
};

BasisFamily basis_family(const BoxModel& model);

// ---- path builders -------------------------------------------------------

ParameterPath rectangle_loop(double l_min, double l_max, double r_min, double r_max,
                             int samples_per_edge);
ParameterPath line_path(const ParameterPoint& from, const ParameterPoint& to, int samples);
/// Out-and-back along the same curve (zero enclosed area).
ParameterPath retraced_path(const ParameterPoint& from, const ParameterPoint& to, int samples);

}  // namespace geomphase::models
