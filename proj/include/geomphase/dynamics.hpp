#pragma once

#include <functional>
#include <vector>

#include "geomphase/berry.hpp"
#include "geomphase/grid.hpp"
#include "geomphase/models.hpp"
#include "geomphase/types.hpp"

namespace geomphase::dynamics {

/// Wall trajectory L(t) on [0, tau] with its analytic derivative. validate()
/// cross-checks Ldot against a finite difference of L.
struct WallSchedule {
    std::function<double(double)> L;
    std::function<double(double)> Ldot;
    double tau = 0.0;

    static WallSchedule constant(double l, double tau);
    static WallSchedule linear(double l_from, double l_to, double tau);
    /// Closed bump L(t) = l0 (1 + a sin^2(pi t / tau)); Ldot vanishes at the ends.
    static WallSchedule bump(double l0, double amplitude, double tau);
    /// C^1 ramp l_from -> l_to with zero end rates (smoothstep profile).
    static WallSchedule smoothstep(double l_from, double l_to, double tau);

    void validate(int probes = 64, double tol = 1e-6) const;
};

struct EvolutionResult {
    std::vector<double> times;
    std::vector<Vector> states;  // psi' coefficients in the fixed sine basis
    std::vector<double> norms;
    double dt = 0.0;
    double max_norm_drift_per_time = 0.0;
};

using HamiltonianFn = std::function<Matrix(double)>;

/// Cayley (time-symmetric unitary rational) stepping with the midpoint
/// Hamiltonian. dt must resolve the largest eigenfrequency:
/// dt * E_max / hbar <= 0.1. Norm drift beyond 1e-9 per unit time aborts.
EvolutionResult propagate(const HamiltonianFn& hamiltonian, const Vector& initial, double tau,
                          double dt, double store_dt, const PhysicalConfig& config,
                          double energy_scale_max);

/// Convenience wrapper: the model kind's fixed-frame Hamiltonian family over
/// the schedule.
EvolutionResult propagate(const models::BoxModel& model, const WallSchedule& schedule,
                          const Vector& initial, double dt, double store_dt);

/// Suggested step: min(1e-3 hbar/E_1, 0.1 hbar/E_max) over the schedule.
double default_dt(const models::BoxModel& model, const WallSchedule& schedule);

enum class DilationDirection { forward, inverse };

/// forward: fixed-basis coefficients -> sampled function on the moving
/// domain [0, L] (x -> (L/L0) x with norm-preserving amplitude rescale).
GridFunction dilation_map(const Vector& coeffs, const PhysicalConfig& config, double L,
                          const Grid& grid);

/// inverse: sampled function on [0, L] -> fixed-basis coefficients.
Vector dilation_map_inverse(const GridFunction& f, const PhysicalConfig& config, double L,
                            int basis_size);

struct PhaseSeries {
    std::vector<double> times;
    std::vector<PhaseRecord> records;
    std::vector<double> population;  // |<n|psi>|^2 at each sample
    double max_leaked = 0.0;
    bool adiabatic_trusted = true;   // max_leaked below the configured threshold
};

struct ExtractOptions {
    double population_floor = 0.5;   // below -> tracking-lost error
    double leak_threshold = 1e-3;    // above -> adiabatic_trusted = false
    double unwrap_guard = kPi / 2.0; // max |d alpha| per stored sample
};

/// alpha_n(t) = arg<n;R(t)|psi(t)> unwrapped; delta_n from the instantaneous
/// eigenvalues (cumulative Simpson); gamma = alpha - delta; Phi via the
/// noncyclic overlap. Instantaneous eigenvectors use the canonical gauge.
PhaseSeries extract_phases(const EvolutionResult& result, const models::BoxModel& model,
                           const WallSchedule& schedule, int level,
                           const ExtractOptions& options = {});

}  // namespace geomphase::dynamics
