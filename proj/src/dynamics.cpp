#include "geomphase/dynamics.hpp"

#include <Eigen/LU>

#include <cmath>

namespace geomphase::dynamics {

WallSchedule WallSchedule::constant(double l, double tau) {
    if (!(l > 0.0) || !(tau > 0.0)) throw PreconditionError("WallSchedule: l, tau must be positive");
    return {[l](double) { return l; }, [](double) { return 0.0; }, tau};
}

WallSchedule WallSchedule::linear(double l_from, double l_to, double tau) {
    if (!(l_from > 0.0) || !(l_to > 0.0) || !(tau > 0.0))
        throw PreconditionError("WallSchedule: lengths and tau must be positive");
    double v = (l_to - l_from) / tau;
    return {[l_from, v](double t) { return l_from + v * t; }, [v](double) { return v; }, tau};
}

WallSchedule WallSchedule::bump(double l0, double amplitude, double tau) {
    if (!(l0 > 0.0) || !(tau > 0.0) || amplitude <= -1.0)
        throw PreconditionError("WallSchedule::bump: bad parameters");
    return {[=](double t) {
                double s = std::sin(kPi * t / tau);
                return l0 * (1.0 + amplitude * s * s);
            },
            [=](double t) { return l0 * amplitude * kPi / tau * std::sin(2.0 * kPi * t / tau); },
            tau};
}

WallSchedule WallSchedule::smoothstep(double l_from, double l_to, double tau) {
    if (!(l_from > 0.0) || !(l_to > 0.0) || !(tau > 0.0))
        throw PreconditionError("WallSchedule: lengths and tau must be positive");
    double d = l_to - l_from;
    return {[=](double t) {
                double s = t / tau;
                return l_from + d * s * s * (3.0 - 2.0 * s);
            },
            [=](double t) {
                double s = t / tau;
                return d * 6.0 * s * (1.0 - s) / tau;
            },
            tau};
}

void WallSchedule::validate(int probes, double tol) const {
    if (!L || !Ldot || !(tau > 0.0)) throw PreconditionError("WallSchedule: incomplete schedule");
    double h = tau * 1e-7;
    for (int k = 0; k <= probes; ++k) {
        double t = tau * k / probes;
        double l = L(t);
        if (!(l > 0.0) || !std::isfinite(l))
            throw PreconditionError("WallSchedule: L(t) must stay positive and finite");
        double tl = std::min(std::max(t, h), tau - h);
        double fd = (L(tl + h) - L(tl - h)) / (2.0 * h);
        double scale = std::max(1.0, std::abs(fd));
        if (std::abs(fd - Ldot(tl)) > tol * scale)
            throw PreconditionError("WallSchedule: Ldot inconsistent with L at t=" +
                                    std::to_string(tl));
    }
}

EvolutionResult propagate(const HamiltonianFn& hamiltonian, const Vector& initial, double tau,
                          double dt, double store_dt, const PhysicalConfig& config,
                          double energy_scale_max) {
    config.validate();
    if (!(tau > 0.0) || !(dt > 0.0)) throw PreconditionError("propagate: tau, dt must be positive");
    if (std::abs(initial.norm() - 1.0) > 1e-9)
        throw PreconditionError("propagate: initial state must be normalized");
    if (dt * energy_scale_max / config.hbar > 0.1)
        throw PreconditionError("propagate: dt too large for the fastest eigenfrequency "
                                "(dt E_max / hbar > 0.1)");

    const int N = static_cast<int>(initial.size());
    const long long steps = static_cast<long long>(std::llround(tau / dt));
    const long long store_every = std::max<long long>(1, std::llround(store_dt / dt));

    EvolutionResult out;
    out.dt = dt;
    out.times.push_back(0.0);
    out.states.push_back(initial);
    out.norms.push_back(initial.norm());

    Vector psi = initial;
    const Matrix eye = Matrix::Identity(N, N);
    const Complex half_step(0.0, dt / (2.0 * config.hbar));

    for (long long k = 0; k < steps; ++k) {
        double tm = (k + 0.5) * dt;
        Matrix h = hamiltonian(tm);
        Matrix plus = eye + half_step * h;
        Vector rhs = psi - half_step * (h * psi);
        psi = plus.partialPivLu().solve(rhs);

        double t = (k + 1) * dt;
        double norm = psi.norm();
        double drift = std::abs(norm - 1.0);
        out.max_norm_drift_per_time = std::max(out.max_norm_drift_per_time, drift / std::max(t, dt));
        if (drift > 1e-9 * std::max(t, 1.0) * 10.0)
            throw NumericError("propagate: integrator fault, norm drift " + std::to_string(drift) +
                               " at t=" + std::to_string(t));

        if ((k + 1) % store_every == 0 || k + 1 == steps) {
            out.times.push_back(t);
            out.states.push_back(psi);
            out.norms.push_back(norm);
        }
    }
    return out;
}

static double schedule_energy_bound(const models::BoxModel& model, const WallSchedule& schedule) {
    double worst = 0.0;
    for (int k = 0; k <= 64; ++k) {
        double t = schedule.tau * k / 64.0;
        Matrix h = models::fixed_frame_hamiltonian(model, schedule.L(t), schedule.Ldot(t)).entries;
        // Gershgorin bound is enough for the stability guard
        for (int i = 0; i < h.rows(); ++i) {
            double row = 0.0;
            for (int j = 0; j < h.cols(); ++j)
                if (j != i) row += std::abs(h(i, j));
            worst = std::max(worst, std::abs(h(i, i)) + row);
        }
    }
    return worst;
}

EvolutionResult propagate(const models::BoxModel& model, const WallSchedule& schedule,
                          const Vector& initial, double dt, double store_dt) {
    model.validate();
    schedule.validate();
    if (initial.size() != model.basis_size)
        throw PreconditionError("propagate: initial state size != basis_size");
    double emax = schedule_energy_bound(model, schedule);
    auto family = [&model, &schedule](double t) {
        return models::fixed_frame_hamiltonian(model, schedule.L(t), schedule.Ldot(t)).entries;
    };
    return propagate(family, initial, schedule.tau, dt, store_dt, model.config, emax);
}

double default_dt(const models::BoxModel& model, const WallSchedule& schedule) {
    double e1 = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= 16; ++k) {
        double t = schedule.tau * k / 16.0;
        e1 = std::min(e1, models::box_energy(1, schedule.L(t), model.config));
    }
    double emax = schedule_energy_bound(model, schedule);
    return std::min(1e-3 * model.config.hbar / e1, 0.1 * model.config.hbar / emax);
}

GridFunction dilation_map(const Vector& coeffs, const PhysicalConfig& config, double L,
                          const Grid& grid) {
    config.validate();
    if (!(L > 0.0)) throw PreconditionError("dilation_map: L must be positive");
    const int N = static_cast<int>(coeffs.size());
    // exp(i a (xp+px)/2hbar) with a = ln(L/L0) carries the fixed-basis
    // coefficients unchanged onto the length-L sine modes
    double amp = std::sqrt(2.0 / L);
    return GridFunction::sampled(grid, [&](double x) {
        if (x < 0.0 || x > L) return Complex(0.0, 0.0);
        Complex acc = 0.0;
        for (int n = 1; n <= N; ++n) acc += coeffs[n - 1] * amp * std::sin(n * kPi * x / L);
        return acc;
    });
}

Vector dilation_map_inverse(const GridFunction& f, const PhysicalConfig& config, double L,
                            int basis_size) {
    config.validate();
    if (!(L > 0.0)) throw PreconditionError("dilation_map_inverse: L must be positive");
    MeasureWeight mu{L};
    Vector coeffs(basis_size);
    double amp = std::sqrt(2.0 / L);
    for (int n = 1; n <= basis_size; ++n) {
        GridFunction mode = GridFunction::sampled(f.grid, [&](double x) {
            return Complex(amp * std::sin(n * kPi * x / L), 0.0);
        });
        coeffs[n - 1] = measure_inner_product(mode, f, mu);
    }
    return coeffs;
}

PhaseSeries extract_phases(const EvolutionResult& result, const models::BoxModel& model,
                           const WallSchedule& schedule, int level,
                           const ExtractOptions& options) {
    if (level < 0 || level >= model.basis_size)
        throw PreconditionError("extract_phases: bad level");
    const size_t S = result.times.size();
    if (S < 3) throw PreconditionError("extract_phases: need at least 3 stored samples");

    std::vector<SpectrumSnapshot> snaps(S);
    std::vector<double> energies(S);
    const std::ptrdiff_t count = static_cast<std::ptrdiff_t>(S);
#pragma omp parallel for schedule(static) num_threads(par::max_threads())
    for (std::ptrdiff_t k = 0; k < count; ++k) {
        double t = result.times[k];
        OperatorMatrix h = models::fixed_frame_hamiltonian(model, schedule.L(t), schedule.Ldot(t));
        snaps[k] = SpectrumSnapshot::compute(h, ParameterPoint{{"L", schedule.L(t)}});
        energies[k] = snaps[k].energies[level];
    }

    PhaseSeries out;
    out.times = result.times;
    out.records.resize(S);
    out.population.resize(S);

    std::vector<double> alpha(S);
    for (size_t k = 0; k < S; ++k) {
        Complex ov = snaps[k].states.col(level).dot(result.states[k]);
        double pop = std::norm(ov) / std::max(1e-300, std::pow(result.norms[k], 2));
        out.population[k] = pop;
        if (pop < options.population_floor)
            throw PreconditionError("extract_phases: tracking lost, level population " +
                                    std::to_string(pop) + " at t=" +
                                    std::to_string(result.times[k]));
        out.max_leaked = std::max(out.max_leaked, 1.0 - pop);
        alpha[k] = std::arg(ov);
    }
    out.adiabatic_trusted = out.max_leaked < options.leak_threshold;

    // nearest-branch unwrap with the per-sample guard
    for (size_t k = 1; k < S; ++k) {
        double d = alpha[k] - alpha[k - 1];
        d -= 2.0 * kPi * std::round(d / (2.0 * kPi));
        if (std::abs(d) >= options.unwrap_guard)
            throw PreconditionError("extract_phases: phase step " + std::to_string(d) +
                                    " exceeds the unwrap guard; store samples more densely");
        alpha[k] = alpha[k - 1] + d;
    }

    // cumulative Simpson for delta (trapezoid on the first interval)
    std::vector<double> delta(S, 0.0);
    for (size_t k = 1; k < S; ++k) {
        if (k >= 2 && std::abs((result.times[k] - result.times[k - 1]) -
                               (result.times[k - 1] - result.times[k - 2])) <
                          1e-9 * result.times[k]) {
            double h2 = result.times[k] - result.times[k - 2];
            delta[k] = delta[k - 2] -
                       h2 / 6.0 * (energies[k - 2] + 4.0 * energies[k - 1] + energies[k]) /
                           model.config.hbar;
        } else {
            double h = result.times[k] - result.times[k - 1];
            delta[k] = delta[k - 1] -
                       0.5 * (energies[k] + energies[k - 1]) * h / model.config.hbar;
        }
    }

    for (size_t k = 0; k < S; ++k) {
        PhaseRecord rec;
        rec.level = level;
        rec.dynamical = delta[k];
        rec.total = alpha[k] - alpha[0];
        rec.geometric = rec.total - rec.dynamical;
        std::vector<SpectrumSnapshot> pair = {snaps.front(), snaps[k]};
        rec.overlap = pair[0].states.col(level).dot(pair[1].states.col(level));
        rec.noncyclic_phase = rec.overlap * std::exp(Complex(0.0, rec.geometric));
        rec.validate(1e-9);
        out.records[k] = rec;
    }
    return out;
}

}  // namespace geomphase::dynamics
