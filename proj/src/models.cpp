#include "geomphase/models.hpp"

#include <cmath>
#include <map>

namespace geomphase::models {

ModelKind model_kind_from_string(const std::string& s) {
    static const std::map<std::string, ModelKind> table = {
        {"conventional-box", ModelKind::conventional_box},
        {"transformed", ModelKind::transformed},
        {"effective-plus", ModelKind::effective_plus},
        {"effective-minus", ModelKind::effective_minus},
        {"effective-mass", ModelKind::effective_mass},
    };
    auto it = table.find(s);
    if (it == table.end()) throw ConfigError("unknown model kind: " + s);
    return it->second;
}

std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::conventional_box: return "conventional-box";
        case ModelKind::transformed: return "transformed";
        case ModelKind::effective_plus: return "effective-plus";
        case ModelKind::effective_minus: return "effective-minus";
        case ModelKind::effective_mass: return "effective-mass";
    }
    return "?";
}

void BoxModel::validate() const {
    config.validate();
    if (basis_size < 4) throw PreconditionError("BoxModel: basis_size must be >= 4");
}

double box_energy(int n, double L, const PhysicalConfig& config) {
    if (n < 1) throw PreconditionError("box_energy: level must be >= 1");
    if (!(L > 0.0)) throw PreconditionError("box_energy: L must be positive");
    double k = config.hbar * kPi * n;
    return k * k / (2.0 * config.mass * L * L);
}

Complex dilation_element(int m, int n, const PhysicalConfig& config, double L) {
    if (m < 1 || n < 1) throw PreconditionError("dilation_element: levels must be >= 1");
    if (!(L > 0.0)) throw PreconditionError("dilation_element: L must be positive");
    if (m == n) return {0.0, 0.0};
    double mn = static_cast<double>(m) * n;
    double denom = static_cast<double>(m) * m - static_cast<double>(n) * n;
    return Complex(0.0, 2.0 * config.hbar * parity_sign(m + n) * mn / denom);
}

static Matrix dilation_matrix(int N, const PhysicalConfig& config, double L) {
    Matrix d = Matrix::Zero(N, N);
    for (int m = 1; m <= N; ++m)
        for (int n = 1; n <= N; ++n)
            if (m != n) d(m - 1, n - 1) = dilation_element(m, n, config, L);
    return d;
}

Coupling coupling_matrix(const BoxModel& model, double L) {
    model.validate();
    if (!(L > 0.0)) throw PreconditionError("coupling_matrix: L must be positive");
    const int N = model.basis_size;
    const double ml2 = model.config.mass * L * L;

    switch (model.kind) {
        case ModelKind::transformed: {
            Matrix h = -dilation_matrix(N, model.config, L) / ml2;
            return Coupling{OperatorMatrix::hermitian(std::move(h)),
                            [](const ParameterPoint& p) { return p.get("R"); }};
        }
        case ModelKind::effective_plus: {
            Matrix h = dilation_matrix(N, model.config, L) / ml2;
            double mass = model.config.mass;
            return Coupling{OperatorMatrix::hermitian(std::move(h)),
                            [mass](const ParameterPoint& p) {
                                double l = p.get("L");
                                return mass * l * l * p.get("R");
                            }};
        }
        case ModelKind::effective_minus: {
            Matrix h = -dilation_matrix(N, model.config, L) / ml2;
            double mass = model.config.mass;
            return Coupling{OperatorMatrix::hermitian(std::move(h)),
                            [mass](const ParameterPoint& p) {
                                double l = p.get("L");
                                return mass * l * l * p.get("R");
                            }};
        }
        case ModelKind::effective_mass:
        case ModelKind::conventional_box:
            throw PreconditionError("coupling_matrix: " + to_string(model.kind) +
                                    " has no perturbative coupling");
    }
    throw PreconditionError("coupling_matrix: unreachable");
}

static double sinc(double x) {
    if (std::abs(x) < 1e-8) return 1.0 - x * x / 6.0;
    return std::sin(x) / x;
}

double cross_box_overlap(int m, double L1, int n, double L2) {
    if (m < 1 || n < 1) throw PreconditionError("cross_box_overlap: levels must be >= 1");
    if (!(L1 > 0.0) || !(L2 > 0.0))
        throw PreconditionError("cross_box_overlap: lengths must be positive");
    double l = std::min(L1, L2);
    double a = m * kPi / L1;
    double b = n * kPi / L2;
    double integral = 0.5 * l * (sinc((a - b) * l) - sinc((a + b) * l));
    return 2.0 / std::sqrt(L1 * L2) * integral;
}

GridFunction conventional_eigenfunction(int n, double L, const Grid& grid,
                                        const PhysicalConfig&) {
    if (n < 1) throw PreconditionError("conventional_eigenfunction: level must be >= 1");
    if (!(L > 0.0)) throw PreconditionError("conventional_eigenfunction: L must be positive");
    if (grid.x0 > 0.0 || grid.x_max() < L)
        throw PreconditionError("conventional_eigenfunction: grid does not cover [0, L]");
    MeasureWeight mu{L};
    double amp = std::sqrt(2.0 / L);
    return GridFunction::sampled(grid, [&](double x) {
        return Complex(amp * std::sin(n * kPi * x / L) * mu(x), 0.0);
    });
}

static Matrix add_potential(Matrix h0, const BoxModel& model, const ParameterPoint& point) {
    if (!model.potential) return h0;
    const int N = model.basis_size;
    for (int m = 1; m <= N; ++m)
        for (int n = 1; n <= N; ++n) h0(m - 1, n - 1) += model.potential(m, n, point);
    return h0;
}

OperatorMatrix hamiltonian_at(const BoxModel& model, const ParameterPoint& point) {
    model.validate();
    const int N = model.basis_size;
    const double L = point.get("L");
    Matrix H = Matrix::Zero(N, N);
    for (int n = 1; n <= N; ++n) H(n - 1, n - 1) = box_energy(n, L, model.config);

    switch (model.kind) {
        case ModelKind::conventional_box:
        case ModelKind::effective_mass:
            break;
        case ModelKind::transformed: {
            // H0 scale uses L(t) in the fixed basis, coupling -R/(2ML^2)(xp+px)
            double R = point.get("R");
            H += -(R / (model.config.mass * L * L)) * dilation_matrix(N, model.config, L);
            break;
        }
        case ModelKind::effective_plus: {
            double R = point.get("R");
            H += R * dilation_matrix(N, model.config, L);
            break;
        }
        case ModelKind::effective_minus: {
            double R = point.get("R");
            H += -R * dilation_matrix(N, model.config, L);
            break;
        }
    }
    return OperatorMatrix::hermitian(add_potential(std::move(H), model, point));
}

OperatorMatrix fixed_frame_hamiltonian(const BoxModel& model, double L, double Ldot) {
    model.validate();
    const int N = model.basis_size;
    const double mass = model.config.mass;
    Matrix H = Matrix::Zero(N, N);
    for (int n = 1; n <= N; ++n) H(n - 1, n - 1) = box_energy(n, L, model.config);

    double coupling_scale = 0.0;
    switch (model.kind) {
        case ModelKind::conventional_box:
        case ModelKind::transformed:
            // H'' = L0^2 p^2/(2ML^2) - (Ldot/2L)(xp+px)
            coupling_scale = -(mass * L * Ldot) / (mass * L * L);
            break;
        case ModelKind::effective_minus:
            // dilation of H'_eff: L0^2 p^2/(2ML^2) - (Ldot/L)(xp+px)
            coupling_scale = -2.0 * (mass * L * Ldot) / (mass * L * L);
            break;
        case ModelKind::effective_plus:
        case ModelKind::effective_mass:
            // dilation of H_eff is L0^2 p^2/(2ML^2): diagonal
            coupling_scale = 0.0;
            break;
    }
    if (coupling_scale != 0.0) H += coupling_scale * dilation_matrix(N, model.config, L);
    ParameterPoint p{{"L", L}};
    return OperatorMatrix::hermitian(add_potential(std::move(H), model, p));
}

SpectrumSnapshot snapshot_at(const BoxModel& model, const ParameterPoint& point) {
    return SpectrumSnapshot::compute(hamiltonian_at(model, point), point);
}

std::vector<SpectrumSnapshot> snapshots_along_path(const BoxModel& model,
                                                   const ParameterPath& path, par::Mode mode) {
    const auto& samples = path.samples();
    std::vector<SpectrumSnapshot> out(samples.size());
    const std::ptrdiff_t count = static_cast<std::ptrdiff_t>(samples.size());
    if (mode == par::Mode::openmp) {
#pragma omp parallel for schedule(static) num_threads(par::max_threads())
        for (std::ptrdiff_t k = 0; k < count; ++k)
            out[k] = snapshot_at(model, samples[k].point);
    } else {
        for (std::ptrdiff_t k = 0; k < count; ++k)
            out[k] = snapshot_at(model, samples[k].point);
    }
    return out;
}

static bool fixed_basis(ModelKind kind) {
    return kind == ModelKind::transformed || kind == ModelKind::effective_mass;
}

Complex snapshot_overlap(const BoxModel& model, const SpectrumSnapshot& a,
                         const SpectrumSnapshot& b, int level) {
    if (level < 0 || level >= a.dim() || a.dim() != b.dim())
        throw PreconditionError("snapshot_overlap: bad level or dimension mismatch");
    if (fixed_basis(model.kind)) return a.states.col(level).dot(b.states.col(level));

    double la = a.point.get("L");
    double lb = b.point.get("L");
    if (la == lb) return a.states.col(level).dot(b.states.col(level));

    const int N = a.dim();
    Matrix x(N, N);
    for (int m = 1; m <= N; ++m)
        for (int n = 1; n <= N; ++n) x(m - 1, n - 1) = cross_box_overlap(m, la, n, lb);
    return a.states.col(level).dot(x * b.states.col(level));
}

std::function<Complex(const SpectrumSnapshot&, const SpectrumSnapshot&, int)> measure_overlap_fn(
    const BoxModel& model) {
    BoxModel copy = model;
    return [copy](const SpectrumSnapshot& a, const SpectrumSnapshot& b, int level) {
        return snapshot_overlap(copy, a, b, level);
    };
}

BasisFamily basis_family(const BoxModel& model) {
    model.validate();
    BasisFamily family;
    family.size = model.basis_size;
    if (fixed_basis(model.kind)) {
        family.parameter_independent = true;
        family.overlap = [](int m, const ParameterPoint&, int n, const ParameterPoint&) {
            return Complex(m == n ? 1.0 : 0.0, 0.0);
        };
        return family;
    }
    family.overlap = [](int m, const ParameterPoint& pa, int n, const ParameterPoint& pb) {
        return Complex(cross_box_overlap(m, pa.get("L"), n, pb.get("L")), 0.0);
    };
    return family;
}

ParameterPath rectangle_loop(double l_min, double l_max, double r_min, double r_max,
                             int samples_per_edge) {
    if (samples_per_edge < 1) throw PreconditionError("rectangle_loop: need samples_per_edge >= 1");
    std::vector<PathSample> samples;
    auto push = [&](double l, double r) {
        samples.push_back({static_cast<double>(samples.size()), ParameterPoint{{"L", l}, {"R", r}}});
    };
    const int S = samples_per_edge;
    for (int k = 0; k < S; ++k) push(l_min + (l_max - l_min) * k / S, r_min);
    for (int k = 0; k < S; ++k) push(l_max, r_min + (r_max - r_min) * k / S);
    for (int k = 0; k < S; ++k) push(l_max - (l_max - l_min) * k / S, r_max);
    for (int k = 0; k < S; ++k) push(l_min, r_max - (r_max - r_min) * k / S);
    push(l_min, r_min);
    return ParameterPath(std::move(samples), true);
}

ParameterPath line_path(const ParameterPoint& from, const ParameterPoint& to, int samples) {
    if (samples < 2) throw PreconditionError("line_path: need at least 2 samples");
    std::vector<PathSample> out;
    for (int k = 0; k < samples; ++k) {
        double s = static_cast<double>(k) / (samples - 1);
        ParameterPoint p = from;
        for (const auto& [name, v] : from.coords()) p.set(name, v + s * (to.get(name) - v));
        out.push_back({static_cast<double>(k), p});
    }
    return ParameterPath(std::move(out), false);
}

ParameterPath retraced_path(const ParameterPoint& from, const ParameterPoint& to, int samples) {
    ParameterPath fwd = line_path(from, to, samples);
    std::vector<PathSample> out = fwd.samples();
    for (int k = samples - 2; k >= 0; --k)
        out.push_back({static_cast<double>(2 * samples - 2 - k), fwd.samples()[k].point});
    return ParameterPath(std::move(out), true);
}

}  // namespace geomphase::models
