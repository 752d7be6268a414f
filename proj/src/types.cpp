#include "geomphase/types.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace geomphase {

void PhysicalConfig::validate() const {
    auto ok = [](double v) { return std::isfinite(v) && v > 0.0; };
    if (!ok(hbar) || !ok(mass) || !ok(l0))
        throw PreconditionError("PhysicalConfig: hbar, mass, l0 must be positive and finite");
}

ParameterPoint::ParameterPoint(std::initializer_list<std::pair<std::string, double>> init)
    : coords_(init) {
    validate();
}

void ParameterPoint::validate() const {
    for (size_t i = 0; i < coords_.size(); ++i) {
        for (size_t j = i + 1; j < coords_.size(); ++j)
            if (coords_[i].first == coords_[j].first)
                throw PreconditionError("ParameterPoint: duplicate coordinate " + coords_[i].first);
        if (!std::isfinite(coords_[i].second))
            throw PreconditionError("ParameterPoint: non-finite coordinate " + coords_[i].first);
        if (coords_[i].first == "L" && !(coords_[i].second > 0.0))
            throw PreconditionError("ParameterPoint: L must be positive");
    }
}

bool ParameterPoint::has(const std::string& name) const {
    for (const auto& [k, v] : coords_)
        if (k == name) return true;
    return false;
}

double ParameterPoint::get(const std::string& name) const {
    for (const auto& [k, v] : coords_)
        if (k == name) return v;
    throw PreconditionError("ParameterPoint: missing coordinate " + name);
}

double ParameterPoint::get_or(const std::string& name, double fallback) const {
    for (const auto& [k, v] : coords_)
        if (k == name) return v;
    return fallback;
}

void ParameterPoint::set(const std::string& name, double value) {
    for (auto& [k, v] : coords_) {
        if (k == name) {
            v = value;
            validate();
            return;
        }
    }
    coords_.emplace_back(name, value);
    validate();
}

bool ParameterPoint::close_to(const ParameterPoint& other, double tol) const {
    if (coords_.size() != other.coords_.size()) return false;
    for (const auto& [k, v] : coords_) {
        if (!other.has(k)) return false;
        double w = other.get(k);
        if (std::abs(v - w) > tol * std::max(1.0, std::max(std::abs(v), std::abs(w))))
            return false;
    }
    return true;
}

ParameterPath::ParameterPath(std::vector<PathSample> samples, bool closed)
    : samples_(std::move(samples)), closed_(closed) {
    if (samples_.size() < 2) throw PreconditionError("ParameterPath: need at least 2 samples");
    for (size_t k = 1; k < samples_.size(); ++k)
        if (!(samples_[k].time > samples_[k - 1].time))
            throw PreconditionError("ParameterPath: times must be strictly increasing");
    if (closed_ && !samples_.front().point.close_to(samples_.back().point))
        throw PreconditionError("ParameterPath: closed path endpoints do not coincide");
}

OperatorMatrix OperatorMatrix::hermitian(Matrix m, double tol_rel) {
    if (m.rows() != m.cols()) throw PreconditionError("OperatorMatrix: matrix must be square");
    OperatorMatrix op{std::move(m)};
    double scale = op.entries.cwiseAbs().maxCoeff();
    if (scale > 0.0 && op.hermiticity_defect() > tol_rel * scale)
        throw PreconditionError("OperatorMatrix: matrix is not Hermitian within tolerance");
    return op;
}

double OperatorMatrix::hermiticity_defect() const {
    return (entries - entries.adjoint()).cwiseAbs().maxCoeff();
}

static void gauge_fix_column(Matrix& states, int n, const Vector& reference) {
    Complex z = reference.dot(states.col(n));  // conj(reference) . column
    double az = std::abs(z);
    if (az < 1e-300) {
        // reference orthogonal to the state; fall back to the largest entry
        int imax = 0;
        states.col(n).cwiseAbs().maxCoeff(&imax);
        z = states(imax, n);
        az = std::abs(z);
        if (az < 1e-300) return;
    }
    if (z.imag() == 0.0 && z.real() > 0.0) return;  // already fixed, keep bits
    states.col(n) *= std::conj(z) / az;
}

SpectrumSnapshot SpectrumSnapshot::compute(const OperatorMatrix& H, ParameterPoint where,
                                           double min_gap_rel) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(H.entries);
    if (solver.info() != Eigen::Success)
        throw NumericError("SpectrumSnapshot: eigensolver failed to converge");

    SpectrumSnapshot snap;
    snap.energies = solver.eigenvalues();
    snap.states = solver.eigenvectors();
    snap.point = std::move(where);

    const int n = snap.dim();
    if (n >= 2) {
        double span = snap.energies[n - 1] - snap.energies[0];
        double guard = min_gap_rel * std::max(span, 1e-300);
        for (int k = 0; k + 1 < n; ++k) {
            double gap = snap.energies[k + 1] - snap.energies[k];
            if (gap < guard) throw DegeneracyError(k + 1, k + 2, gap);
        }
    }
    for (int k = 0; k < n; ++k) {
        Vector ref = Vector::Zero(n);
        ref[k] = 1.0;
        gauge_fix_column(snap.states, k, ref);
    }
    return snap;
}

void SpectrumSnapshot::fix_gauge_to(const Matrix& reference) {
    for (int k = 0; k < dim(); ++k) gauge_fix_column(states, k, reference.col(k));
}

double SpectrumSnapshot::residual(const OperatorMatrix& H) const {
    double hnorm = H.entries.norm();
    double worst = 0.0;
    for (int k = 0; k < dim(); ++k) {
        double r = (H.entries * states.col(k) - energies[k] * states.col(k)).norm();
        worst = std::max(worst, r);
    }
    return hnorm > 0.0 ? worst / hnorm : worst;
}

double SpectrumSnapshot::min_gap() const {
    double g = std::numeric_limits<double>::infinity();
    for (int k = 0; k + 1 < dim(); ++k) g = std::min(g, energies[k + 1] - energies[k]);
    return g;
}

double SpectrumSnapshot::max_orthonormality_defect() const {
    Matrix gram = states.adjoint() * states;
    gram -= Matrix::Identity(dim(), dim());
    return gram.cwiseAbs().maxCoeff();
}

void PhaseRecord::validate(double tol) const {
    double scale = std::max({1.0, std::abs(dynamical), std::abs(geometric)});
    if (!std::isfinite(dynamical) || !std::isfinite(geometric))
        throw PreconditionError("PhaseRecord: phases must be finite");
    if (std::abs(total - (dynamical + geometric)) > tol * scale)
        throw PreconditionError("PhaseRecord: alpha != delta + gamma");
    if (std::abs(std::abs(noncyclic_phase) - std::abs(overlap)) > tol * std::max(1.0, std::abs(overlap)))
        throw PreconditionError("PhaseRecord: |Phi| != |W|");
}

PhaseRecord assemble_phase_record(int level, double alpha, const std::vector<double>& times,
                                  const std::vector<double>& energies,
                                  const PhysicalConfig& config, double gamma, Complex w,
                                  double consistency_tol) {
    config.validate();
    if (times.size() != energies.size())
        throw PreconditionError("assemble_phase_record: times/energies size mismatch");
    for (double e : energies)
        if (!std::isfinite(e)) throw PreconditionError("assemble_phase_record: non-finite energy");
    for (size_t k = 1; k < times.size(); ++k)
        if (!(times[k] > times[k - 1]))
            throw PreconditionError("assemble_phase_record: times must increase");

    double integral = 0.0;
    for (size_t k = 1; k < times.size(); ++k)
        integral += 0.5 * (energies[k] + energies[k - 1]) * (times[k] - times[k - 1]);

    PhaseRecord rec;
    rec.level = level;
    rec.dynamical = -integral / config.hbar;
    rec.geometric = gamma;
    rec.total = rec.dynamical + rec.geometric;
    rec.overlap = w;
    rec.noncyclic_phase = w * std::exp(Complex(0.0, gamma));

    double scale = std::max({1.0, std::abs(alpha), std::abs(rec.total)});
    if (std::abs(alpha - rec.total) > consistency_tol * scale)
        throw PreconditionError("assemble_phase_record: alpha inconsistent with delta + gamma "
                                "(mixed phase conventions?)");
    rec.validate();
    return rec;
}

}  // namespace geomphase
