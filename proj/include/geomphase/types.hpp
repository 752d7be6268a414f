#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "geomphase/common.hpp"

namespace geomphase {

inline constexpr double kHermitianTolRel = 1e-12;
inline constexpr double kDefaultMinGapRel = 1e-8;

/// Unit constants shared by every model.
struct PhysicalConfig {
    double hbar = 1.0;
    double mass = 1.0;
    double l0 = 1.0;

    void validate() const;
};

/// Ordered set of named real coordinates of the parameter manifold.
class ParameterPoint {
public:
    ParameterPoint() = default;
    ParameterPoint(std::initializer_list<std::pair<std::string, double>> init);

    bool has(const std::string& name) const;
    double get(const std::string& name) const;
    double get_or(const std::string& name, double fallback) const;
    void set(const std::string& name, double value);

    const std::vector<std::pair<std::string, double>>& coords() const { return coords_; }
    int dims() const { return static_cast<int>(coords_.size()); }
    const std::string& name(int a) const { return coords_[a].first; }
    double value(int a) const { return coords_[a].second; }

    bool close_to(const ParameterPoint& other, double tol = 1e-9) const;

private:
    void validate() const;
    std::vector<std::pair<std::string, double>> coords_;
};

struct PathSample {
    double time;
    ParameterPoint point;
};

/// Time-ordered samples of a path in parameter space.
class ParameterPath {
public:
    ParameterPath(std::vector<PathSample> samples, bool closed);

    const std::vector<PathSample>& samples() const { return samples_; }
    bool closed() const { return closed_; }
    int size() const { return static_cast<int>(samples_.size()); }

private:
    std::vector<PathSample> samples_;
    bool closed_;
};

/// Hermitian operator in a truncated orthonormal basis.
struct OperatorMatrix {
    Matrix entries;

    int dim() const { return static_cast<int>(entries.rows()); }

    /// Validates Hermiticity: max|H - H^dagger| <= tol * max|H|.
    static OperatorMatrix hermitian(Matrix m, double tol_rel = kHermitianTolRel);
    double hermiticity_defect() const;
};

/// Eigen-decomposition with ascending energies and the project gauge
/// convention: each column's overlap with its reference vector is real and
/// nonnegative (reference defaults to the unperturbed basis vector e_n).
struct SpectrumSnapshot {
    RealVector energies;
    Matrix states;
    ParameterPoint point;

    int dim() const { return static_cast<int>(energies.size()); }

    static SpectrumSnapshot compute(const OperatorMatrix& H, ParameterPoint where = {},
                                    double min_gap_rel = kDefaultMinGapRel);

    /// Re-gauges column n against reference.col(n); idempotent.
    void fix_gauge_to(const Matrix& reference);

    /// max_n ||H v_n - E_n v_n|| / ||H||
    double residual(const OperatorMatrix& H) const;
    double min_gap() const;
    double max_orthonormality_defect() const;
};

/// Per-level phases along a path or evolution.
struct PhaseRecord {
    int level = 0;
    double dynamical = 0.0;   // delta_n
    double geometric = 0.0;   // gamma_n
    double total = 0.0;       // alpha_n = delta_n + gamma_n
    Complex overlap{1.0, 0.0};         // W_n
    Complex noncyclic_phase{1.0, 0.0}; // Phi_n = W_n exp(i gamma_n)

    void validate(double tol = 1e-12) const;
};

/// delta_n = -(1/hbar) int E dt by trapezoid; Phi = W exp(i gamma); checks
/// alpha == delta + gamma (throws PreconditionError when the caller mixed
/// conventions).
PhaseRecord assemble_phase_record(int level, double alpha, const std::vector<double>& times,
                                  const std::vector<double>& energies,
                                  const PhysicalConfig& config, double gamma, Complex w,
                                  double consistency_tol = 1e-9);

}  // namespace geomphase
