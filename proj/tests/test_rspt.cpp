#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "geomphase/models.hpp"
#include "geomphase/rspt.hpp"
#include "oracles.hpp"

using namespace geomphase;
using models::BoxModel;
using models::ModelKind;

namespace {

// two-level system with E0 = (0, 1), h = [[0,1],[1,0]]
rspt::PerturbationExpansion two_level(int K) {
    Matrix h0 = Matrix::Zero(2, 2);
    h0(1, 1) = 1.0;
    Matrix h(2, 2);
    h << 0.0, 1.0, 1.0, 0.0;
    SpectrumSnapshot base = SpectrumSnapshot::compute(OperatorMatrix::hermitian(h0));
    return rspt::extend_order(rspt::make_expansion(base, OperatorMatrix::hermitian(h)), K);
}

double two_level_exact(int n, double eps) {
    double s = std::sqrt(1.0 + 4.0 * eps * eps);
    return n == 0 ? 0.5 * (1.0 - s) : 0.5 * (1.0 + s);
}

rspt::PerturbationExpansion box_expansion(ModelKind kind, int N, int K, double L) {
    BoxModel model{kind, PhysicalConfig{}, N, {}};
    ParameterPoint p = kind == ModelKind::transformed ? ParameterPoint{{"L", L}, {"R", 0.0}}
                                                      : ParameterPoint{{"L", L}, {"R", 0.0}};
    SpectrumSnapshot base = SpectrumSnapshot::compute(models::hamiltonian_at(model, p), p);
    return rspt::extend_order(rspt::make_expansion(base, models::coupling_matrix(model, L).h), K);
}

Matrix box_hamiltonian(ModelKind kind, int N, double L, double eps) {
    BoxModel model{kind, PhysicalConfig{}, N, {}};
    Matrix h0 = Matrix::Zero(N, N);
    for (int n = 1; n <= N; ++n) h0(n - 1, n - 1) = models::box_energy(n, L, model.config);
    return h0 + eps * models::coupling_matrix(model, L).h.entries;
}

}  // namespace

TEST_CASE("first order: transformed box values") {
    BoxModel model{ModelKind::transformed, PhysicalConfig{}, 8, {}};
    ParameterPoint p{{"L", 1.0}, {"R", 0.0}};
    SpectrumSnapshot base = SpectrumSnapshot::compute(models::hamiltonian_at(model, p), p);
    auto [e1, c1] = rspt::first_order(base, models::coupling_matrix(model, 1.0).h);
    for (int n = 0; n < 8; ++n) CHECK(std::abs(e1[n]) < 1e-12);
    CHECK(std::abs(c1(1, 0) - Complex(0.0, -8.0 / (9.0 * kPi * kPi))) < 1e-10);
    for (int n = 0; n < 8; ++n) CHECK(c1(n, n) == Complex(0.0, 0.0));
}

TEST_CASE("first order: diagonal coupling does not mix") {
    Matrix h0 = Matrix::Zero(3, 3);
    h0.diagonal() << 0.0, 1.0, 3.0;
    Matrix h = Matrix::Zero(3, 3);
    h.diagonal() << 0.5, -0.25, 2.0;
    SpectrumSnapshot base = SpectrumSnapshot::compute(OperatorMatrix::hermitian(h0));
    auto [e1, c1] = rspt::first_order(base, OperatorMatrix::hermitian(h));
    CHECK(e1[0] == doctest::Approx(0.5));
    CHECK(e1[1] == doctest::Approx(-0.25));
    CHECK(e1[2] == doctest::Approx(2.0));
    CHECK(c1.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("first order rejects degenerate pairs") {
    Matrix h0 = Matrix::Zero(2, 2);
    Matrix h(2, 2);
    h << 0.0, 1.0, 1.0, 0.0;
    CHECK_THROWS_AS(SpectrumSnapshot::compute(OperatorMatrix::hermitian(h0)), DegeneracyError);
}

TEST_CASE("two-level second order energies are -1 and +1") {
    auto exp = two_level(2);
    CHECK(exp.energy(2, 0) == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(exp.energy(2, 1) == doctest::Approx(+1.0).epsilon(1e-12));

    // brute-force oracle: dense eigensolve + polynomial fit in eps
    std::vector<double> es, y0, y1;
    for (double eps = -0.05; eps <= 0.051; eps += 0.01) {
        Matrix h(2, 2);
        h << 0.0, eps, eps, 1.0;
        RealVector w = oracles::dense_eigenvalues(h);
        es.push_back(eps);
        y0.push_back(w[0]);
        y1.push_back(w[1]);
    }
    RealVector fit0 = oracles::polyfit(es, y0, 6);
    RealVector fit1 = oracles::polyfit(es, y1, 6);
    CHECK(fit0[2] == doctest::Approx(-1.0).epsilon(1e-6));
    CHECK(fit1[2] == doctest::Approx(+1.0).epsilon(1e-6));
}

TEST_CASE("K = 0 leaves the expansion at zeroth order") {
    auto exp = two_level(0);
    CHECK(exp.order() == 0);
    CHECK((exp.vector_coeffs[0] - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("effective model second order matches a finite-difference oracle") {
    const int N = 12;
    auto exp = box_expansion(ModelKind::effective_plus, N, 2, 1.0);
    // Richardson second derivative of the dense eigenvalue at eps -> 0
    for (int n : {0, 1, 2}) {
        auto e2_fd = [&](double eps) {
            RealVector wp = oracles::dense_eigenvalues(box_hamiltonian(ModelKind::effective_plus, N, 1.0, eps));
            RealVector wm = oracles::dense_eigenvalues(box_hamiltonian(ModelKind::effective_plus, N, 1.0, -eps));
            RealVector w0 = oracles::dense_eigenvalues(box_hamiltonian(ModelKind::effective_plus, N, 1.0, 0.0));
            return (wp[n] + wm[n] - 2.0 * w0[n]) / (2.0 * eps * eps);
        };
        double coarse = e2_fd(2e-3);
        double fine = e2_fd(1e-3);
        double oracle = (4.0 * fine - coarse) / 3.0;
        CHECK(exp.energy(2, n) == doctest::Approx(oracle).epsilon(1e-6));
    }
}

TEST_CASE("assemble eigenvector: eps = 0 gives the basis vector") {
    auto exp = two_level(4);
    Vector v = rspt::assemble_eigenvector(exp, 1, 0.0);
    CHECK(std::abs(v[1] - Complex(1.0, 0.0)) == 0.0);
    CHECK(std::abs(v[0]) == 0.0);
}

TEST_CASE("two-level eigenvector at eps = 0.1 against the dense oracle") {
    const double eps = 0.1;
    Matrix h(2, 2);
    h << 0.0, eps, eps, 1.0;
    Vector oracle = oracles::dense_eigenvector(h, 0, 0);

    // oracle-computed truncation errors: 1.141e-6 at K = 6, 1.44e-7 at K = 7
    Vector v6 = rspt::assemble_eigenvector(two_level(6), 0, eps);
    v6 /= v6.norm();
    CHECK((v6 - oracle).norm() < 1.2e-6);
    Vector v7 = rspt::assemble_eigenvector(two_level(7), 0, eps);
    v7 /= v7.norm();
    CHECK((v7 - oracle).norm() < 5e-7);
}

TEST_CASE("transformed model residual scales as eps^4 for K = 3") {
    auto exp = box_expansion(ModelKind::transformed, 20, 3, 1.0);
    std::vector<double> es = {0.02, 0.04, 0.08};
    std::vector<double> rs;
    for (double e : es) rs.push_back(rspt::residual_norm(exp, 0, e));
    double slope = oracles::loglog_slope(es, rs);
    CHECK(slope == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("series eigenvalue: eps = 0 and two-level at eps = 0.2, K = 8") {
    auto exp = two_level(8);
    CHECK(rspt::series_eigenvalue(exp, 0, 0.0) == 0.0);
    CHECK(rspt::series_eigenvalue(exp, 1, 0.0) == 1.0);
    CHECK(std::abs(rspt::series_eigenvalue(exp, 0, 0.2) - two_level_exact(0, 0.2)) < 1e-5);
    CHECK(std::abs(rspt::series_eigenvalue(exp, 1, 0.2) - two_level_exact(1, 0.2)) < 1e-5);
}

TEST_CASE("effective model eigenvalue series is even in eps") {
    auto exp = box_expansion(ModelKind::effective_plus, 16, 3, 1.0);
    for (int n = 0; n < 16; ++n) {
        CHECK(std::abs(exp.energy(1, n)) < 1e-12);
        CHECK(std::abs(exp.energy(3, n)) < 1e-12 * std::max(1.0, std::abs(exp.energy(2, n))));
    }
    // oracle spectra symmetric under eps -> -eps
    RealVector wp = oracles::dense_eigenvalues(box_hamiltonian(ModelKind::effective_plus, 16, 1.0, 0.05));
    RealVector wm = oracles::dense_eigenvalues(box_hamiltonian(ModelKind::effective_plus, 16, 1.0, -0.05));
    CHECK((wp - wm).cwiseAbs().maxCoeff() < 1e-12 * wp.cwiseAbs().maxCoeff());
}

TEST_CASE("residual: zero at eps = 0, decreasing in K, slope K+1") {
    CHECK(rspt::residual_norm(two_level(3), 0, 0.0) <= 1e-12);

    const double eps = 0.05;
    double prev = 1e300;
    for (int K = 1; K <= 5; ++K) {
        double r = rspt::residual_norm(two_level(K), 0, eps);
        CHECK(r < prev);
        prev = r;
    }

    std::vector<double> es;
    for (double e = 1e-3; e <= 0.1 * 1.0001; e *= std::sqrt(10.0)) es.push_back(e);
    for (int K = 1; K <= 3; ++K) {
        auto exp = two_level(K);
        std::vector<double> rs;
        for (double e : es) rs.push_back(rspt::residual_norm(exp, 0, e));
        double slope = oracles::loglog_slope(es, rs);
        CHECK(std::abs(slope - (K + 1)) <= 0.15);
    }
}

TEST_CASE("expansion invariants") {
    auto exp = box_expansion(ModelKind::transformed, 14, 4, 1.0);
    const int N = exp.dim();

    // C^0 = identity
    CHECK((exp.vector_coeffs[0] - Matrix::Identity(N, N)).cwiseAbs().maxCoeff() == 0.0);

    // C^1 anti-Hermitian, Re C^1_nn = 0, Im C^l_nn = 0
    const Matrix& c1 = exp.vector_coeffs[1];
    CHECK((c1 + c1.adjoint()).cwiseAbs().maxCoeff() < 1e-14);
    for (int l = 1; l <= 4; ++l)
        for (int n = 0; n < N; ++n) CHECK(exp.coeff(l, n, n).imag() == 0.0);

    // normalization identity for the diagonal coefficients
    for (int j = 2; j <= 4; ++j)
        for (int n = 0; n < N; ++n) {
            Complex rhs = 0.0;
            for (int l = 1; l <= j - 1; ++l)
                for (int r = 0; r < N; ++r)
                    rhs += exp.coeff(l, r, n) * std::conj(exp.coeff(j - l, r, n));
            CHECK(std::abs(exp.coeff(j, n, n).real() - (-0.5 * rhs.real())) < 1e-12);
        }

    // E^(1) equals the diagonal coupling element; all E real (diagnostic)
    for (int n = 0; n < N; ++n)
        CHECK(exp.energy(1, n) == doctest::Approx(exp.coupling.entries(n, n).real()).epsilon(1e-14));
    CHECK(exp.max_energy_imag < 1e-12);
}

TEST_CASE("gauge consistency and norm deficiency") {
    auto exp = box_expansion(ModelKind::effective_plus, 16, 3, 1.0);
    const double eps = 0.05;
    for (int n : {0, 1, 3}) {
        Vector v = rspt::assemble_eigenvector(exp, n, eps);
        CHECK(std::abs(v[n].imag()) <= 1e-12 * v.norm());
        double deficiency = std::abs(v.squaredNorm() - 1.0);
        CHECK(deficiency <= 10.0 * std::pow(eps, exp.order() + 1));
    }
}

TEST_CASE("order scaling of the eigenvalue error is bounded") {
    auto exp = box_expansion(ModelKind::transformed, 16, 2, 1.0);
    std::vector<double> ratios;
    for (double e : {0.01, 0.03, 0.1}) {
        RealVector w = oracles::dense_eigenvalues(box_hamiltonian(ModelKind::transformed, 16, 1.0, e));
        double err = std::abs(rspt::series_eigenvalue(exp, 0, e) - w[0]);
        ratios.push_back(err / std::pow(e, 3));
    }
    for (double r : ratios) CHECK(r < 1.0);
}

TEST_CASE("convergence ratio diagnostic") {
    auto exp = two_level(4);
    CHECK(rspt::convergence_ratio(exp, 0, 0.1) < 0.5);
    CHECK(rspt::convergence_ratio(exp, 0, 2.0) > 0.5);
}

TEST_CASE("coefficient overflow raises a numeric-range error") {
    Matrix h0 = Matrix::Zero(2, 2);
    h0(1, 1) = 1e-160;  // tiny gap squeaks past the relative guard scale
    Matrix h(2, 2);
    h << 0.0, 1e160, 1e160, 0.0;
    SpectrumSnapshot base;
    base.energies = RealVector(2);
    base.energies << 0.0, 1e-160;
    base.states = Matrix::Identity(2, 2);
    rspt::PerturbationExpansion exp;
    exp.base = base;
    exp.coupling = OperatorMatrix{h};
    exp.energy_coeffs.push_back(base.energies);
    exp.vector_coeffs.push_back(Matrix::Identity(2, 2));
    CHECK_THROWS_AS(rspt::extend_order(std::move(exp), 4), NumericError);
}
