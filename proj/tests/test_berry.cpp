#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "geomphase/berry.hpp"
#include "geomphase/dynamics.hpp"
#include "geomphase/models.hpp"
#include "geomphase/rspt.hpp"
#include "oracles.hpp"

using namespace geomphase;
using models::BoxModel;
using models::ModelKind;

namespace {

BoxModel make_model(ModelKind kind, int n = 16) {
    return BoxModel{kind, PhysicalConfig{}, n, {}};
}

berry::ExpansionFactory expansion_factory(const BoxModel& model, int K) {
    BoxModel copy = model;
    return [copy, K](const ParameterPoint& p) {
        double L = p.get("L");
        SpectrumSnapshot base = SpectrumSnapshot::compute(
            OperatorMatrix{[&] {
                Matrix h0 = Matrix::Zero(copy.basis_size, copy.basis_size);
                for (int n = 1; n <= copy.basis_size; ++n)
                    h0(n - 1, n - 1) = models::box_energy(n, L, copy.config);
                return h0;
            }()},
            p);
        return rspt::extend_order(rspt::make_expansion(base, models::coupling_matrix(copy, L).h),
                                  K, par::Mode::serial);
    };
}

berry::ZerothFamily zeroth_family(const BoxModel& model, double step = 1e-5) {
    models::BasisFamily family = models::basis_family(model);
    return [family, step](const ParameterPoint& p, int dir) {
        std::string name = p.name(dir);
        if (name != "L") return Matrix::Zero(family.size, family.size).eval();
        return berry::connection_zeroth(family, p, name, step);
    };
}

berry::EpsRule eps_rule_of(const BoxModel& model) {
    models::Coupling cpl = models::coupling_matrix(model, 1.0);
    return cpl.eps_rule;
}

std::vector<SpectrumSnapshot> heff_loop_snapshots(const BoxModel& model, double l1, double l2,
                                                  double ra, double rb, int per_edge) {
    ParameterPath loop = models::rectangle_loop(l1, l2, ra, rb, per_edge);
    return models::snapshots_along_path(model, loop);
}

}  // namespace

TEST_CASE("connection zeroth: parameter-independent family is exactly zero") {
    BoxModel model = make_model(ModelKind::transformed, 10);
    models::BasisFamily family = models::basis_family(model);
    double defect = 1.0;
    Matrix a0 = berry::connection_zeroth(family, ParameterPoint{{"L", 1.0}, {"R", 0.0}}, "L",
                                         1e-5, &defect);
    CHECK(a0.cwiseAbs().maxCoeff() == 0.0);
    CHECK(defect == 0.0);
}

TEST_CASE("connection zeroth: moving sine basis matches the analytic table") {
    BoxModel model = make_model(ModelKind::effective_plus, 10);
    models::BasisFamily family = models::basis_family(model);
    for (double L : {1.0, 1.7}) {
        Matrix a0 = berry::connection_zeroth(family, ParameterPoint{{"L", L}}, "L", 1e-5);
        // A0_mn = 2 i m n (-1)^{m+n} / ((m^2-n^2) L) per unit dL
        for (int m = 1; m <= 10; ++m)
            for (int n = 1; n <= 10; ++n) {
                Complex expect =
                    m == n ? Complex(0.0, 0.0)
                           : Complex(0.0, 2.0 * m * n * parity_sign(m + n) /
                                              ((static_cast<double>(m) * m - n * n) * L));
                CHECK(std::abs(a0(m - 1, n - 1) - expect) < 1e-8);
            }
        CHECK(std::abs(a0(0, 1) - Complex(0.0, 4.0 / (3.0 * L))) < 1e-8);
        // diagonal of a real normalized family vanishes
        for (int n = 1; n <= 10; ++n) CHECK(std::abs(a0(n - 1, n - 1)) < 1e-10);
    }
}

TEST_CASE("connection zeroth: defect reports coarse steps") {
    BoxModel model = make_model(ModelKind::effective_plus, 8);
    models::BasisFamily family = models::basis_family(model);
    double coarse_defect = 0.0;
    berry::connection_zeroth(family, ParameterPoint{{"L", 1.0}}, "L", 0.3, &coarse_defect);
    double fine_defect = 0.0;
    berry::connection_zeroth(family, ParameterPoint{{"L", 1.0}}, "L", 1e-5, &fine_defect);
    CHECK(coarse_defect > 0.01);
    CHECK(fine_defect < 0.01);
}

TEST_CASE("perturbative connection: H'' has no order-eps term and df only") {
    BoxModel model = make_model(ModelKind::transformed, 12);
    ParameterPoint p{{"L", 1.0}, {"R", 0.02}};
    berry::ConnectionSeries series = berry::connection_perturbative(
        expansion_factory(model, 3), zeroth_family(model), eps_rule_of(model), p, 3);

    CHECK(series.per_order[0].cwiseAbs().maxCoeff() == 0.0);
    CHECK(series.per_order[1].cwiseAbs().maxCoeff() == 0.0);
    // C^l are parameter independent, so every non-exact term vanishes
    CHECK(series.per_order[2].cwiseAbs().maxCoeff() < 1e-12);
    CHECK(series.per_order[3].cwiseAbs().maxCoeff() < 1e-12);
    // f vanishes through second order by the normalization identity; the
    // first surviving piece is the imaginary j = 3 term
    CHECK(series.f_endpoint.cwiseAbs().maxCoeff() > 0.0);
    for (int n = 0; n < 12; ++n) CHECK(std::abs(series.f_endpoint[n].real()) < 1e-15);
}

TEST_CASE("perturbative connection: H_eff order-eps term reproduces the leading sum") {
    const int N = 24;
    BoxModel model = make_model(ModelKind::effective_plus, N);
    const double L = 1.1;
    const double R = 3e-3;
    ParameterPoint p{{"L", L}, {"R", R}};
    berry::ConnectionSeries series = berry::connection_perturbative(
        expansion_factory(model, 2), zeroth_family(model), eps_rule_of(model), p, 2);

    // A_n = S_n (-16 M R L / (pi^2 hbar)) per unit dL, S_n truncated at N
    berry::SnSum s1 = berry::leading_connection_sum(1, N);
    double expect = s1.value * (-16.0 * R * L / (kPi * kPi));
    int ldir = 0;
    CHECK(p.name(ldir) == "L");
    CHECK(series.per_order[1](0, ldir) == doctest::Approx(expect).epsilon(1e-8));
    // R direction carries no order-eps connection for this model
    CHECK(series.per_order[1](0, 1) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("leading connection sum") {
    berry::SnSum two = berry::leading_connection_sum(1, 2);
    CHECK(two.value == doctest::Approx(4.0 / 27.0).epsilon(1e-14));

    berry::SnSum big = berry::leading_connection_sum(1, 1000000);
    CHECK(big.tail_bound < 1e-9);
    CHECK(big.value == doctest::Approx(0.17436675835602825).epsilon(1e-11));

    // term antisymmetry under m <-> n
    auto term = [](int m, int n) {
        double mm = static_cast<double>(m) * m, nn = static_cast<double>(n) * n;
        return mm * nn / std::pow(mm - nn, 3);
    };
    for (int m = 1; m <= 6; ++m)
        for (int n = 1; n <= 6; ++n)
            if (m != n) CHECK(term(m, n) == doctest::Approx(-term(n, m)).epsilon(1e-14));

    CHECK_THROWS_AS(berry::leading_connection_sum(3, 3), PreconditionError);
}

TEST_CASE("discrete Berry phase: constant path vanishes") {
    BoxModel model = make_model(ModelKind::transformed, 8);
    ParameterPoint p{{"L", 1.0}, {"R", 0.01}};
    std::vector<SpectrumSnapshot> snaps(4, models::snapshot_at(model, p));
    CHECK(berry::discrete_berry_phase(snaps, 0, true) == 0.0);
    CHECK(berry::discrete_berry_phase(snaps, 0, false) == 0.0);
}

TEST_CASE("discrete Berry phase: gauge invariance under random rephasing") {
    BoxModel model = make_model(ModelKind::effective_plus, 12);
    auto snaps = heff_loop_snapshots(model, 1.0, 1.1, 8e-3, 0.0, 16);
    auto overlap = models::measure_overlap_fn(model);
    double gamma = berry::discrete_berry_phase(snaps, 0, true, overlap);

    std::mt19937 rng(2024);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
    auto rephased = snaps;
    for (auto& s : rephased)
        for (int c = 0; c < s.dim(); ++c)
            s.states.col(c) *= std::exp(Complex(0.0, phase(rng)));
    double gamma2 = berry::discrete_berry_phase(rephased, 0, true, overlap);
    CHECK(std::abs(gamma - gamma2) <= 1e-12);
}

TEST_CASE("discrete Berry phase guards against coarse paths") {
    // level ordering swaps between the two points: consecutive ground states
    // are orthogonal
    Matrix h1 = Matrix::Zero(4, 4);
    h1.diagonal() << 1.0, 2.0, 3.0, 4.0;
    Matrix h2 = Matrix::Zero(4, 4);
    h2.diagonal() << 4.0, 2.0, 3.0, 1.0;
    auto a = SpectrumSnapshot::compute(OperatorMatrix::hermitian(h1));
    auto b = SpectrumSnapshot::compute(OperatorMatrix::hermitian(h2));
    std::vector<SpectrumSnapshot> snaps = {a, b, a};
    CHECK_THROWS_AS(berry::discrete_berry_phase(snaps, 0, false), PreconditionError);
}

TEST_CASE("perturbative loop integral converges to the discrete oracle") {
    const int N = 20;
    BoxModel model = make_model(ModelKind::effective_plus, N);
    auto factory = expansion_factory(model, 2);
    auto zeroth = zeroth_family(model);
    auto eps = eps_rule_of(model);
    auto overlap = models::measure_overlap_fn(model);

    double l1 = 1.0, l2 = 1.06;
    std::vector<double> eps_max, rel_err;
    for (double ra : {4e-3, 2e-3, 1e-3}) {
        ParameterPath loop = models::rectangle_loop(l1, l2, ra, 0.0, 24);
        auto snaps = models::snapshots_along_path(model, loop);
        double oracle = berry::discrete_berry_phase(snaps, 0, true, overlap);
        berry::PerturbativePathIntegral pert = berry::connection_path_integral(
            factory, zeroth, eps, loop, 2, 0, {}, par::Mode::serial);
        double e = model.config.mass * l2 * l2 * ra;
        eps_max.push_back(e);
        rel_err.push_back(std::abs(pert.gamma_non_exact - oracle) / std::abs(oracle));
        // exact-form remainder drops out on closed loops
        CHECK(std::abs(pert.f_delta) < 1e-14);
    }
    // relative error of the K=2 series shrinks like eps (the eps^3 tail)
    CHECK(rel_err.back() < 2e-2);
    CHECK(rel_err.front() > rel_err.back());
}

TEST_CASE("loop integral of the exact-form remainder vanishes on closed loops") {
    const int N = 14;
    BoxModel model = make_model(ModelKind::effective_plus, N);
    auto factory = expansion_factory(model, 2);
    auto eps = eps_rule_of(model);

    // integrate d f numerically around a closed loop by central differences
    ParameterPath loop = models::rectangle_loop(1.0, 1.05, 2e-3, 0.0, 12);
    auto f_at = [&](const ParameterPoint& p) {
        berry::ConnectionSeries s = berry::connection_perturbative(
            factory, zeroth_family(model), eps, p, 2);
        return s.f_endpoint[0];
    };
    Complex acc = 0.0;
    const auto& samples = loop.samples();
    for (size_t k = 0; k + 1 < samples.size(); ++k) {
        for (int a = 0; a < samples[k].point.dims(); ++a) {
            double dr = samples[k + 1].point.value(a) - samples[k].point.value(a);
            if (dr == 0.0) continue;
            double s = 1e-6 * std::max(1.0, std::abs(samples[k].point.value(a)));
            ParameterPoint mid = samples[k].point;
            ParameterPoint plus = mid, minus = mid;
            plus.set(mid.name(a), mid.value(a) + s);
            minus.set(mid.name(a), mid.value(a) - s);
            Complex df = (f_at(plus) - f_at(minus)) / (2.0 * s);
            acc += Complex(0.0, 1.0) * df * dr;
        }
    }
    CHECK(std::abs(acc) < 1e-10);
}

TEST_CASE("reality defect: boundary-respecting box modes") {
    Grid g = Grid::over(0.0, 1.3, 32768);
    for (int n : {1, 2}) {
        auto family = [&, n](double t) {
            double L = 1.013 + (t - 1.0);
            return GridFunction::sampled(g, [&](double x) {
                return Complex(std::sqrt(2.0 / L) * std::sin(n * kPi * x / L), 0.0);
            });
        };
        auto wall = [](double t) { return 1.013 + (t - 1.0); };
        berry::RealityDefect d = berry::reality_defect(family, wall, 1.0, 1e-6);
        CHECK(std::abs(d.imag_part) <= 1e-8);
        CHECK(std::abs(d.boundary_density) <= 1e-8);
    }
}

TEST_CASE("reality defect: truncated Gaussian reproduces the boundary density") {
    Grid g = Grid::over(0.0, 1.3, kDefaultGridPoints);
    auto family = [&](double t) {
        double L = 1.0 + (t - 1.0);
        return GridFunction::sampled(g, [&](double x) {
            double c = 0.45 * L;
            return Complex(std::exp(-(x - c) * (x - c) / (2.0 * 0.28 * 0.28)), 0.0);
        });
    };
    auto wall = [](double t) { return 1.0 + (t - 1.0); };  // Ldot = 1
    berry::RealityDefect d = berry::reality_defect(family, wall, 1.0, 1e-6);
    CHECK(d.boundary_density < 0.0);
    CHECK(std::abs(d.imag_part - d.boundary_density) <= 0.01 * std::abs(d.boundary_density));
}

TEST_CASE("reality defect: static wall") {
    Grid g = Grid::over(0.0, 1.3, kDefaultGridPoints);
    auto family = [&](double) {
        return GridFunction::sampled(g, [&](double x) {
            return Complex(std::exp(-(x - 0.4) * (x - 0.4) / 0.1), 0.0);
        });
    };
    auto wall = [](double) { return 1.0; };
    berry::RealityDefect d = berry::reality_defect(family, wall, 1.0, 1e-6);
    CHECK(std::abs(d.imag_part) <= 1e-10);
    CHECK(d.boundary_density == 0.0);
}

TEST_CASE("noncyclic phase") {
    BoxModel model = make_model(ModelKind::effective_plus, 10);
    ParameterPoint p0{{"L", 1.0}, {"R", 1e-3}};
    std::vector<SpectrumSnapshot> trivial = {models::snapshot_at(model, p0)};
    trivial.push_back(trivial.front());
    CHECK(std::abs(berry::noncyclic_phase(trivial, 0, 0.0) - Complex(1.0, 0.0)) < 1e-14);

    auto snaps = heff_loop_snapshots(model, 1.0, 1.08, 5e-3, 0.0, 12);
    auto overlap = models::measure_overlap_fn(model);
    double gamma = berry::discrete_berry_phase(snaps, 0, true, overlap);
    Complex phi = berry::noncyclic_phase(snaps, 0, gamma, overlap);
    CHECK(std::abs(std::abs(phi) - 1.0) < 1e-10);  // closed path: |Phi| = 1

    // gauge transform with a random smooth chi leaves Phi unchanged (open path)
    std::vector<SpectrumSnapshot> open(snaps.begin(), snaps.begin() + 20);
    double g_open = berry::discrete_berry_phase(open, 0, false, overlap);
    Complex phi_open = berry::noncyclic_phase(open, 0, g_open, overlap);
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> un(-0.05, 0.05);
    double chi = 0.0;
    auto gauged = open;
    for (auto& s : gauged) {
        chi += un(rng);  // smooth: small increments
        s.states.col(0) *= std::exp(Complex(0.0, chi));
    }
    double g2 = berry::discrete_berry_phase(gauged, 0, false, overlap);
    Complex phi2 = berry::noncyclic_phase(gauged, 0, g2, overlap);
    CHECK(std::abs(phi2 - phi_open) <= 1e-10);
}

TEST_CASE("order-1 contribution is exactly zero whenever the zeroth tables vanish") {
    BoxModel model = make_model(ModelKind::transformed, 10);
    ParameterPoint p{{"L", 1.3}, {"R", 0.05}};
    berry::ConnectionSeries s = berry::connection_perturbative(
        expansion_factory(model, 3), zeroth_family(model), eps_rule_of(model), p, 3);
    CHECK(s.per_order[1].cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("unsupported connection order") {
    BoxModel model = make_model(ModelKind::transformed, 8);
    ParameterPoint p{{"L", 1.0}, {"R", 0.01}};
    CHECK_THROWS_AS(berry::connection_perturbative(expansion_factory(model, 4),
                                                   zeroth_family(model), eps_rule_of(model), p, 4),
                    PreconditionError);
}
