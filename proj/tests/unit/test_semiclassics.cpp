#include "doctest.h"

#include <cmath>
#include <numbers>

#include "trotter/semiclassics.hpp"
#include "trotter/spectral_toolkit.hpp"

using namespace trotter;
using doctest::Approx;

namespace {
constexpr double pi = std::numbers::pi;

ChainSpec symmetric_well() { return build_chain(50, 1.0, PotentialFamily::experimental(1.25, 8, 0, 0)); }

Well left_well() {
    Well w;
    w.x_bottom = 1.0;
    w.boundary = Boundary::hard_wall_left;
    return w;
}
}  // namespace

TEST_CASE("endpoint singular quadrature") {
    CHECK(integrate_endpoint_singular([](double x) { return 1.0 / std::sqrt(x * (1.0 - x)); }, 0.0, 1.0) ==
          Approx(pi).epsilon(1e-9));
    CHECK(integrate_endpoint_singular([](double x) { return std::sqrt(4.0 - x * x); }, -2.0, 2.0) ==
          Approx(2.0 * pi).epsilon(1e-10));
    CHECK(integrate_endpoint_singular([](double x) { return x * x; }, 0.0, 3.0) == Approx(9.0).epsilon(1e-12));
}

TEST_CASE("kinetic energies") {
    const ChainSpec spec = symmetric_well();
    const double dt = 0.4;
    const auto bare = PhaseSpaceModel::bare(spec);
    const auto corr = PhaseSpaceModel::corrected(spec, dt);
    const auto large = PhaseSpaceModel::large_step(spec, dt);
    for (double p : {0.0, 0.4, 1.3, 2.9}) {
        CHECK(bare.kinetic(p) == Approx(-std::cos(p)));
        CHECK(corr.kinetic(p) - bare.kinetic(p) == Approx(correction_dH(0.0, p, dt)).epsilon(1e-12));
        CHECK(large.kinetic(p) == Approx(-(2.0 / dt) * std::asin(std::sin(dt / 2) * std::cos(p))));
        // the large-step kinetic term agrees with the corrected one to O(dt^4)
        CHECK(std::abs(large.kinetic(p) - corr.kinetic(p)) < 2e-3 * std::pow(dt, 4) + 1e-12);
        const double e = 1e-6;
        for (const auto* m : {&bare, &corr, &large})
            CHECK(m->velocity(p) == Approx((m->kinetic(p + e) - m->kinetic(p - e)) / (2 * e)).epsilon(1e-6));
    }
    CHECK(correction_dH(3.0, 0.7, 0.5) == Approx(0.25 / 24 * std::cos(0.7) * std::pow(std::sin(0.7), 2)));
    CHECK_THROWS_AS(PhaseSpaceModel::corrected(spec, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(PhaseSpaceModel::large_step(spec, 7.0), std::invalid_argument);
    CHECK(kinetic_kind_from_string(to_string(KineticKind::large_step)) == KineticKind::large_step);
}

TEST_CASE("cos momentum inverts the classical energy") {
    const ChainSpec spec = symmetric_well();
    for (auto model : {PhaseSpaceModel::bare(spec), PhaseSpaceModel::corrected(spec, 0.8),
                       PhaseSpaceModel::large_step(spec, 1.5)}) {
        for (double x : {3.2, 11.7, 24.0}) {
            for (double E : {-0.6, 0.2, 0.9}) {
                const double c = model.cos_momentum(E, x);
                if (std::abs(c) >= 1.0) continue;
                CHECK(model.energy(x, std::acos(c)) == Approx(E).epsilon(1e-10));
            }
        }
    }
}

TEST_CASE("complex momentum branches") {
    const ChainSpec spec = build_chain(60, 1.0, PotentialFamily::linear(0.1));
    const auto m = PhaseSpaceModel::bare(spec);
    const double E = spec.h[29];
    // allowed for |h - E| < J, i.e. 20 < x < 40
    CHECK(std::abs(classical_momentum(m, E, 30.0).imag()) == 0.0);
    const cplx below = classical_momentum(m, E, 45.0);  // h - E > J
    CHECK(std::abs(below.real()) < 1e-12);
    CHECK(below.imag() > 0.0);
    const cplx above = classical_momentum(m, E, 15.0);  // h - E < -J
    CHECK(above.real() == Approx(pi));
    CHECK(above.imag() > 0.0);
}

TEST_CASE("wannier-stark turning points and levels") {
    const double alpha = 0.1;
    const ChainSpec spec = build_chain(60, 1.0, PotentialFamily::linear(alpha));
    const auto m = PhaseSpaceModel::bare(spec);
    const auto tp = turning_points(m, spec.h[29]);
    REQUIRE(tp.size() == 2);
    CHECK(tp[0].x == Approx(20.0).epsilon(1e-8));
    CHECK(tp[0].kind == TurningKind::anomalous);
    CHECK(tp[1].x == Approx(40.0).epsilon(1e-8));
    CHECK(tp[1].kind == TurningKind::standard);

    Well w;
    w.x_bottom = 30.0;
    w.e_min = spec.h[29] - 0.3;
    w.e_max = spec.h[29] + 0.3;
    const auto levels = bohr_levels(m, w);
    REQUIRE(levels.size() >= 5);
    // the ladder is exact: E = alpha N
    for (const auto& lv : levels) {
        const double n = lv.E / alpha;
        CHECK(std::abs(n - std::round(n)) < 1e-6);
        CHECK(lv.spacing == Approx(alpha).epsilon(1e-6));
    }
}

TEST_CASE("allowed interval and action") {
    const ChainSpec spec = build_chain(60, 1.0, PotentialFamily::linear(0.1));
    const auto m = PhaseSpaceModel::bare(spec);
    const double E = spec.h[29];
    const auto iv = allowed_interval(m, E, 30.0);
    REQUIRE(iv.has_value());
    const ActionResult a = action_allowed(m, E, iv->first.x, iv->second.x);
    // p = acos((h - E)/J) with h linear: int_{-1}^{1} acos(u) du / alpha = pi / alpha
    CHECK(a.S12 == Approx(pi / 0.1).epsilon(1e-8));
    // T12 = 2 pi / alpha for the Bloch oscillation
    CHECK(a.T12 == Approx(2 * pi / 0.1).epsilon(1e-6));
    CHECK_THROWS_AS(action_allowed(m, E, 10.0, 30.0), std::invalid_argument);
    CHECK_FALSE(allowed_interval(m, E, 5.0).has_value());
}

TEST_CASE("levels of the experimental well") {
    const ChainSpec spec = symmetric_well();
    const auto m = PhaseSpaceModel::bare(spec);
    const auto levels = bohr_levels(m, left_well());
    REQUIRE(levels.size() >= 10);
    const auto& l10 = levels[9];
    CHECK(l10.N == 9);
    CHECK(l10.E + 1.0 == Approx(1.15766554).epsilon(1e-7));
    CHECK(l10.T12 == Approx(53.80739).epsilon(1e-5));
    CHECK(l10.n_cl == 20);
    const BarrierReport b = barrier_action(m, l10.E, 1.0, 50.0);
    CHECK(b.S_B == Approx(3.398723414).epsilon(1e-7));
    CHECK(b.xa == Approx(50.0 + 1.0 - b.xb).epsilon(1e-8));  // mirror symmetry
    CHECK(pi * l10.T12 * std::exp(b.S_B) == Approx(5058.70).epsilon(1e-5));
    CHECK(quantization_phase(m, left_well(), l10.E) == Approx(9.0).epsilon(1e-8));

    // against exact diagonalization: within half a level spacing
    const SpectrumReport ex = diagonalize(spec);
    const DoubletSearch ds = find_doublets(ex, spec, 25.5);
    for (std::size_t k = 0; k < ds.doublets.size(); ++k) {
        if (levels[k].S12 <= 3.0) continue;
        CHECK(std::abs(levels[k].E - ds.doublets[k].E_mean) < 0.5 * levels[k].spacing);
    }

    SUBCASE("tunnelling rate") {
        Well right;
        right.x_bottom = 50.0;
        right.boundary = Boundary::hard_wall_right;
        const auto partner = bohr_levels(m, right);
        const TunnelingRates r = tunneling_rates(l10, partner[9], m);
        CHECK(r.eta == Approx(6.2102809e-4).epsilon(1e-6));
        // within a factor of two of the exact half splitting
        CHECK(r.eta / ds.doublets[9].eta < 2.0);
        CHECK(r.eta / ds.doublets[9].eta > 0.5);
        CHECK(r.Gamma == Approx(l10.spacing / (2 * pi) * std::exp(-2 * r.S_B)).epsilon(1e-10));
    }
}

TEST_CASE("large-step levels") {
    const ChainSpec spec = symmetric_well();
    const auto m = PhaseSpaceModel::large_step(spec, 1.0);
    const auto levels = bohr_levels(m, left_well());
    REQUIRE(levels.size() >= 10);
    CHECK(levels[9].E + 1.0 == Approx(1.157756133).epsilon(1e-7));
    CHECK(levels[9].T12 == Approx(54.7557327).epsilon(1e-5));
    CHECK(barrier_action(m, levels[9].E, 1.0, 50.0).S_B == Approx(3.233442685).epsilon(1e-7));
}

TEST_CASE("large-step kinetic term") {
    SUBCASE("small step reduces to the bare band") {
        for (double p : {0.3, 1.0, 2.0}) CHECK(large_step_kinetic(p, 1e-3).T == Approx(-std::cos(p)).epsilon(1e-6));
    }
    SUBCASE("branch point") {
        const LargeStepKinetic k = large_step_kinetic(0.5, 0.1);
        CHECK(k.p_c == Approx(std::log(4.0 / 0.1)).epsilon(0.02));
        CHECK(k.p_c == Approx(std::acosh(1.0 / std::sin(0.05))).epsilon(1e-14));
    }
    SUBCASE("quarter-period step") {
        // at J dt = pi the mixing angle tends to pi/4 as p -> 0+
        const LargeStepKinetic k = large_step_kinetic(1e-6, pi);
        CHECK(k.theta == Approx(pi / 4).epsilon(1e-5));
        CHECK(std::abs(large_step_kinetic(pi / 2, pi).theta) < 1e-12);
    }
    SUBCASE("velocity series at small steps") {
        // v = T'(p) + O(dt^2)
        const double dt = 0.05, p = 0.9;
        const LargeStepKinetic k = large_step_kinetic(p, dt);
        CHECK(std::abs(k.v - std::sin(p)) < dt * dt);
    }
    CHECK_THROWS_AS(large_step_kinetic(0.1, 0.0), std::invalid_argument);
}

TEST_CASE("perturbative shifts") {
    const ChainSpec spec = symmetric_well();
    const auto m = PhaseSpaceModel::bare(spec);
    auto levels = bohr_levels(m, left_well());
    Well right;
    right.x_bottom = 50.0;
    right.boundary = Boundary::hard_wall_right;
    auto partner = bohr_levels(m, right);
    const double dt = 0.3;
    const ShiftReport s = perturbation_shifts(levels[9], m, dt, &partner[9]);
    // the energy shift is dS / T at first order
    CHECK(s.dE == Approx(-s.dS12 / levels[9].T12 * 2.0).epsilon(1e-6));

    // compare with the re-quantized corrected model
    const auto c = bohr_levels(PhaseSpaceModel::corrected(spec, dt), left_well());
    CHECK(c[9].E - levels[9].E == Approx(s.dE).epsilon(0.05));

    const DetuningReport d = detuning_effective(0.0, levels[9], partner[9], 1e-3, dt);
    // symmetric partners shift together and leave the detuning at zero
    CHECK(std::abs(d.epsilon_eff) < 1e-8);
    CHECK(d.dt_threshold == Approx(std::sqrt(1e-3 * levels[9].n_cl / levels[9].spacing)));
    CHECK(d.criterion_ok == (dt < d.dt_threshold));
}

TEST_CASE("phase portrait") {
    const ChainSpec spec = build_chain(50, 1.0, PotentialFamily::cosine(1.25));
    const auto m = PhaseSpaceModel::large_step(spec, 1.497);
    const PhasePortrait pp = phase_portrait(m, {0.0}, 500);
    CHECK(pp.regions.size() == 4);
    for (const auto& pt : pp.points) CHECK(m.energy(pt.x, pt.p) == Approx(0.0).scale(1.0).epsilon(1e-9));
    for (const auto& r : pp.regions) {
        CHECK(r.x2 > r.x1);
        CHECK(r.area > 0.0);
    }
    CHECK_THROWS_AS(phase_portrait(m, {0.0}, 1), std::invalid_argument);
}

TEST_CASE("flat chain action") {
    const ChainSpec spec = build_chain(20, 1.0, PotentialFamily::custom(std::vector<double>(20, 0.3)));
    const auto m = PhaseSpaceModel::bare(spec);
    CHECK(std::acos(m.cos_momentum(0.3, 7.0)) == Approx(pi / 2));
    CHECK(action_allowed(m, 0.3, 4.0, 9.5).S12 == Approx(pi / 2 * 5.5).epsilon(1e-10));
    CHECK(correction_dH(0.0, pi / 4, 0.5) == Approx(0.25 * std::sqrt(2.0) / 96).epsilon(1e-14));
    CHECK(correction_dH(0.0, 0.0, 0.5) == 0.0);
}

TEST_CASE("harmonic well") {
    const int L = 200;
    const double k = 1e-4;
    std::vector<double> h(L);
    for (int n = 1; n <= L; ++n) h[n - 1] = k * std::pow(n - 100.5, 2) / 2;
    const ChainSpec spec = build_chain(L, 1.0, PotentialFamily::custom(h));
    const auto m = PhaseSpaceModel::bare(spec);
    Well w;
    w.x_bottom = 100.5;
    w.e_max = -1.0 + 0.06;
    const auto levels = bohr_levels(m, w);
    REQUIRE(levels.size() >= 4);
    const double omega = std::sqrt(k);
    // isochronism
    for (std::size_t i = 0; i < 4; ++i) CHECK(levels[i].T12 == Approx(2 * pi / omega).epsilon(0.01));
    // ground state above the band bottom
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hamiltonian_real(spec));
    CHECK(levels[0].E + 1.0 == Approx(es.eigenvalues()(0) + 1.0).epsilon(0.1));
    CHECK(levels[0].E + 1.0 == Approx(omega / 2).epsilon(0.1));
}

TEST_CASE("cosine well turning points and spacing") {
    const ChainSpec spec = build_chain(200, 1.0, PotentialFamily::cosine(1.25));
    const auto m = PhaseSpaceModel::bare(spec);
    // mid-barrier energy: two allowed regions inside the chain, two turning points each
    const auto tp = turning_points(m, -1.0);
    CHECK(tp.size() == 4);
    // high in the band the top of the band folds back
    bool anomalous = false;
    for (const auto& t : turning_points(m, 0.0)) anomalous = anomalous || t.kind == TurningKind::anomalous;
    CHECK(anomalous);

    Well w;
    w.x_bottom = 1.0 + 199.0 / 4;
    const auto levels = bohr_levels(m, w);
    const SpectrumReport ex = diagonalize(spec);
    REQUIRE(levels.size() > 16);
    for (int k = 5; k <= 15; ++k) {
        // one level per well: exact levels come in near-degenerate pairs
        const double spacing = 0.5 * (ex.energies(2 * k + 2) + ex.energies(2 * k + 3)) -
                               0.5 * (ex.energies(2 * k) + ex.energies(2 * k + 1));
        CHECK(levels[k].spacing == Approx(spacing).epsilon(0.05));
    }
}

TEST_CASE("large-step momentum at small steps") {
    const ChainSpec spec = symmetric_well();
    const auto bare = PhaseSpaceModel::bare(spec);
    const auto large = PhaseSpaceModel::large_step(spec, 0.05);
    for (double x : {5.0, 12.0}) {
        for (double E : {-0.5, 0.3}) {
            const double p0 = std::acos(bare.cos_momentum(E, x));
            const double p1 = std::acos(large.cos_momentum(E, x));
            CHECK(std::abs(p1 / p0 - 1) < 1e-3);
        }
    }
}
