#include "doctest.h"

#include <cmath>
#include <numbers>

#include "trotter/rabi_experiment.hpp"
#include "trotter/spectral_toolkit.hpp"

using namespace trotter;
using doctest::Approx;

namespace {
constexpr double pi = std::numbers::pi;

ExperimentConfig short_config() {
    ExperimentConfig c;
    c.M = 12000;
    c.dM = 200;
    c.dt_grid = {0.5, 1.5};
    return c;
}
}  // namespace

TEST_CASE("uniform variates") {
    CHECK(uniform01(0) == 0.0);
    CHECK(uniform01(std::uint64_t(1) << 11) == 0x1.0p-53);
    CHECK(uniform01(~std::uint64_t(0)) < 1.0);
    CHECK(uniform01(std::uint64_t(1) << 63) == 0.5);
}

TEST_CASE("config validation") {
    ExperimentConfig c;
    CHECK_NOTHROW(c.validate());
    c.M = 1100;  // not a multiple of dM
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = ExperimentConfig{};
    c.doublet_index = 26;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = ExperimentConfig{};
    c.noise_level = 1.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = ExperimentConfig{};
    c.dt_grid = {0.5, -1.0};
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("dft of a pure tone") {
    const int K = 301;
    const double ds = 100.0;
    const int m = 7;
    const double w = 2 * pi / ds * m / (K - 1);
    std::vector<double> x(K);
    for (int k = 0; k < K; ++k) x[k] = 0.3 + 0.2 * std::cos(w * k * ds);
    const Spectrum s = dft_spectrum(x, ds);
    REQUIRE(s.omega.size() == std::size_t(K));
    CHECK(s.omega[m] == Approx(w).epsilon(1e-14));
    const SpectralPeak p = find_peak(s);
    CHECK(p.bin == m);
    CHECK(p.period == Approx(2 * pi / w).epsilon(1e-3));
    CHECK(p.amplitude == Approx(0.1).epsilon(0.02));

    const Spectrum par = dft_spectrum_parallel(x, ds, 2);
    for (int n = 0; n < K; ++n) CHECK(par.power[n] == s.power[n]);
    CHECK_THROWS_AS(find_peak(dft_spectrum({1.0, 2.0}, 1.0)), std::invalid_argument);
}

TEST_CASE("off-grid tone is refined between bins") {
    const int K = 301;
    const double ds = 100.0;
    const double w = 2 * pi / ds * 7.4 / (K - 1);
    std::vector<double> x(K);
    for (int k = 0; k < K; ++k) x[k] = 0.5 + 0.5 * std::cos(w * k * ds);
    const SpectralPeak p = find_peak(dft_spectrum(x, ds));
    CHECK(p.bin == 7);
    CHECK(std::abs(p.period / (2 * pi / w) - 1.0) < 0.05);
}

TEST_CASE("exact doublet and initial state") {
    const ExperimentConfig c;
    const ChainSpec spec = c.chain();
    const DoubletStates d = exact_doublet(spec, 10);
    CHECK(d.lower == 18);
    CHECK(d.upper == 19);
    CHECK(d.E_upper - d.E_lower == Approx(1.1017257e-3).epsilon(1e-5));
    CHECK(std::abs(d.epsilon) < 1e-8);

    const Eigen::VectorXcd clean = prepare_initial_state(d.states, 0.0, 1);
    CHECK(clean.norm() == Approx(1.0).epsilon(1e-14));
    CHECK(left_occupancy(clean) > 0.995);
    const Eigen::VectorXcd a = prepare_initial_state(d.states, 0.1, 42);
    const Eigen::VectorXcd b = prepare_initial_state(d.states, 0.1, 42);
    const Eigen::VectorXcd other = prepare_initial_state(d.states, 0.1, 43);
    CHECK((a - b).norm() == 0.0);
    CHECK((a - other).norm() > 1e-6);
    CHECK(a.norm() == Approx(1.0).epsilon(1e-14));
    // multiplicative noise keeps the state mostly on the left
    CHECK(left_occupancy(a) > 0.95);
    CHECK(left_occupancy(a, 50) == Approx(1.0));
}

TEST_CASE("symmetric well is tuned at zero tilt") {
    ExperimentConfig c;
    const AlphaTuning t = tune_alpha_for_resonance(c, -0.02, 0.02, 41);
    CHECK(t.ok);
    CHECK(std::abs(t.alpha) < 1e-6);
    CHECK(t.rabi_period == Approx(2 * pi / t.gap));
    // a bracket that excludes the minimum fails
    const AlphaTuning edge = tune_alpha_for_resonance(c, 0.01, 0.03, 21);
    CHECK_FALSE(edge.ok);
}

TEST_CASE("rabi trace") {
    const ExperimentConfig c;
    const ChainSpec spec = c.chain();
    const DoubletStates d = exact_doublet(spec, 10);
    const Eigen::VectorXcd psi = prepare_initial_state(d.states, 0.0, 1);
    const TrotterPlan plan = c.plan(0.5);
    const RabiTrace tr = run_trace(psi, spec, plan, c.M, c.dM);
    CHECK(tr.steps.size() == 300);
    CHECK(tr.steps.front() == 0);
    CHECK(tr.times[1] == Approx(100.0));
    CHECK(tr.n_left.front() == Approx(left_occupancy(psi)));
    CHECK(tr.norm_error < 1e-8);

    // the peak period follows the effective doublet gap
    const auto heff = effective_hamiltonian(spec, plan);
    const SpectrumReport ef = diagonalize(heff, plan);
    const SpectrumReport ex = diagonalize(spec);
    const DoubletSearch de = find_doublets(ef, spec, 25.5);
    const int k = match_doublet(ex, 18, 19, ef, de);
    REQUIRE(k >= 0);
    const double period = pi / de.doublets[k].eta;
    CHECK(std::abs(tr.peak.period / period - 1.0) < 0.1);

    // the merged-step trace agrees with dense powers of the step unitary
    const Eigen::MatrixXcd U = step_unitary(spec, plan).m;
    Eigen::VectorXcd ref = psi;
    for (int s = 0; s < 200; ++s) ref = U * ref;
    CHECK(tr.n_left[1] == Approx(left_occupancy(ref)).epsilon(1e-10));
}

TEST_CASE("semiclassical overlay") {
    const ChainSpec spec = ExperimentConfig{}.chain();
    const SemiclassicalOverlay o = semiclassical_overlay(spec, 10, 0.5);
    REQUIRE(o.valid);
    CHECK(o.period_requantized() == Approx(4881.08).epsilon(1e-5));
    CHECK(o.period_fixed(true) == Approx(2 * o.period_fixed()));
    CHECK(o.period_fixed() == Approx(pi * o.T_fixed * std::exp(o.S_B_fixed)));
    // at dt -> 0 both overlays coincide with the bare estimate
    const SemiclassicalOverlay z = semiclassical_overlay(spec, 10, 1e-4);
    CHECK(z.period_requantized() == Approx(5058.70).epsilon(1e-4));
    CHECK(z.period_fixed() == Approx(z.period_requantized()).epsilon(1e-6));
}

TEST_CASE("density map is independent of the worker count") {
    const ExperimentConfig c = short_config();
    const DensityMap serial = rabi_density_map(c, 1);
    const DensityMap parallel = rabi_density_map(c, 2);
    REQUIRE(serial.traces.size() == 2);
    REQUIRE(serial.overlays.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(serial.traces[i].dt == c.dt_grid[i]);
        CHECK(serial.traces[i].n_left == parallel.traces[i].n_left);
        CHECK(serial.traces[i].peak.period == parallel.traces[i].peak.period);
    }
}

TEST_CASE("detuning fit recovers the generating alpha") {
    const double T0 = 10000.0, alpha = 2.46e-3;
    DetuningFit truth;
    truth.alpha = alpha;
    truth.T0 = T0;
    std::vector<double> dt, T;
    for (int i = 2; i <= 10; ++i) {
        dt.push_back(0.1 * i);
        T.push_back(truth.period(0.1 * i));
    }
    const DetuningFit f = detuning_fit(dt, T, T0);
    CHECK(f.alpha == Approx(alpha).epsilon(1e-4));
    CHECK(f.rms_residual < 1e-6 * T0);
    CHECK(f.monotone_input);
    CHECK(truth.period(0.0) == T0);
    CHECK(truth.period(1.0) == Approx(T0 / std::sqrt(1 + std::pow(alpha * T0 / (2 * pi), 2))));
}

TEST_CASE("visibility curve") {
    const double T0 = 8000.0;
    const std::vector<double> T{8000, 6000, 4000};
    const std::vector<double> A{0.25, 0.25 * 0.5625, 0.0625};
    const VisibilityCurve fitted = visibility_curve(T, A, T0);
    CHECK(fitted.n0 == Approx(0.25));
    for (double d : fitted.deviation) CHECK(std::abs(d) < 1e-12);
    const VisibilityCurve fixed = visibility_curve(T, A, T0, 0.5);
    CHECK(fixed.predicted[2] == Approx(0.125));
    CHECK(fixed.deviation[0] == Approx(-0.25));
}

TEST_CASE("noise ensemble") {
    ExperimentConfig c = short_config();
    SUBCASE("zero noise reproduces the clean run") {
        const NoiseEnsemble n = gate_noise_ensemble(c, 0.5, 0.0, 10, 1);
        REQUIRE(n.visibilities.size() == 10);
        for (double v : n.visibilities) CHECK(v == n.noiseless_visibility);
        CHECK(n.stddev < 1e-15);
        for (double e : n.energy_shifts) CHECK(std::abs(e) < 1e-12);
        const DoubletStates d = exact_doublet(c.chain(), 10);
        CHECK(n.threshold == Approx((d.E_upper - d.E_lower) * 0.5 * std::sqrt(double(n.n_cl))));
    }
    SUBCASE("trials are reproducible") {
        const NoiseEnsemble a = gate_noise_ensemble(c, 0.5, 1e-3, 10, 1);
        const NoiseEnsemble b = gate_noise_ensemble(c, 0.5, 1e-3, 10, 2);
        CHECK(a.visibilities == b.visibilities);
        CHECK(a.energy_shifts == b.energy_shifts);
        CHECK(a.energy_shift_std > 0.0);
    }
    CHECK_THROWS_AS(gate_noise_ensemble(c, 0.5, 0.0, 5), std::invalid_argument);
}
