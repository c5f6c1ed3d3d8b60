#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "trotter/chain_model.hpp"
#include "trotter/trotter_engine.hpp"

namespace trotter {

struct ExperimentConfig {
    int L = 50;
    double J = 1.0;
    double P = 1.25;
    double w = 8.0;
    double dn = 0.0;
    double alpha = 0.0;
    double tilt_length = 0.0;  // 0 means L
    int doublet_index = 10;    // 1-based; levels 2k-2 and 2k-1 of the exact spectrum
    double noise_level = 0.1;
    std::uint64_t seed = 1;
    long M = 60000;
    long dM = 200;
    std::vector<double> dt_grid;
    Ordering ordering = Ordering::even_potential_odd;
    double split_alpha = 0.5;

    void validate() const;
    ChainSpec chain() const;
    TrotterPlan plan(double dt) const;
};

PotentialFamily experimental_potential(double P, double w, double dn, double alpha, double tilt_length = 0.0);

// Occupancy of sites 1..n_left (default L/2).
double left_occupancy(const Eigen::VectorXcd& psi, int n_left = -1);

struct DoubletStates {
    int lower = 0;
    int upper = 0;
    double E_lower = 0.0;
    double E_upper = 0.0;
    Eigen::MatrixXcd states;  // L x 2
    double epsilon = 0.0;     // detuning in the left/right localised basis
    double eta = 0.0;         // coupling in that basis
    double left_weight = 0.0; // occupancy of the left half for the lower state
};

// Exact doublet k of the chain; works for any ChainSpec.
DoubletStates exact_doublet(const ChainSpec& spec, int doublet_index);

struct AlphaTuning {
    double alpha = 0.0;
    double gap = 0.0;      // E_upper - E_lower at alpha
    double epsilon = 0.0;  // detuning at alpha
    double rabi_period = 0.0;  // 2 pi / gap
    double left_weight = 0.0;
    bool ok = false;
    std::string message;
};

// Minimises the doublet gap (maximises the Rabi period) over alpha in [lo, hi].
// Fails when the minimum sits on the bracket edge.
AlphaTuning tune_alpha_for_resonance(const ExperimentConfig& base, double lo = -0.1, double hi = 0.1,
                                     int grid = 201);

// Uniform u in [0, 1) with 53 bits, independent of the standard library's distributions.
double uniform01(std::uint64_t bits);

// Superposition of the two doublet columns maximising the left occupancy, then
// psi_i -> psi_i (1 + eps_i), eps_i uniform in [-noise, noise], renormalised.
Eigen::VectorXcd prepare_initial_state(const Eigen::MatrixXcd& doublet, double noise_level, std::uint64_t seed,
                                       int n_left = -1);

struct SpectralPeak {
    int bin = 0;
    double omega = 0.0;
    double period = 0.0;     // 2 pi / omega
    double amplitude = 0.0;  // |n_omega| at the peak bin
    double power = 0.0;      // |n_omega|^2 at the peak bin
};

struct Spectrum {
    std::vector<double> omega;
    std::vector<double> power;  // |n_omega|^2
};

// n_omega = (1/K) sum_k N_k exp(i omega t_k) with t_k = k dt_sample and
// omega_n = 2 pi / dt_sample * n / (K - 1), n = 0..K-1.
Spectrum dft_spectrum(const std::vector<double>& samples, double dt_sample);
Spectrum dft_spectrum_parallel(const std::vector<double>& samples, double dt_sample, int workers = 0);

// Largest bin in 1..K/2-1, refined by a parabola through three bins.
SpectralPeak find_peak(const Spectrum& s);

struct RabiTrace {
    double dt = 0.0;
    long M = 0;
    long dM = 0;
    std::vector<long> steps;
    std::vector<double> times;
    std::vector<double> n_left;
    Spectrum spectrum;
    SpectralPeak peak;
    double norm_error = 0.0;  // max | |psi| - 1 | over the samples
};

RabiTrace run_trace(const Eigen::VectorXcd& state, const ChainSpec& spec, const TrotterPlan& plan, long M, long dM,
                    int n_left = -1);

struct SemiclassicalOverlay {
    double dt = 0.0;
    bool valid = false;
    // energy frozen at the dt = 0 level
    double E_fixed = 0.0;
    double T_fixed = 0.0;
    double S_B_fixed = 0.0;
    // level quantized again with the large-step kinetic term
    double E_requantized = 0.0;
    double T_requantized = 0.0;
    double S_B_requantized = 0.0;

    // T_Rabi = c T_cl e^{S_B} with c = pi (occupancy period) or c = 2 pi
    double period_fixed(bool two_pi = false) const;
    double period_requantized(bool two_pi = false) const;
};

// Left well against the hard wall at x = 0, level N = doublet_index - 1.
SemiclassicalOverlay semiclassical_overlay(const ChainSpec& spec, int doublet_index, double dt);

struct DensityMap {
    ExperimentConfig config;
    Eigen::VectorXcd initial_state;
    std::vector<RabiTrace> traces;  // one per dt_grid entry, same order
    std::vector<SemiclassicalOverlay> overlays;
};

// One independent trace per dt. workers = 1 runs serially, 0 uses the OpenMP default.
DensityMap rabi_density_map(const ExperimentConfig& config, int workers = 0);

struct DetuningFit {
    double alpha = 0.0;
    double T0 = 0.0;
    double rms_residual = 0.0;
    std::vector<double> residuals;
    bool monotone_input = true;

    double period(double dt, double J = 1.0) const;
};

// T(dt) = T0 / sqrt(1 + (dE T0 / 2 pi)^2), dE = alpha J (J dt)^2, least squares in alpha >= 0.
DetuningFit detuning_fit(const std::vector<double>& dt, const std::vector<double>& periods, double T0,
                         double J = 1.0);

struct VisibilityCurve {
    double n0 = 0.0;
    std::vector<double> measured;
    std::vector<double> predicted;  // n0 (T/T0)^2 with the measured T
    std::vector<double> deviation;  // measured - predicted
};

// n0 <= 0 fits the prefactor by least squares.
VisibilityCurve visibility_curve(const std::vector<double>& periods, const std::vector<double>& amplitudes,
                                 double T0, double n0 = 0.0);

struct NoiseEnsemble {
    double dt = 0.0;
    double phase_sigma = 0.0;
    std::vector<double> visibilities;
    double mean = 0.0;
    double stddev = 0.0;
    double median = 0.0;
    double noiseless_visibility = 0.0;
    double threshold = 0.0;  // gap * dt * sqrt(n_cl)
    int n_cl = 0;
    std::vector<double> energy_shifts;    // doublet mean-energy shift per trial
    double energy_shift_std = 0.0;
    double energy_shift_predicted = 0.0;  // sigma_V sqrt(sum w_i^2)
};

// Static per-site phases delta phi_i ~ N(0, phase_sigma), i.e. delta V_i = delta phi_i / dt
// added to h for the whole trial.
NoiseEnsemble gate_noise_ensemble(const ExperimentConfig& config, double dt, double phase_sigma, int trials,
                                  int workers = 0);

}  // namespace trotter
