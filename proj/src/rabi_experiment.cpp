#include "trotter/rabi_experiment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>

#include <boost/math/tools/minima.hpp>
#include <omp.h>

#include "trotter/semiclassics.hpp"

namespace trotter {

namespace {
constexpr double pi = std::numbers::pi;

// Box-Muller on the portable uniform; one normal per call keeps the stream layout simple.
double gaussian(std::mt19937_64& rng) {
    double u1 = 0.0;
    while (u1 <= 0.0) u1 = uniform01(rng());
    const double u2 = uniform01(rng());
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * pi * u2);
}

int resolve_left(int L, int n_left) { return n_left < 0 ? L / 2 : n_left; }

template <class Body>
void for_cells(int n, int workers, Body&& body) {
    if (workers == 1) {
        for (int i = 0; i < n; ++i) body(i);
        return;
    }
    const int threads = workers > 0 ? workers : omp_get_max_threads();
    // exceptions must not escape the parallel region
    std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for schedule(dynamic) num_threads(threads)
    for (int i = 0; i < n; ++i) {
        try {
            body(i);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace

void ExperimentConfig::validate() const {
    if (L < 4) throw std::invalid_argument("experiment: L must be at least 4");
    if (!(J > 0.0)) throw std::invalid_argument("experiment: J must be positive");
    if (!(w > 0.0)) throw std::invalid_argument("experiment: w must be positive");
    if (!std::isfinite(P) || !std::isfinite(dn) || !std::isfinite(alpha))
        throw std::invalid_argument("experiment: potential parameters must be finite");
    if (tilt_length < 0.0) throw std::invalid_argument("experiment: tilt_length must be >= 0");
    if (doublet_index < 1 || 2 * doublet_index > L)
        throw std::invalid_argument("experiment: doublet_index out of range");
    if (!(noise_level >= 0.0 && noise_level < 1.0))
        throw std::invalid_argument("experiment: noise_level must lie in [0, 1)");
    if (M <= 0 || dM <= 0 || M % dM != 0) throw std::invalid_argument("experiment: M must be a positive multiple of dM");
    if (M / dM < 4) throw std::invalid_argument("experiment: need at least 4 samples (M / dM)");
    for (double dt : dt_grid)
        if (!(dt > 0.0)) throw std::invalid_argument("experiment: dt_grid entries must be positive");
    plan(1.0).validate();
}

ChainSpec ExperimentConfig::chain() const {
    return build_chain(L, J, experimental_potential(P, w, dn, alpha, tilt_length));
}

TrotterPlan ExperimentConfig::plan(double dt) const {
    TrotterPlan p;
    p.dt = dt;
    p.ordering = ordering;
    p.split_alpha = split_alpha;
    return p;
}

PotentialFamily experimental_potential(double P, double w, double dn, double alpha, double tilt_length) {
    return PotentialFamily::experimental(P, w, dn, alpha, tilt_length);
}

double left_occupancy(const Eigen::VectorXcd& psi, int n_left) {
    const int n = resolve_left(static_cast<int>(psi.size()), n_left);
    return psi.head(n).squaredNorm();
}

DoubletStates exact_doublet(const ChainSpec& spec, int doublet_index) {
    const int lo = 2 * doublet_index - 2, up = lo + 1;
    if (doublet_index < 1 || up >= spec.L) throw std::invalid_argument("exact_doublet: index out of range");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hamiltonian_real(spec));
    DoubletStates d;
    d.lower = lo;
    d.upper = up;
    d.E_lower = es.eigenvalues()(lo);
    d.E_upper = es.eigenvalues()(up);
    d.states = es.eigenvectors().middleCols(lo, 2).cast<cplx>();

    const int nl = spec.L / 2;
    const Eigen::Matrix2cd W = d.states.topRows(nl).adjoint() * d.states.topRows(nl);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> ws(W);
    const Eigen::Matrix2cd R = ws.eigenvectors();  // column 1: most left-localised
    Eigen::Matrix2cd Hd = Eigen::Matrix2cd::Zero();
    Hd(0, 0) = d.E_lower;
    Hd(1, 1) = d.E_upper;
    const Eigen::Matrix2cd Hl = R.adjoint() * Hd * R;
    d.epsilon = Hl(1, 1).real() - Hl(0, 0).real();
    d.eta = std::abs(Hl(0, 1));
    d.left_weight = d.states.col(0).head(nl).squaredNorm();
    return d;
}

AlphaTuning tune_alpha_for_resonance(const ExperimentConfig& base, double lo, double hi, int grid) {
    if (!(hi > lo) || grid < 3) throw std::invalid_argument("tune_alpha_for_resonance: bad bracket");
    auto gap_at = [&](double a) {
        ExperimentConfig c = base;
        c.alpha = a;
        const DoubletStates d = exact_doublet(c.chain(), c.doublet_index);
        return d.E_upper - d.E_lower;
    };
    std::vector<double> g(grid);
    for (int i = 0; i < grid; ++i) g[i] = gap_at(lo + (hi - lo) * i / (grid - 1));
    const int best = static_cast<int>(std::min_element(g.begin(), g.end()) - g.begin());

    AlphaTuning t;
    if (best == 0 || best == grid - 1) {
        t.alpha = lo + (hi - lo) * best / (grid - 1);
        t.gap = g[best];
        t.message = "gap minimum on the edge of the alpha bracket";
        return t;
    }
    const double a = lo + (hi - lo) * (best - 1) / (grid - 1);
    const double b = lo + (hi - lo) * (best + 1) / (grid - 1);
    const auto r = boost::math::tools::brent_find_minima(gap_at, a, b, 50);
    ExperimentConfig c = base;
    c.alpha = r.first;
    const DoubletStates d = exact_doublet(c.chain(), c.doublet_index);
    t.alpha = r.first;
    t.gap = d.E_upper - d.E_lower;
    t.epsilon = d.epsilon;
    t.rabi_period = 2.0 * pi / t.gap;
    t.left_weight = d.left_weight;
    t.ok = true;
    return t;
}

double uniform01(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

Eigen::VectorXcd prepare_initial_state(const Eigen::MatrixXcd& doublet, double noise_level, std::uint64_t seed,
                                       int n_left) {
    if (doublet.cols() != 2) throw std::invalid_argument("prepare_initial_state: need two doublet columns");
    if (!(noise_level >= 0.0 && noise_level < 1.0))
        throw std::invalid_argument("prepare_initial_state: noise_level must lie in [0, 1)");
    const int L = static_cast<int>(doublet.rows());
    const int nl = resolve_left(L, n_left);
    const Eigen::Matrix2cd W = doublet.topRows(nl).adjoint() * doublet.topRows(nl);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> ws(W);
    Eigen::VectorXcd psi = doublet * ws.eigenvectors().col(1);
    // fix the global phase so the largest component is real and positive
    Eigen::Index imax = 0;
    psi.cwiseAbs().maxCoeff(&imax);
    psi *= std::conj(psi(imax)) / std::abs(psi(imax));

    if (noise_level > 0.0) {
        std::mt19937_64 rng(seed);
        for (int i = 0; i < L; ++i) psi(i) *= 1.0 + noise_level * (2.0 * uniform01(rng()) - 1.0);
    }
    return psi / psi.norm();
}

namespace {

Spectrum dft_grid(std::size_t K, double dt_sample) {
    if (K < 2) throw std::invalid_argument("dft_spectrum: need at least two samples");
    if (!(dt_sample > 0.0)) throw std::invalid_argument("dft_spectrum: sample spacing must be positive");
    Spectrum s;
    s.omega.resize(K);
    s.power.resize(K);
    for (std::size_t n = 0; n < K; ++n) s.omega[n] = 2.0 * pi / dt_sample * n / static_cast<double>(K - 1);
    return s;
}

double dft_bin(const std::vector<double>& x, std::size_t n) {
    const std::size_t K = x.size();
    cplx acc = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
        // omega_n t_k = 2 pi n k / (K - 1); reduce n k first to keep the angle small
        const double ang = 2.0 * pi * static_cast<double>((n * k) % (K - 1)) / static_cast<double>(K - 1);
        acc += x[k] * cplx(std::cos(ang), std::sin(ang));
    }
    acc /= static_cast<double>(K);
    return std::norm(acc);
}

}  // namespace

Spectrum dft_spectrum(const std::vector<double>& samples, double dt_sample) {
    Spectrum s = dft_grid(samples.size(), dt_sample);
    for (std::size_t n = 0; n < samples.size(); ++n) s.power[n] = dft_bin(samples, n);
    return s;
}

Spectrum dft_spectrum_parallel(const std::vector<double>& samples, double dt_sample, int workers) {
    Spectrum s = dft_grid(samples.size(), dt_sample);
    const long K = static_cast<long>(samples.size());
    const int threads = workers > 0 ? workers : omp_get_max_threads();
#pragma omp parallel for schedule(static) num_threads(threads)
    for (long n = 0; n < K; ++n) s.power[n] = dft_bin(samples, static_cast<std::size_t>(n));
    return s;
}

SpectralPeak find_peak(const Spectrum& s) {
    const int K = static_cast<int>(s.power.size());
    const int top = K / 2;  // bins at and above K/2 mirror lower ones
    if (top < 2) throw std::invalid_argument("find_peak: spectrum too short");
    int i = 1;
    for (int n = 2; n < top; ++n)
        if (s.power[n] > s.power[i]) i = n;
    SpectralPeak p;
    p.bin = i;
    p.power = s.power[i];
    p.amplitude = std::sqrt(p.power);
    const double y0 = s.power[i - 1], y1 = s.power[i], y2 = s.power[i + 1];
    const double denom = y0 - 2.0 * y1 + y2;
    double shift = denom != 0.0 ? 0.5 * (y0 - y2) / denom : 0.0;
    shift = std::clamp(shift, -0.5, 0.5);
    p.omega = s.omega[i] + shift * (s.omega[1] - s.omega[0]);
    p.period = 2.0 * pi / p.omega;
    return p;
}

RabiTrace run_trace(const Eigen::VectorXcd& state, const ChainSpec& spec, const TrotterPlan& plan, long M, long dM,
                    int n_left) {
    plan.validate();
    if (M <= 0 || dM <= 0 || M % dM != 0) throw std::invalid_argument("run_trace: M must be a positive multiple of dM");
    if (state.size() != spec.L) throw std::invalid_argument("run_trace: state dimension mismatch");
    if (std::abs(state.norm() - 1.0) > 1e-8) throw std::invalid_argument("run_trace: state is not normalised");
    const TrotterCircuit circuit(spec, plan);
    const long K = M / dM;
    RabiTrace tr;
    tr.dt = plan.dt;
    tr.M = M;
    tr.dM = dM;
    tr.steps.reserve(K);
    tr.times.reserve(K);
    tr.n_left.reserve(K);
    Eigen::VectorXcd psi = state;
    for (long k = 0; k < K; ++k) {
        tr.steps.push_back(k * dM);
        tr.times.push_back(static_cast<double>(k * dM) * plan.dt);
        tr.n_left.push_back(left_occupancy(psi, n_left));
        tr.norm_error = std::max(tr.norm_error, std::abs(psi.norm() - 1.0));
        if (k + 1 < K) circuit.evolve(psi, dM);
    }
    tr.spectrum = dft_spectrum(tr.n_left, plan.dt * static_cast<double>(dM));
    tr.peak = find_peak(tr.spectrum);
    return tr;
}

double SemiclassicalOverlay::period_fixed(bool two_pi) const {
    return (two_pi ? 2.0 * pi : pi) * T_fixed * std::exp(S_B_fixed);
}

double SemiclassicalOverlay::period_requantized(bool two_pi) const {
    return (two_pi ? 2.0 * pi : pi) * T_requantized * std::exp(S_B_requantized);
}

SemiclassicalOverlay semiclassical_overlay(const ChainSpec& spec, int doublet_index, double dt) {
    SemiclassicalOverlay o;
    o.dt = dt;
    if (dt < 0.0 || spec.J * dt >= 2.0 * pi) return o;
    const int N = doublet_index - 1;
    Well well;
    well.x_bottom = 1.0;
    well.boundary = Boundary::hard_wall_left;
    const PhaseSpaceModel bare = PhaseSpaceModel::bare(spec);
    const auto bare_levels = bohr_levels(bare, well);
    const auto find = [N](const std::vector<LevelPrediction>& lv) -> const LevelPrediction* {
        for (const auto& l : lv)
            if (l.N == N) return &l;
        return nullptr;
    };
    const LevelPrediction* l0 = find(bare_levels);
    if (!l0) return o;
    const PhaseSpaceModel model = dt > 0.0 ? PhaseSpaceModel::large_step(spec, dt) : bare;
    const double x_right = static_cast<double>(spec.L);

    o.E_fixed = l0->E;
    auto iv = allowed_interval(model, o.E_fixed, 1.0);
    if (!iv) return o;
    o.T_fixed = action_allowed(model, o.E_fixed, iv->first.x, iv->second.x).T12;
    o.S_B_fixed = barrier_action(model, o.E_fixed, 1.0, x_right).S_B;

    const auto levels = dt > 0.0 ? bohr_levels(model, well) : bare_levels;
    const LevelPrediction* lq = find(levels);
    if (!lq) return o;
    o.E_requantized = lq->E;
    o.T_requantized = lq->T12;
    o.S_B_requantized = barrier_action(model, o.E_requantized, 1.0, x_right).S_B;
    o.valid = true;
    return o;
}

DensityMap rabi_density_map(const ExperimentConfig& config, int workers) {
    config.validate();
    if (config.dt_grid.empty()) throw std::invalid_argument("rabi_density_map: dt_grid is empty");
    const ChainSpec spec = config.chain();
    const DoubletStates d = exact_doublet(spec, config.doublet_index);
    DensityMap map;
    map.config = config;
    map.initial_state = prepare_initial_state(d.states, config.noise_level, config.seed);
    const int n = static_cast<int>(config.dt_grid.size());
    map.traces.resize(n);
    map.overlays.resize(n);
    for_cells(n, workers, [&](int i) {
        const double dt = config.dt_grid[i];
        map.traces[i] = run_trace(map.initial_state, spec, config.plan(dt), config.M, config.dM);
        map.overlays[i] = semiclassical_overlay(spec, config.doublet_index, dt);
    });
    return map;
}

double DetuningFit::period(double dt, double J) const {
    const double dE = alpha * J * (J * dt) * (J * dt);
    const double x = dE * T0 / (2.0 * pi);
    return T0 / std::sqrt(1.0 + x * x);
}

DetuningFit detuning_fit(const std::vector<double>& dt, const std::vector<double>& periods, double T0, double J) {
    if (dt.size() != periods.size()) throw std::invalid_argument("detuning_fit: size mismatch");
    if (dt.size() < 5) throw std::invalid_argument("detuning_fit: need at least 5 points");
    if (!(T0 > 0.0)) throw std::invalid_argument("detuning_fit: T0 must be positive");
    DetuningFit fit;
    fit.T0 = T0;
    for (std::size_t i = 1; i < periods.size(); ++i)
        if (periods[i] > periods[i - 1]) fit.monotone_input = false;

    auto sse = [&](double a) {
        DetuningFit f = fit;
        f.alpha = a;
        double s = 0.0;
        for (std::size_t i = 0; i < dt.size(); ++i) {
            const double r = periods[i] - f.period(dt[i], J);
            s += r * r;
        }
        return s;
    };
    // coarse logarithmic scan over alpha >= 0 (the model is even in alpha), then Brent
    const double dmax = *std::max_element(dt.begin(), dt.end());
    const double a_scale = 2.0 * pi / (T0 * J * (J * dmax) * (J * dmax));
    std::vector<double> grid{0.0};
    for (int k = -60; k <= 40; ++k) grid.push_back(a_scale * std::pow(10.0, k / 10.0));
    std::size_t best = 0;
    double best_val = sse(0.0);
    for (std::size_t i = 1; i < grid.size(); ++i) {
        const double v = sse(grid[i]);
        if (v < best_val) {
            best_val = v;
            best = i;
        }
    }
    const double lo = best == 0 ? 0.0 : grid[best - 1];
    const double hi = grid[std::min(best + 1, grid.size() - 1)];
    fit.alpha = boost::math::tools::brent_find_minima(sse, lo, hi, 50).first;
    if (sse(grid[best]) < sse(fit.alpha)) fit.alpha = grid[best];

    double s = 0.0;
    for (std::size_t i = 0; i < dt.size(); ++i) {
        fit.residuals.push_back(periods[i] - fit.period(dt[i], J));
        s += fit.residuals.back() * fit.residuals.back();
    }
    fit.rms_residual = std::sqrt(s / dt.size());
    return fit;
}

VisibilityCurve visibility_curve(const std::vector<double>& periods, const std::vector<double>& amplitudes, double T0,
                                 double n0) {
    if (periods.size() != amplitudes.size()) throw std::invalid_argument("visibility_curve: size mismatch");
    if (!(T0 > 0.0)) throw std::invalid_argument("visibility_curve: T0 must be positive");
    VisibilityCurve v;
    v.measured = amplitudes;
    std::vector<double> r(periods.size());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = (periods[i] / T0) * (periods[i] / T0);
    if (n0 <= 0.0) {
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < r.size(); ++i) {
            num += amplitudes[i] * r[i];
            den += r[i] * r[i];
        }
        n0 = den > 0.0 ? num / den : 0.0;
    }
    v.n0 = n0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        v.predicted.push_back(n0 * r[i]);
        v.deviation.push_back(amplitudes[i] - v.predicted.back());
    }
    return v;
}

NoiseEnsemble gate_noise_ensemble(const ExperimentConfig& config, double dt, double phase_sigma, int trials,
                                  int workers) {
    config.validate();
    if (trials < 10) throw std::invalid_argument("gate_noise_ensemble: need at least 10 trials");
    if (!(dt > 0.0)) throw std::invalid_argument("gate_noise_ensemble: dt must be positive");
    if (!(phase_sigma >= 0.0)) throw std::invalid_argument("gate_noise_ensemble: phase_sigma must be >= 0");

    const ChainSpec spec = config.chain();
    const DoubletStates d = exact_doublet(spec, config.doublet_index);
    const Eigen::VectorXcd psi0 = prepare_initial_state(d.states, config.noise_level, config.seed);
    const TrotterPlan plan = config.plan(dt);

    NoiseEnsemble out;
    out.dt = dt;
    out.phase_sigma = phase_sigma;
    out.noiseless_visibility = run_trace(psi0, spec, plan, config.M, config.dM).peak.amplitude;

    Well well;
    well.x_bottom = 1.0;
    well.boundary = Boundary::hard_wall_left;
    for (const auto& l : bohr_levels(PhaseSpaceModel::bare(spec), well))
        if (l.N == config.doublet_index - 1) out.n_cl = l.n_cl;
    out.threshold = (d.E_upper - d.E_lower) * dt * std::sqrt(static_cast<double>(out.n_cl));

    const Eigen::VectorXd wts =
        0.5 * (d.states.col(0).cwiseAbs2() + d.states.col(1).cwiseAbs2());
    out.energy_shift_predicted = phase_sigma / dt * wts.norm();
    const double E_mean = 0.5 * (d.E_lower + d.E_upper);

    out.visibilities.resize(trials);
    out.energy_shifts.resize(trials);
    for_cells(trials, workers, [&](int t) {
        std::seed_seq seq{static_cast<std::uint32_t>(config.seed), static_cast<std::uint32_t>(config.seed >> 32),
                          static_cast<std::uint32_t>(t)};
        std::mt19937_64 rng(seq);
        ChainSpec noisy = spec;
        if (phase_sigma > 0.0)
            for (double& h : noisy.h) h += phase_sigma * gaussian(rng) / dt;
        out.visibilities[t] = run_trace(psi0, noisy, plan, config.M, config.dM).peak.amplitude;
        const DoubletStates dn = exact_doublet(noisy, config.doublet_index);
        out.energy_shifts[t] = 0.5 * (dn.E_lower + dn.E_upper) - E_mean;
    });

    auto stats = [](const std::vector<double>& x, double& mean, double& sd) {
        mean = std::accumulate(x.begin(), x.end(), 0.0) / x.size();
        double s = 0.0;
        for (double v : x) s += (v - mean) * (v - mean);
        sd = x.size() > 1 ? std::sqrt(s / (x.size() - 1)) : 0.0;
    };
    stats(out.visibilities, out.mean, out.stddev);
    std::vector<double> sorted = out.visibilities;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t m = sorted.size();
    out.median = m % 2 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
    double mean_shift = 0.0;
    stats(out.energy_shifts, mean_shift, out.energy_shift_std);
    return out;
}

}  // namespace trotter
