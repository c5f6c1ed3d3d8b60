#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "trotter/chain_model.hpp"
#include "trotter/dense_operator.hpp"
#include "trotter/trotter_engine.hpp"

namespace trotter {

enum class SpectrumSource { exact, effective };

struct SpectrumReport {
    Eigen::VectorXd energies;  // ascending
    Eigen::MatrixXcd states;   // orthonormal columns
    SpectrumSource source = SpectrumSource::exact;
    double dt = 0.0;
    Ordering ordering = Ordering::even_odd_potential;
};

SpectrumReport diagonalize(const DenseOperator& H, SpectrumSource source = SpectrumSource::exact, double dt = 0.0,
                           Ordering ordering = Ordering::even_odd_potential);
SpectrumReport diagonalize(const ChainSpec& spec);
SpectrumReport diagonalize(const EffectiveHamiltonian& heff, const TrotterPlan& plan);

struct DoubletReport {
    int index = 0;  // 1-based ordinal among accepted doublets
    int lower = 0;  // level indices into the SpectrumReport
    int upper = 0;
    double E_mean = 0.0;
    double eta = 0.0;      // half splitting
    double epsilon = 0.0;  // left-minus-right diagonal energy of the localised basis
    double left_weight = 0.0;
    double right_weight = 0.0;
    double localisation = 0.0;  // eigenvalue gap of the 2x2 left projector
};

struct DoubletSearch {
    std::vector<DoubletReport> doublets;
    std::vector<int> flagged;  // levels skipped because the classification was ambiguous
};

// Pairs consecutive levels below the barrier top (h at barrier_center minus J).
// A pair is accepted when its 2x2 left-projector matrix has eigenvalues split by at least
// min_localisation, i.e. the pair can be rotated into one left and one right state.
DoubletSearch find_doublets(const SpectrumReport& report, const ChainSpec& spec, double barrier_center,
                            double min_localisation = 0.5);

// Doublet of `candidates` whose two states have the largest overlap with levels
// (ref_lower, ref_upper) of `reference`. Returns an index into candidates.doublets, or -1.
int match_doublet(const SpectrumReport& reference, int ref_lower, int ref_upper, const SpectrumReport& target,
                  const DoubletSearch& candidates);

struct ResonantModel {
    double epsilon = 0.0;
    double eta = 0.0;
    double omega = 0.0;  // sqrt(eta^2 + eps^2/4)
    double eigenvalues[2] = {0.0, 0.0};

    // <N_left(t)> = (eps/2 Omega)^2 + [1 - (eps/2 Omega)^2] cos^2 Omega t
    double occupancy(double t) const;
};

ResonantModel resonant_model(double epsilon, double eta);

struct RidgeLine {
    std::string name;
    double slope = 0.0;
    double intercept = 0.0;  // E_M = slope * E_N + intercept
};

struct OverlapMap {
    Eigen::MatrixXd values;  // row M (exact), column N (effective), already divided by normalization
    double normalization = 1.0;
    std::vector<RidgeLine> ridges;
};

// |<M|N_eff>| with the diagonal replaced by sqrt(1 - |<N|N_eff>|^2), divided by (J dt)^2.
// Pairing by energy order. h_ref enters the two off-diagonal reference lines.
OverlapMap overlap_map(const SpectrumReport& exact, const SpectrumReport& effective, double dt, double J = 1.0,
                       double h_ref = 0.0);

struct ProbabilityDefect {
    double delta_P = 0.0;
    double C_N = 0.0;  // delta_P / (J dt)^4
    std::vector<int> cluster;       // levels degenerate with N (excluded from the sum)
    std::vector<double> flagged;    // |<N'|dH|N>|^2 for those levels
};

// Second order sum over N' outside the degenerate cluster of N; averaged over the cluster.
ProbabilityDefect probability_defect(int N, const SpectrumReport& exact, const DenseOperator& deltaH,
                                     double Jdt = 0.0, double degeneracy_tol = 1e-10);

// 1 - |<N|N_eff>|^2, generalised to 1 - Tr(P_C P_C_eff)/|C| over the degenerate cluster C of N.
double overlap_defect(int N, const SpectrumReport& exact, const SpectrumReport& effective,
                      double degeneracy_tol = 1e-10);

struct RigorousBound {
    double one_step = 0.0;
    double accumulated = 0.0;  // (t/dt) * one_step
    double t_bound = 0.0;      // time at which the accumulated bound reaches order one
};

// x = 3 n Lambda dt; one step C x^3/n + x^4/12 e^x with C = 1/4.
RigorousBound rigorous_bound(int n, double Lambda, double dt, double t);

// Largest singular value.
double spectral_norm(const Eigen::MatrixXcd& m);

struct WannierStarkLevel {
    int N = 0;
    double energy = 0.0;  // alpha a N
    Eigen::VectorXd amplitudes;  // J_{n-N}(J/alpha), n = 1..L
};

// Analytic ladder for h_n = alpha a n. Levels N in [N_min, N_max].
std::vector<WannierStarkLevel> wannier_stark_oracle(double alpha, const ChainSpec& spec, int N_min, int N_max);

}  // namespace trotter
