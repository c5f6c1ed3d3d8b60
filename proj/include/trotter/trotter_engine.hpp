#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "trotter/chain_model.hpp"
#include "trotter/dense_operator.hpp"

namespace trotter {

// Operator lists, innermost term first:
//   even_odd_potential : A1 = K_even, A2 = K_odd, A3 = P
//   even_potential_odd : A1 = K_even, A2 = P,     A3 = K_odd
//   split              : A1 = K_even + alpha P, A2 = K_odd + (1 - alpha) P
enum class Ordering { even_odd_potential, even_potential_odd, split };

std::string to_string(Ordering o);
Ordering ordering_from_string(const std::string& name);

struct TrotterPlan {
    double dt = 0.1;
    Ordering ordering = Ordering::even_odd_potential;
    double split_alpha = 0.5;

    void validate() const;
};

struct KineticParts {
    DenseOperator K_even;
    DenseOperator K_odd;
    DenseOperator P;
};

// K_odd holds bonds (n, n+1) with odd n (1-indexed), K_even those with even n.
KineticParts kinetic_parts(const ChainSpec& spec);

// One term of an ordering: disjoint two-site blocks plus on-site values.
struct GateTerm {
    std::vector<double> diag;
    std::vector<int> bonds;  // 0-based left site of each bond
    double coupling = 0.0;   // off-diagonal element of every bond
};

std::vector<GateTerm> ordering_terms(const ChainSpec& spec, const TrotterPlan& plan);
std::vector<DenseOperator> ordering_operators(const ChainSpec& spec, const TrotterPlan& plan);

// exp(-i tau A) for one GateTerm, stored as 2x2 blocks and single-site phases.
struct ExpLayer {
    std::vector<int> bond_left;
    std::vector<std::array<cplx, 4>> blocks;  // row-major 2x2
    std::vector<int> solo;
    std::vector<cplx> solo_phase;

    static ExpLayer build(const GateTerm& term, double tau);
    // Acts on every column of `states` (rows are sites).
    void apply(Eigen::Ref<Eigen::MatrixXcd> states) const;
    void apply(cplx* psi) const;
};

class TrotterCircuit {
public:
    TrotterCircuit(const ChainSpec& spec, const TrotterPlan& plan);

    int dim() const { return L_; }
    const TrotterPlan& plan() const { return plan_; }

    // One unmerged symmetric step applied to every column.
    void apply_step(Eigen::Ref<Eigen::MatrixXcd> states) const;
    // `steps` steps with the outer half-step gates of neighbouring steps merged.
    void evolve(Eigen::Ref<Eigen::MatrixXcd> states, long steps) const;
    void evolve(Eigen::VectorXcd& psi, long steps) const;
    // Same as evolve, columns distributed over OpenMP threads.
    void evolve_parallel(Eigen::Ref<Eigen::MatrixXcd> states, long steps, int workers = 0) const;

    Eigen::MatrixXcd unitary() const;

private:
    int L_;
    TrotterPlan plan_;
    std::vector<ExpLayer> half_;
    std::vector<ExpLayer> full_;
};

DenseOperator step_unitary(const ChainSpec& spec, const TrotterPlan& plan);

// Gate-level evolution of a normalised state. Throws if |psi| deviates from 1 by more than 1e-8.
Eigen::VectorXcd evolve(const Eigen::VectorXcd& state, const ChainSpec& spec, const TrotterPlan& plan,
                        long steps);

struct EffectiveHamiltonian {
    DenseOperator H;
    Eigen::VectorXd energies;       // quasi-energies in (-pi/dt, pi/dt], one per eigenvector
    Eigen::MatrixXcd eigenvectors;  // orthonormal columns
    bool folding = false;
    std::vector<std::string> warnings;
};

// H_eff = -(1/(i dt)) Ln U. spectral_width > 2 pi/dt raises the folding flag.
EffectiveHamiltonian effective_hamiltonian(const DenseOperator& U, double dt, double spectral_width = 0.0);
EffectiveHamiltonian effective_hamiltonian(const ChainSpec& spec, const TrotterPlan& plan);

// Leading dt^2 coefficient of H_eff - H for the symmetric product of `operators`
// (innermost first).
DenseOperator bch_defect(const std::vector<DenseOperator>& operators);

struct LocalityProfile {
    std::vector<double> max_abs;  // index k = distance from the diagonal
    double fit_ratio = 0.0;       // geometric decay ratio fitted for k > 3
    int fit_k_min = 0;
    int fit_k_max = -1;
};

// floor: entries below floor * max_abs[0] are treated as numerical noise.
LocalityProfile locality_profile(const DenseOperator& H, double floor = 1e-11);

}  // namespace trotter
