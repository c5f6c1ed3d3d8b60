#include "trotter/trotter_engine.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <omp.h>

namespace trotter {

std::string to_string(Ordering o) {
    switch (o) {
    case Ordering::even_odd_potential: return "even-odd-potential";
    case Ordering::even_potential_odd: return "even-potential-odd";
    case Ordering::split: return "split";
    }
    return "even-odd-potential";
}

Ordering ordering_from_string(const std::string& name) {
    if (name == "even-odd-potential") return Ordering::even_odd_potential;
    if (name == "even-potential-odd") return Ordering::even_potential_odd;
    if (name == "split") return Ordering::split;
    throw std::invalid_argument("unknown ordering '" + name +
                                "' (expected even-odd-potential, even-potential-odd or split)");
}

void TrotterPlan::validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("TrotterPlan: dt must be positive and finite");
    if (ordering == Ordering::split && !(split_alpha >= 0.0 && split_alpha <= 1.0))
        throw std::invalid_argument("TrotterPlan: split alpha must lie in [0, 1]");
}

namespace {

GateTerm bond_term(int L, double J, bool odd_bonds) {
    GateTerm t;
    t.diag.assign(L, 0.0);
    t.coupling = -0.5 * J;
    // 1-indexed bond (n, n+1) with n odd <=> 0-based left site even
    for (int k = odd_bonds ? 0 : 1; k + 1 < L; k += 2) t.bonds.push_back(k);
    return t;
}

GateTerm potential_term(const ChainSpec& spec, double weight) {
    GateTerm t;
    t.diag.resize(spec.L);
    for (int n = 0; n < spec.L; ++n) t.diag[n] = weight * spec.h[n];
    return t;
}

DenseOperator term_to_operator(const GateTerm& t) {
    const int L = static_cast<int>(t.diag.size());
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(L, L);
    for (int n = 0; n < L; ++n) m(n, n) = t.diag[n];
    for (int k : t.bonds) {
        m(k, k + 1) = t.coupling;
        m(k + 1, k) = t.coupling;
    }
    return {m, OperatorTag::hermitian};
}

}  // namespace

KineticParts kinetic_parts(const ChainSpec& spec) {
    spec.validate();
    return {term_to_operator(bond_term(spec.L, spec.J, false)), term_to_operator(bond_term(spec.L, spec.J, true)),
            term_to_operator(potential_term(spec, 1.0))};
}

std::vector<GateTerm> ordering_terms(const ChainSpec& spec, const TrotterPlan& plan) {
    spec.validate();
    const GateTerm ke = bond_term(spec.L, spec.J, false);
    const GateTerm ko = bond_term(spec.L, spec.J, true);
    switch (plan.ordering) {
    case Ordering::even_odd_potential: return {ke, ko, potential_term(spec, 1.0)};
    case Ordering::even_potential_odd: return {ke, potential_term(spec, 1.0), ko};
    case Ordering::split: {
        GateTerm a = ke, b = ko;
        for (int n = 0; n < spec.L; ++n) {
            a.diag[n] = plan.split_alpha * spec.h[n];
            b.diag[n] = (1.0 - plan.split_alpha) * spec.h[n];
        }
        return {a, b};
    }
    }
    return {};
}

std::vector<DenseOperator> ordering_operators(const ChainSpec& spec, const TrotterPlan& plan) {
    std::vector<DenseOperator> ops;
    for (const auto& t : ordering_terms(spec, plan)) ops.push_back(term_to_operator(t));
    return ops;
}

ExpLayer ExpLayer::build(const GateTerm& term, double tau) {
    ExpLayer layer;
    const int L = static_cast<int>(term.diag.size());
    std::vector<char> covered(L, 0);
    for (int k : term.bonds) {
        const double a = term.diag[k], d = term.diag[k + 1], b = term.coupling;
        const double mean = 0.5 * (a + d), half = 0.5 * (a - d);
        const double w = std::hypot(half, b);
        const cplx phase = std::exp(cplx(0.0, -tau * mean));
        const double c = std::cos(w * tau);
        // sin(w tau)/w, finite as w -> 0
        const double s = w > 0.0 ? std::sin(w * tau) / w : tau;
        const cplx mi(0.0, -1.0);
        layer.bond_left.push_back(k);
        layer.blocks.push_back({phase * (c + mi * s * half), phase * (mi * s * b), phase * (mi * s * b),
                                phase * (c - mi * s * half)});
        covered[k] = covered[k + 1] = 1;
    }
    for (int n = 0; n < L; ++n) {
        if (covered[n] || term.diag[n] == 0.0) continue;
        layer.solo.push_back(n);
        layer.solo_phase.push_back(std::exp(cplx(0.0, -tau * term.diag[n])));
    }
    return layer;
}

void ExpLayer::apply(Eigen::Ref<Eigen::MatrixXcd> states) const {
    for (std::size_t i = 0; i < bond_left.size(); ++i) {
        const int k = bond_left[i];
        const auto& B = blocks[i];
        for (Eigen::Index c = 0; c < states.cols(); ++c) {
            const cplx x = states(k, c), y = states(k + 1, c);
            states(k, c) = B[0] * x + B[1] * y;
            states(k + 1, c) = B[2] * x + B[3] * y;
        }
    }
    for (std::size_t i = 0; i < solo.size(); ++i) states.row(solo[i]) *= solo_phase[i];
}

void ExpLayer::apply(cplx* psi) const {
    for (std::size_t i = 0; i < bond_left.size(); ++i) {
        const int k = bond_left[i];
        const auto& B = blocks[i];
        const cplx x = psi[k], y = psi[k + 1];
        psi[k] = B[0] * x + B[1] * y;
        psi[k + 1] = B[2] * x + B[3] * y;
    }
    for (std::size_t i = 0; i < solo.size(); ++i) psi[solo[i]] *= solo_phase[i];
}

TrotterCircuit::TrotterCircuit(const ChainSpec& spec, const TrotterPlan& plan) : L_(spec.L), plan_(plan) {
    plan.validate();
    for (const auto& t : ordering_terms(spec, plan)) {
        half_.push_back(ExpLayer::build(t, 0.5 * plan.dt));
        full_.push_back(ExpLayer::build(t, plan.dt));
    }
}

void TrotterCircuit::apply_step(Eigen::Ref<Eigen::MatrixXcd> states) const {
    const int n = static_cast<int>(half_.size());
    // rightmost factor acts first: A_n/2, ..., A_2/2, A_1, A_2/2, ..., A_n/2
    for (int j = n - 1; j >= 1; --j) half_[j].apply(states);
    full_[0].apply(states);
    for (int j = 1; j < n; ++j) half_[j].apply(states);
}

void TrotterCircuit::evolve(Eigen::Ref<Eigen::MatrixXcd> states, long steps) const {
    if (steps <= 0) return;
    const int n = static_cast<int>(half_.size());
    half_[n - 1].apply(states);
    for (long s = 0; s < steps; ++s) {
        for (int j = n - 2; j >= 1; --j) half_[j].apply(states);
        full_[0].apply(states);
        for (int j = 1; j <= n - 2; ++j) half_[j].apply(states);
        if (s + 1 < steps)
            full_[n - 1].apply(states);
        else
            half_[n - 1].apply(states);
    }
}

void TrotterCircuit::evolve(Eigen::VectorXcd& psi, long steps) const {
    if (steps <= 0) return;
    cplx* p = psi.data();
    const int n = static_cast<int>(half_.size());
    half_[n - 1].apply(p);
    for (long s = 0; s < steps; ++s) {
        for (int j = n - 2; j >= 1; --j) half_[j].apply(p);
        full_[0].apply(p);
        for (int j = 1; j <= n - 2; ++j) half_[j].apply(p);
        if (s + 1 < steps)
            full_[n - 1].apply(p);
        else
            half_[n - 1].apply(p);
    }
}

void TrotterCircuit::evolve_parallel(Eigen::Ref<Eigen::MatrixXcd> states, long steps, int workers) const {
    const Eigen::Index cols = states.cols();
    const int threads = workers > 0 ? workers : omp_get_max_threads();
#pragma omp parallel for schedule(static) num_threads(threads)
    for (Eigen::Index c = 0; c < cols; ++c) {
        Eigen::VectorXcd psi = states.col(c);
        evolve(psi, steps);
        states.col(c) = psi;
    }
}

Eigen::MatrixXcd TrotterCircuit::unitary() const {
    Eigen::MatrixXcd U = Eigen::MatrixXcd::Identity(L_, L_);
    apply_step(U);
    return U;
}

DenseOperator step_unitary(const ChainSpec& spec, const TrotterPlan& plan) {
    return {TrotterCircuit(spec, plan).unitary(), OperatorTag::unitary};
}

Eigen::VectorXcd evolve(const Eigen::VectorXcd& state, const ChainSpec& spec, const TrotterPlan& plan, long steps) {
    if (state.size() != spec.L) throw std::invalid_argument("evolve: state dimension does not match the chain");
    if (std::abs(state.norm() - 1.0) > 1e-8) throw std::invalid_argument("evolve: state is not normalised");
    if (steps < 0) throw std::invalid_argument("evolve: negative step count");
    Eigen::VectorXcd psi = state;
    TrotterCircuit(spec, plan).evolve(psi, steps);
    return psi;
}

EffectiveHamiltonian effective_hamiltonian(const DenseOperator& U, double dt, double spectral_width) {
    if (!(dt > 0.0)) throw std::invalid_argument("effective_hamiltonian: dt must be positive");
    if (U.m.rows() != U.m.cols()) throw std::invalid_argument("effective_hamiltonian: matrix is not square");
    const int L = U.dim();
    constexpr double pi = std::numbers::pi;

    // U is normal, so its Schur form is diagonal and the Schur vectors are orthonormal eigenvectors.
    Eigen::ComplexSchur<Eigen::MatrixXcd> schur(U.m);
    if (schur.info() != Eigen::Success) throw std::runtime_error("effective_hamiltonian: Schur decomposition failed");
    const Eigen::MatrixXcd& T = schur.matrixT();
    const Eigen::MatrixXcd& Q = schur.matrixU();

    EffectiveHamiltonian out;
    std::vector<double> theta(L);
    for (int i = 0; i < L; ++i) {
        // U v = exp(-i theta) v, theta in (-pi, pi]
        double t = -std::arg(T(i, i));
        if (t <= -pi) t += 2.0 * pi;
        theta[i] = t;
    }
    std::vector<int> order(L);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return theta[a] < theta[b]; });

    out.energies.resize(L);
    out.eigenvectors.resize(L, L);
    for (int i = 0; i < L; ++i) {
        out.energies(i) = theta[order[i]] / dt;
        out.eigenvectors.col(i) = Q.col(order[i]);
    }

    // orthonormalise inside degenerate clusters
    constexpr double cluster_gap = 1e-12;
    for (int i = 0; i < L;) {
        int j = i + 1;
        while (j < L && (theta[order[j]] - theta[order[j - 1]]) < cluster_gap) ++j;
        if (j - i > 1) {
            Eigen::HouseholderQR<Eigen::MatrixXcd> qr(out.eigenvectors.middleCols(i, j - i));
            out.eigenvectors.middleCols(i, j - i) =
                qr.householderQ() * Eigen::MatrixXcd::Identity(L, j - i);
        }
        i = j;
    }
    // eigenphases straddling the branch cut
    const double lo = theta[order.front()], hi = theta[order.back()];
    if (L > 1 && (pi - hi) < cluster_gap && (lo + pi) < cluster_gap)
        out.warnings.push_back("degenerate-branch: eigenphases within 1e-12 on both sides of the +-pi cut");
    else if ((pi - hi) < cluster_gap)
        out.warnings.push_back("branch-boundary: eigenphase at +pi assigned to the positive branch");

    Eigen::MatrixXcd H = out.eigenvectors * out.energies.asDiagonal() * out.eigenvectors.adjoint();
    H = 0.5 * (H + H.adjoint()).eval();
    out.H = {H, OperatorTag::hermitian};
    out.folding = spectral_width > 2.0 * pi / dt;
    if (out.folding) out.warnings.push_back("folding: target spectral width exceeds 2 pi / dt");
    return out;
}

EffectiveHamiltonian effective_hamiltonian(const ChainSpec& spec, const TrotterPlan& plan) {
    return effective_hamiltonian(step_unitary(spec, plan), plan.dt, 2.0 * spec.J + spec.potential_range());
}

namespace {

Eigen::MatrixXcd comm(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) { return a * b - b * a; }

}  // namespace

DenseOperator bch_defect(const std::vector<DenseOperator>& operators) {
    if (operators.empty()) throw std::invalid_argument("bch_defect: empty operator list");
    const Eigen::Index L = operators.front().m.rows();
    for (const auto& op : operators)
        if (op.m.rows() != L || op.m.cols() != L) throw std::invalid_argument("bch_defect: dimension mismatch");
    Eigen::MatrixXcd D = Eigen::MatrixXcd::Zero(L, L);
    Eigen::MatrixXcd Hk = operators.front().m;
    for (std::size_t k = 1; k < operators.size(); ++k) {
        const Eigen::MatrixXcd& A = operators[k].m;
        D -= (comm(Hk, comm(Hk, A)) - 0.5 * comm(A, comm(A, Hk))) / 12.0;
        Hk += A;
    }
    D = 0.5 * (D + D.adjoint()).eval();
    return {D, OperatorTag::hermitian};
}

LocalityProfile locality_profile(const DenseOperator& H, double floor) {
    const int L = H.dim();
    LocalityProfile out;
    out.max_abs.assign(L, 0.0);
    for (int k = 0; k < L; ++k)
        for (int n = 0; n + k < L; ++n) out.max_abs[k] = std::max(out.max_abs[k], std::abs(H.m(n, n + k)));

    const double cut = floor * std::max(out.max_abs[0], 1e-300);
    int kmax = 3;
    while (kmax + 1 < L && out.max_abs[kmax + 1] > cut) ++kmax;
    if (kmax - 4 + 1 < 2) return out;
    // least-squares slope of log max_abs over k = 4..kmax
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const int m = kmax - 3;
    for (int k = 4; k <= kmax; ++k) {
        const double y = std::log(out.max_abs[k]);
        sx += k;
        sy += y;
        sxx += double(k) * k;
        sxy += k * y;
    }
    const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    out.fit_ratio = std::exp(slope);
    out.fit_k_min = 4;
    out.fit_k_max = kmax;
    return out;
}

}  // namespace trotter
