#include "trotter/spectral_toolkit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace trotter {

SpectrumReport diagonalize(const DenseOperator& H, SpectrumSource source, double dt, Ordering ordering) {
    if (H.m.rows() != H.m.cols()) throw std::invalid_argument("diagonalize: matrix is not square");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H.m);
    if (es.info() != Eigen::Success) throw std::runtime_error("diagonalize: eigensolver failed");
    SpectrumReport r;
    r.energies = es.eigenvalues();
    r.states = es.eigenvectors();
    r.source = source;
    r.dt = dt;
    r.ordering = ordering;
    return r;
}

SpectrumReport diagonalize(const ChainSpec& spec) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hamiltonian_real(spec));
    SpectrumReport r;
    r.energies = es.eigenvalues();
    r.states = es.eigenvectors().cast<cplx>();
    return r;
}

SpectrumReport diagonalize(const EffectiveHamiltonian& heff, const TrotterPlan& plan) {
    return diagonalize(heff.H, SpectrumSource::effective, plan.dt, plan.ordering);
}

namespace {

double left_projected(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b, int n_left) {
    return std::real(a.head(n_left).dot(b.head(n_left)));
}

cplx left_overlap(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b, int n_left) {
    return a.head(n_left).dot(b.head(n_left));
}

}  // namespace

DoubletSearch find_doublets(const SpectrumReport& report, const ChainSpec& spec, double barrier_center,
                            double min_localisation) {
    const int L = static_cast<int>(report.energies.size());
    if (L != spec.L) throw std::invalid_argument("find_doublets: spectrum and chain sizes differ");
    if (!(barrier_center > 1.0 && barrier_center < L))
        throw std::invalid_argument("find_doublets: barrier centre must lie inside the chain");

    // sites n < centre are left, n > centre are right (1-indexed)
    const int n_left = static_cast<int>(std::ceil(barrier_center)) - 1;
    const int n_right_start = static_cast<int>(std::floor(barrier_center));  // 0-based first right site
    const int i0 = std::max(1, static_cast<int>(std::floor(barrier_center)));
    const int i1 = std::min(L, static_cast<int>(std::ceil(barrier_center)));
    const double ceiling = std::max(spec.h[i0 - 1], spec.h[i1 - 1]) - spec.J;

    DoubletSearch out;
    int i = 0;
    while (i + 1 < L && report.energies(i + 1) < ceiling) {
        const Eigen::VectorXcd a = report.states.col(i), b = report.states.col(i + 1);
        Eigen::Matrix2cd W;
        W(0, 0) = left_projected(a, a, n_left);
        W(1, 1) = left_projected(b, b, n_left);
        W(0, 1) = left_overlap(a, b, n_left);
        W(1, 0) = std::conj(W(0, 1));
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(W);
        const double loc = es.eigenvalues()(1) - es.eigenvalues()(0);
        if (loc < min_localisation) {
            out.flagged.push_back(i);
            ++i;
            continue;
        }
        // columns: right-localised (small left weight), left-localised
        const Eigen::Vector2cd rR = es.eigenvectors().col(0), rL = es.eigenvectors().col(1);
        const double Ea = report.energies(i), Eb = report.energies(i + 1);
        const double HLL = std::norm(rL(0)) * Ea + std::norm(rL(1)) * Eb;
        const double HRR = std::norm(rR(0)) * Ea + std::norm(rR(1)) * Eb;

        DoubletReport d;
        d.index = static_cast<int>(out.doublets.size()) + 1;
        d.lower = i;
        d.upper = i + 1;
        d.E_mean = 0.5 * (Ea + Eb);
        d.eta = 0.5 * (Eb - Ea);
        d.epsilon = HLL - HRR;
        d.left_weight = a.head(n_left).squaredNorm();
        d.right_weight = a.tail(L - n_right_start).squaredNorm();
        d.localisation = loc;
        out.doublets.push_back(d);
        i += 2;
    }
    return out;
}

int match_doublet(const SpectrumReport& reference, int ref_lower, int ref_upper, const SpectrumReport& target,
                  const DoubletSearch& candidates) {
    Eigen::MatrixXcd R(reference.states.rows(), 2);
    R.col(0) = reference.states.col(ref_lower);
    R.col(1) = reference.states.col(ref_upper);
    int best = -1;
    double best_overlap = -1.0;
    for (std::size_t k = 0; k < candidates.doublets.size(); ++k) {
        const auto& d = candidates.doublets[k];
        Eigen::MatrixXcd T(target.states.rows(), 2);
        T.col(0) = target.states.col(d.lower);
        T.col(1) = target.states.col(d.upper);
        const double ov = (R.adjoint() * T).squaredNorm() / 2.0;
        if (ov > best_overlap) {
            best_overlap = ov;
            best = static_cast<int>(k);
        }
    }
    return best;
}

double ResonantModel::occupancy(double t) const {
    if (omega == 0.0) return 1.0;
    const double r = epsilon / (2.0 * omega);
    const double c = std::cos(omega * t);
    return r * r + (1.0 - r * r) * c * c;
}

ResonantModel resonant_model(double epsilon, double eta) {
    if (eta < 0.0) throw std::invalid_argument("resonant_model: eta must be non-negative");
    ResonantModel m;
    m.epsilon = epsilon;
    m.eta = eta;
    m.omega = std::sqrt(eta * eta + 0.25 * epsilon * epsilon);
    m.eigenvalues[0] = -m.omega;
    m.eigenvalues[1] = m.omega;
    return m;
}

OverlapMap overlap_map(const SpectrumReport& exact, const SpectrumReport& effective, double dt, double J,
                       double h_ref) {
    if (exact.states.rows() != effective.states.rows())
        throw std::invalid_argument("overlap_map: spectra have different dimensions");
    OverlapMap out;
    const Eigen::MatrixXcd S = exact.states.adjoint() * effective.states;
    out.values = S.cwiseAbs();
    for (Eigen::Index n = 0; n < out.values.rows(); ++n)
        out.values(n, n) = std::sqrt(std::max(0.0, 1.0 - std::norm(S(n, n))));
    const double jdt = J * dt;
    out.normalization = jdt > 0.0 ? jdt * jdt : 1.0;
    out.values /= out.normalization;
    out.ridges = {{"E_M = E_N", 1.0, 0.0},
                  {"E_M = 2J - (E_N + h)", -1.0, 2.0 * J - h_ref},
                  {"E_M = 2J + (E_N + h)", 1.0, 2.0 * J + h_ref}};
    return out;
}

namespace {

std::vector<int> degenerate_cluster(const Eigen::VectorXd& E, int N, double tol) {
    int lo = N, hi = N;
    while (lo > 0 && std::abs(E(lo - 1) - E(N)) < tol) --lo;
    while (hi + 1 < E.size() && std::abs(E(hi + 1) - E(N)) < tol) ++hi;
    std::vector<int> c;
    for (int i = lo; i <= hi; ++i) c.push_back(i);
    return c;
}

}  // namespace

ProbabilityDefect probability_defect(int N, const SpectrumReport& exact, const DenseOperator& deltaH, double Jdt,
                                     double degeneracy_tol) {
    const int L = static_cast<int>(exact.energies.size());
    if (N < 0 || N >= L) throw std::invalid_argument("probability_defect: level index out of range");
    if (deltaH.dim() != L) throw std::invalid_argument("probability_defect: dimension mismatch");
    ProbabilityDefect out;
    out.cluster = degenerate_cluster(exact.energies, N, degeneracy_tol);
    const Eigen::MatrixXcd X = exact.states.adjoint() * deltaH.m * exact.states;
    double total = 0.0;
    for (int c : out.cluster) {
        double s = 0.0;
        for (int m = 0; m < L; ++m) {
            if (std::find(out.cluster.begin(), out.cluster.end(), m) != out.cluster.end()) continue;
            const double d = exact.energies(c) - exact.energies(m);
            s += std::norm(X(m, c)) / (d * d);
        }
        total += s;
    }
    out.delta_P = total / out.cluster.size();
    for (int m : out.cluster)
        if (m != N) out.flagged.push_back(std::norm(X(m, N)));
    if (Jdt > 0.0) out.C_N = out.delta_P / std::pow(Jdt, 4);
    return out;
}

double overlap_defect(int N, const SpectrumReport& exact, const SpectrumReport& effective, double degeneracy_tol) {
    const int L = static_cast<int>(exact.energies.size());
    if (N < 0 || N >= L) throw std::invalid_argument("overlap_defect: level index out of range");
    const auto C = degenerate_cluster(exact.energies, N, degeneracy_tol);
    Eigen::MatrixXcd A(L, C.size()), B(L, C.size());
    for (std::size_t k = 0; k < C.size(); ++k) {
        A.col(k) = exact.states.col(C[k]);
        B.col(k) = effective.states.col(C[k]);
    }
    return 1.0 - (A.adjoint() * B).squaredNorm() / static_cast<double>(C.size());
}

RigorousBound rigorous_bound(int n, double Lambda, double dt, double t) {
    if (n <= 0 || Lambda < 0.0 || dt < 0.0 || t < 0.0)
        throw std::invalid_argument("rigorous_bound: arguments must be non-negative (n positive)");
    constexpr double C = 0.25;
    const double x = 3.0 * n * Lambda * dt;
    RigorousBound b;
    b.one_step = C * x * x * x / n + x * x * x * x / 12.0 * std::exp(x);
    b.accumulated = dt > 0.0 ? (t / dt) * b.one_step : 0.0;
    b.t_bound = (x > 0.0 && Lambda > 0.0) ? 1.0 / (Lambda * x * x) : std::numeric_limits<double>::infinity();
    return b;
}

double spectral_norm(const Eigen::MatrixXcd& m) {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
    return svd.singularValues()(0);
}

namespace {

double bessel_j_int(int k, double x) {
    if (k >= 0) return std::cyl_bessel_j(static_cast<double>(k), x);
    const double v = std::cyl_bessel_j(static_cast<double>(-k), x);
    return (k % 2 == 0) ? v : -v;
}

}  // namespace

std::vector<WannierStarkLevel> wannier_stark_oracle(double alpha, const ChainSpec& spec, int N_min, int N_max) {
    if (!(alpha > 0.0)) throw std::invalid_argument("wannier_stark_oracle: alpha must be positive");
    if (N_max < N_min) throw std::invalid_argument("wannier_stark_oracle: empty level range");
    std::vector<WannierStarkLevel> out;
    const double z = spec.J / alpha;
    for (int N = N_min; N <= N_max; ++N) {
        WannierStarkLevel lv;
        lv.N = N;
        lv.energy = alpha * spec.a * N;
        lv.amplitudes.resize(spec.L);
        for (int n = 1; n <= spec.L; ++n) lv.amplitudes(n - 1) = bessel_j_int(n - N, z);
        out.push_back(std::move(lv));
    }
    return out;
}

}  // namespace trotter
