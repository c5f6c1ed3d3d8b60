#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "trotter/chain_model.hpp"

namespace trotter {

enum class KineticKind { bare, corrected, large_step };

std::string to_string(KineticKind k);
KineticKind kinetic_kind_from_string(const std::string& name);

// Classical Hamiltonian T(p) + h(x) on the coordinate x in [0, L+1]; sites sit at integers
// and x = 0, L+1 are the hard walls.
class PhaseSpaceModel {
public:
    PhaseSpaceModel(const ChainSpec& spec, KineticKind kind, double dt = 0.0);

    static PhaseSpaceModel bare(const ChainSpec& spec) { return {spec, KineticKind::bare}; }
    static PhaseSpaceModel corrected(const ChainSpec& spec, double dt) { return {spec, KineticKind::corrected, dt}; }
    static PhaseSpaceModel large_step(const ChainSpec& spec, double dt) { return {spec, KineticKind::large_step, dt}; }

    KineticKind kind() const { return kind_; }
    double J() const { return J_; }
    double dt() const { return dt_; }
    double potential(double x) const { return h_(x); }
    double x_lo() const { return 0.0; }
    double x_hi() const { return h_.size() + 1.0; }
    const ChainSpec& spec() const { return spec_; }

    double kinetic(double p) const;   // T(p)
    double velocity(double p) const;  // dT/dp
    // cos p solving T(p) + h(x) = E on the branch continuous with the bare solution.
    // |c| <= 1 means classically allowed.
    double cos_momentum(double E, double x) const;
    double energy(double x, double p) const { return kinetic(p) + potential(x); }

private:
    ChainSpec spec_;
    SmoothPotential h_;
    KineticKind kind_;
    double J_;
    double dt_;
};

// Complex momentum: real in allowed regions, i|p| beyond a standard point, pi + i|p| beyond an anomalous one.
cplx classical_momentum(const PhaseSpaceModel& model, double E, double x);

enum class TurningKind { standard, anomalous, wall };

struct TurningPoint {
    double x = 0.0;
    TurningKind kind = TurningKind::standard;
    double delta = 0.0;  // x reduced mod 1
};

std::vector<TurningPoint> turning_points(const PhaseSpaceModel& model, double E, double scan_step = 0.01);

// Allowed interval around x0 (|c(x0)| < 1). Ends reaching x = 0 or L+1 are reported as walls.
std::optional<std::pair<TurningPoint, TurningPoint>> allowed_interval(const PhaseSpaceModel& model, double E,
                                                                      double x0, double scan_step = 0.01);

struct ActionResult {
    double S12 = 0.0;
    double T12 = 0.0;
};

// S12 = int p dx over [x1, x2], T12 = 2 int dp/dE dx (2 dS12/dE when no end sits at p = pi).
// Throws if the interval is not allowed.
ActionResult action_allowed(const PhaseSpaceModel& model, double E, double x1, double x2);

enum class Boundary { two_turning_points, hard_wall_left, hard_wall_right };

struct Well {
    double x_bottom = 1.0;  // a point inside the allowed region
    Boundary boundary = Boundary::two_turning_points;
    double e_min = std::numeric_limits<double>::quiet_NaN();  // defaults: bottom of the band at x_bottom
    double e_max = std::numeric_limits<double>::quiet_NaN();  // defaults: lowest confining barrier top
};

struct ShiftReport {
    double dS12 = 0.0;
    double dE = 0.0;
    double dS_B = 0.0;
    double dE_N = 0.0;
    double eta_ratio = 1.0;
    double gamma_ratio = 1.0;
    bool perturbative_exceeded = false;
};

struct LevelPrediction {
    int N = 0;
    double E = 0.0;
    double spacing = 0.0;  // 2 pi / T12
    double S12 = 0.0;
    double T12 = 0.0;
    TurningPoint x1;
    TurningPoint x2;
    int n_cl = 0;  // sites inside [x1, x2]
    double S_B = 0.0;
    double eta = 0.0;
    double Gamma = 0.0;
    ShiftReport shifts;
};

// Bohr rule S12 = pi (N + 1/2) + theta2 - theta1 with theta = -pi/2 + pi x at anomalous points,
// or S = pi (n - 1/4) against a hard wall (reported as N = n - 1).
std::vector<LevelPrediction> bohr_levels(const PhaseSpaceModel& model, const Well& well);

// Continuous level index nu(E), equal to N at the N-th level; NaN when the well geometry fails at E.
double quantization_phase(const PhaseSpaceModel& model, const Well& well, double E);

struct BarrierReport {
    double S_B = 0.0;
    double xa = 0.0;
    double xb = 0.0;
    int n_barr = 0;
    bool interior_allowed = false;  // an allowed pocket sits inside the barrier
};

// Under-barrier action between the allowed region containing x_left and the one containing x_right.
BarrierReport barrier_action(const PhaseSpaceModel& model, double E, double x_left, double x_right);

struct TunnelingRates {
    double eta = 0.0;
    double Gamma = 0.0;
    double S_B = 0.0;
};

// eta = sqrt(D_L D_R)/(2 pi) e^{-S_B}, Gamma = (D_L/2 pi) e^{-2 S_B}, S_B at the mean energy.
TunnelingRates tunneling_rates(const LevelPrediction& left, const LevelPrediction& right, const PhaseSpaceModel& model);

// J (J dt)^2/24 cos p sin^2 p
double correction_dH(double x, double p, double dt, double J = 1.0);

// Fills the shift fields of `level` (bare model). With a partner the resonance shift
// dE_N = -dS_L/T_L - dS_R/T_R is used in the exponent.
ShiftReport perturbation_shifts(const LevelPrediction& level, const PhaseSpaceModel& model, double dt,
                                const LevelPrediction* partner = nullptr);

struct DetuningReport {
    double epsilon_eff = 0.0;
    double dt_threshold = 0.0;  // (J dt*)^2 = eta n_cl / Delta
    bool criterion_ok = true;
};

DetuningReport detuning_effective(double eps0, const LevelPrediction& left, const LevelPrediction& right,
                                  double eta, double dt, double J = 1.0);

struct LargeStepKinetic {
    double T = 0.0;
    double theta = 0.0;
    double v = 0.0;
    double p_c = 0.0;  // imaginary part of the branch point
};

LargeStepKinetic large_step_kinetic(double p, double dt, double J = 1.0);

struct PortraitPoint {
    double E, x, p;
};

struct PortraitRegion {
    double E = 0.0;
    double x1 = 0.0;
    double x2 = 0.0;
    double area = 0.0;  // 2 int acos(c) dx, the area around p = 0
};

struct PhasePortrait {
    std::vector<PortraitPoint> points;
    std::vector<PortraitRegion> regions;
};

PhasePortrait phase_portrait(const PhaseSpaceModel& model, const std::vector<double>& energies, int samples = 2000);

struct PeriodChange {
    double dT1_over_T = 0.0;
    double dT2_over_T = 0.0;
};

PeriodChange period_change(const LevelPrediction& level, const PhaseSpaceModel& model, double dt);

// Quadrature with sqrt substitution at both ends (integrable 1/sqrt singularities).
double integrate_endpoint_singular(const std::function<double(double)>& f, double a, double b, double tol = 1e-10);

}  // namespace trotter
