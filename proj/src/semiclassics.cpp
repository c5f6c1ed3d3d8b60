#include "trotter/semiclassics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

namespace trotter {

namespace {
constexpr double pi = std::numbers::pi;
}

std::string to_string(KineticKind k) {
    switch (k) {
    case KineticKind::bare: return "bare";
    case KineticKind::corrected: return "corrected";
    case KineticKind::large_step: return "large_step";
    }
    return "bare";
}

KineticKind kinetic_kind_from_string(const std::string& name) {
    if (name == "bare") return KineticKind::bare;
    if (name == "corrected") return KineticKind::corrected;
    if (name == "large_step" || name == "large-step") return KineticKind::large_step;
    throw std::invalid_argument("unknown kinetic kind '" + name + "'");
}

PhaseSpaceModel::PhaseSpaceModel(const ChainSpec& spec, KineticKind kind, double dt)
    : spec_(spec), h_(spec), kind_(kind), J_(spec.J), dt_(dt) {
    if (kind != KineticKind::bare && !(dt > 0.0))
        throw std::invalid_argument("PhaseSpaceModel: corrected and large_step kinds need dt > 0");
    if (kind == KineticKind::large_step && !(J_ * dt < 2.0 * pi))
        throw std::invalid_argument("PhaseSpaceModel: large_step requires J dt < 2 pi");
}

double PhaseSpaceModel::kinetic(double p) const {
    switch (kind_) {
    case KineticKind::bare: return -J_ * std::cos(p);
    case KineticKind::corrected: return -J_ * std::cos(p) + correction_dH(0.0, p, dt_, J_);
    case KineticKind::large_step:
        return -(2.0 / dt_) * std::asin(std::sin(0.5 * J_ * dt_) * std::cos(p));
    }
    return 0.0;
}

double PhaseSpaceModel::velocity(double p) const {
    switch (kind_) {
    case KineticKind::bare: return J_ * std::sin(p);
    case KineticKind::corrected: {
        const double k = J_ * (J_ * dt_) * (J_ * dt_) / 24.0;
        const double s = std::sin(p), c = std::cos(p);
        return J_ * s + k * s * (2.0 * c * c - s * s);
    }
    case KineticKind::large_step: {
        const double g = std::sin(0.5 * J_ * dt_);
        const double c = std::cos(p);
        return (2.0 / dt_) * g * std::sin(p) / std::sqrt(1.0 - g * g * c * c);
    }
    }
    return 0.0;
}

double PhaseSpaceModel::cos_momentum(double E, double x) const {
    const double u = E - h_(x);
    switch (kind_) {
    case KineticKind::bare: return -u / J_;
    case KineticKind::corrected: {
        // -J c + k c (1 - c^2) = u, Newton from the bare root
        const double k = J_ * (J_ * dt_) * (J_ * dt_) / 24.0;
        double c = -u / J_;
        for (int it = 0; it < 60; ++it) {
            const double f = -J_ * c + k * c * (1.0 - c * c) - u;
            const double df = -J_ + k - 3.0 * k * c * c;
            const double step = f / df;
            c -= step;
            if (std::abs(step) < 1e-15 * std::max(1.0, std::abs(c))) break;
        }
        return c;
    }
    case KineticKind::large_step:
        return -std::sin(0.5 * u * dt_) / std::sin(0.5 * J_ * dt_);
    }
    return 0.0;
}

cplx classical_momentum(const PhaseSpaceModel& model, double E, double x) {
    const double c = model.cos_momentum(E, x);
    if (c > 1.0) return {0.0, std::acosh(c)};
    if (c < -1.0) return {pi, std::acosh(-c)};
    return {std::acos(c), 0.0};
}

double integrate_endpoint_singular(const std::function<double(double)>& f, double a, double b, double tol) {
    if (!(b > a)) return 0.0;
    using boost::math::quadrature::gauss_kronrod;
    const double m = 0.5 * (a + b);
    const double ua = std::sqrt(m - a), ub = std::sqrt(b - m);
    auto left = [&](double u) { return 2.0 * u * f(a + u * u); };
    auto right = [&](double u) { return 2.0 * u * f(b - u * u); };
    return gauss_kronrod<double, 31>::integrate(left, 0.0, ua, 15, tol) +
           gauss_kronrod<double, 31>::integrate(right, 0.0, ub, 15, tol);
}

namespace {

bool allowed_at(const PhaseSpaceModel& model, double E, double x) {
    return std::abs(model.cos_momentum(E, x)) < 1.0;
}

// Root of |c(x)| = 1 between an allowed point xa and a forbidden point xf.
TurningPoint refine_turning(const PhaseSpaceModel& model, double E, double xa, double xf) {
    const double cf = model.cos_momentum(E, xf);
    const double target = cf > 0.0 ? 1.0 : -1.0;
    auto g = [&](double x) { return model.cos_momentum(E, x) - target; };
    auto tol = [](double l, double r) { return std::abs(r - l) < 1e-11; };
    double lo = std::min(xa, xf), hi = std::max(xa, xf);
    const auto r = boost::math::tools::bisect(g, lo, hi, tol);
    TurningPoint tp;
    tp.x = 0.5 * (r.first + r.second);
    tp.kind = target > 0.0 ? TurningKind::standard : TurningKind::anomalous;
    tp.delta = tp.x - std::floor(tp.x);
    return tp;
}

TurningPoint wall(double x) {
    TurningPoint tp;
    tp.x = x;
    tp.kind = TurningKind::wall;
    tp.delta = x - std::floor(x);
    return tp;
}

// scan from x0 in direction dir until the allowed/forbidden status flips
std::optional<std::pair<double, double>> scan_flip(const PhaseSpaceModel& model, double E, double x0, double dir,
                                                   double limit, double step) {
    const bool start = allowed_at(model, E, x0);
    double x = x0;
    while (dir > 0 ? x < limit : x > limit) {
        const double xn = dir > 0 ? std::min(x + step, limit) : std::max(x - step, limit);
        if (allowed_at(model, E, xn) != start) return std::make_pair(x, xn);
        x = xn;
    }
    return std::nullopt;
}

double theta_phase(const TurningPoint& tp) {
    return tp.kind == TurningKind::anomalous ? -0.5 * pi + pi * tp.x : 0.0;
}

int sites_inside(double x1, double x2, int L) {
    const int a = std::max(1, static_cast<int>(std::ceil(x1)));
    const int b = std::min(L, static_cast<int>(std::floor(x2)));
    return std::max(0, b - a + 1);
}

struct Geometry {
    TurningPoint x1, x2;
};

std::optional<Geometry> well_geometry(const PhaseSpaceModel& model, const Well& well, double E) {
    auto iv = allowed_interval(model, E, well.x_bottom);
    if (!iv) return std::nullopt;
    Geometry g{iv->first, iv->second};
    switch (well.boundary) {
    case Boundary::two_turning_points:
        if (g.x1.kind == TurningKind::wall || g.x2.kind == TurningKind::wall) return std::nullopt;
        break;
    case Boundary::hard_wall_left:
        if (g.x1.kind != TurningKind::wall || g.x2.kind == TurningKind::wall) return std::nullopt;
        break;
    case Boundary::hard_wall_right:
        if (g.x2.kind != TurningKind::wall || g.x1.kind == TurningKind::wall) return std::nullopt;
        break;
    }
    return g;
}

double action_between(const PhaseSpaceModel& model, double E, double x1, double x2) {
    auto p = [&](double x) { return std::acos(std::clamp(model.cos_momentum(E, x), -1.0, 1.0)); };
    return integrate_endpoint_singular(p, x1, x2);
}

// centred difference with one Richardson step; one-sided if the centre stencil leaves the domain
template <class F>
double derivative(F&& f, double E, double h) {
    auto D = [&](double s) { return (f(E + s) - f(E - s)) / (2.0 * s); };
    const double d1 = D(h), d2 = D(0.5 * h);
    if (std::isfinite(d1) && std::isfinite(d2)) return (4.0 * d2 - d1) / 3.0;
    const double f0 = f(E);
    const double fp = f(E + h), fm = f(E - h);
    if (std::isfinite(fp)) return (fp - f0) / h;
    if (std::isfinite(fm)) return (f0 - fm) / h;
    return std::numeric_limits<double>::quiet_NaN();
}

constexpr double kEnergyStep = 1e-4;

}  // namespace

std::vector<TurningPoint> turning_points(const PhaseSpaceModel& model, double E, double scan_step) {
    std::vector<TurningPoint> out;
    double x = model.x_lo();
    bool prev = allowed_at(model, E, x);
    while (x < model.x_hi()) {
        const double xn = std::min(x + scan_step, model.x_hi());
        const bool cur = allowed_at(model, E, xn);
        if (cur != prev) out.push_back(prev ? refine_turning(model, E, x, xn) : refine_turning(model, E, xn, x));
        prev = cur;
        x = xn;
    }
    return out;
}

std::optional<std::pair<TurningPoint, TurningPoint>> allowed_interval(const PhaseSpaceModel& model, double E,
                                                                      double x0, double scan_step) {
    if (!allowed_at(model, E, x0)) return std::nullopt;
    TurningPoint left, right;
    if (auto f = scan_flip(model, E, x0, -1.0, model.x_lo(), scan_step))
        left = refine_turning(model, E, f->first, f->second);
    else
        left = wall(model.x_lo());
    if (auto f = scan_flip(model, E, x0, +1.0, model.x_hi(), scan_step))
        right = refine_turning(model, E, f->first, f->second);
    else
        right = wall(model.x_hi());
    return std::make_pair(left, right);
}

ActionResult action_allowed(const PhaseSpaceModel& model, double E, double x1, double x2) {
    if (!(x2 > x1)) throw std::invalid_argument("action_allowed: need x1 < x2");
    for (int i = 1; i < 8; ++i) {
        const double x = x1 + (x2 - x1) * i / 8.0;
        if (std::abs(model.cos_momentum(E, x)) > 1.0 + 1e-9)
            throw std::invalid_argument("action_allowed: momentum is not real inside the interval");
    }
    const double xm = 0.5 * (x1 + x2);
    // ends that sit on turning points move with E; other ends stay fixed
    const bool move1 = std::abs(std::abs(model.cos_momentum(E, x1)) - 1.0) < 1e-6;
    const bool move2 = std::abs(std::abs(model.cos_momentum(E, x2)) - 1.0) < 1e-6;
    // p at a moving end is pi at anomalous points; its motion is not part of the time of flight
    const double p1 = move1 ? std::acos(std::clamp(model.cos_momentum(E, x1), -1.0, 1.0)) : 0.0;
    const double p2 = move2 ? std::acos(std::clamp(model.cos_momentum(E, x2), -1.0, 1.0)) : 0.0;
    auto S = [&](double e) {
        double a = x1, b = x2;
        if (move1 || move2) {
            auto iv = allowed_interval(model, e, xm);
            if (!iv) return std::numeric_limits<double>::quiet_NaN();
            if (move1) a = iv->first.x;
            if (move2) b = iv->second.x;
        }
        return action_between(model, e, a, b) - p2 * b + p1 * a;
    };
    ActionResult r;
    r.S12 = action_between(model, E, x1, x2);
    r.T12 = 2.0 * derivative(S, E, kEnergyStep);
    return r;
}

double quantization_phase(const PhaseSpaceModel& model, const Well& well, double E) {
    auto g = well_geometry(model, well, E);
    if (!g) return std::numeric_limits<double>::quiet_NaN();
    const double S = action_between(model, E, g->x1.x, g->x2.x);
    switch (well.boundary) {
    case Boundary::two_turning_points: return (S - theta_phase(g->x2) + theta_phase(g->x1)) / pi - 0.5;
    case Boundary::hard_wall_left:
    case Boundary::hard_wall_right: return S / pi + 0.25 - 1.0;
    }
    return std::numeric_limits<double>::quiet_NaN();
}

namespace {

double default_e_max(const PhaseSpaceModel& model, const Well& well) {
    const auto& h = model.spec().h;
    const int L = static_cast<int>(h.size());
    double left = -std::numeric_limits<double>::infinity(), right = left;
    for (int n = 1; n <= L; ++n) {
        if (n < well.x_bottom) left = std::max(left, h[n - 1]);
        if (n > well.x_bottom) right = std::max(right, h[n - 1]);
    }
    double top;
    switch (well.boundary) {
    case Boundary::two_turning_points: top = std::min(left, right); break;
    case Boundary::hard_wall_left: top = right; break;
    case Boundary::hard_wall_right: top = left; break;
    default: top = std::min(left, right);
    }
    return top - model.J();
}

}  // namespace

std::vector<LevelPrediction> bohr_levels(const PhaseSpaceModel& model, const Well& well) {
    const double J = model.J();
    double e_lo = std::isnan(well.e_min) ? model.potential(well.x_bottom) - J : well.e_min;
    double e_hi = std::isnan(well.e_max) ? default_e_max(model, well) : well.e_max;
    const double pad = 1e-7 * J;
    e_lo += pad;
    e_hi -= pad;
    if (!(e_hi > e_lo)) return {};

    auto nu = [&](double E) { return quantization_phase(model, well, E); };

    // bracketing grid: about ten points per level (spacing ~ Delta/10)
    const double span_levels = [&] {
        double a = nu(e_lo), b = nu(e_hi);
        for (int i = 1; !std::isfinite(b) && i < 50; ++i) b = nu(e_hi - (e_hi - e_lo) * i / 50.0);
        for (int i = 1; !std::isfinite(a) && i < 50; ++i) a = nu(e_lo + (e_hi - e_lo) * i / 50.0);
        return (std::isfinite(a) && std::isfinite(b)) ? std::abs(b - a) : 20.0;
    }();
    const int n_grid = std::max(64, static_cast<int>(std::ceil(10.0 * span_levels)) + 1);

    std::vector<double> Eg(n_grid), ng(n_grid);
    for (int i = 0; i < n_grid; ++i) {
        Eg[i] = e_lo + (e_hi - e_lo) * i / (n_grid - 1);
        ng[i] = nu(Eg[i]);
    }

    std::vector<LevelPrediction> out;
    for (int i = 0; i + 1 < n_grid; ++i) {
        if (!std::isfinite(ng[i]) || !std::isfinite(ng[i + 1])) continue;
        const double lo = std::min(ng[i], ng[i + 1]), hi = std::max(ng[i], ng[i + 1]);
        for (long k = static_cast<long>(std::floor(lo)) + 1; k <= static_cast<long>(std::floor(hi)); ++k) {
            if (k < 0) continue;
            double a = Eg[i], b = Eg[i + 1];
            const double sa = ng[i] - k;
            while (b - a > 1e-10) {
                const double m = 0.5 * (a + b);
                const double v = nu(m) - k;
                if (!std::isfinite(v)) break;
                if ((v > 0) == (sa > 0)) a = m; else b = m;
            }
            const double E = 0.5 * (a + b);
            auto g = well_geometry(model, well, E);
            if (!g) continue;
            LevelPrediction lv;
            lv.N = static_cast<int>(k);
            lv.E = E;
            lv.x1 = g->x1;
            lv.x2 = g->x2;
            lv.S12 = action_between(model, E, g->x1.x, g->x2.x);
            // 2 pi dnu/dE: the anomalous phase cancels the motion of an end sitting at p = pi
            lv.T12 = 2.0 * pi * derivative(nu, E, kEnergyStep);
            lv.spacing = 2.0 * pi / lv.T12;
            lv.n_cl = sites_inside(g->x1.x, g->x2.x, static_cast<int>(model.spec().L));
            out.push_back(lv);
        }
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.E < b.E; });
    return out;
}

BarrierReport barrier_action(const PhaseSpaceModel& model, double E, double x_left, double x_right) {
    if (!(x_right > x_left)) throw std::invalid_argument("barrier_action: need x_left < x_right");
    if (!allowed_at(model, E, x_left)) throw std::invalid_argument("barrier_action: x_left is not classically allowed");
    BarrierReport r;
    constexpr double step = 0.01;
    auto enter = scan_flip(model, E, x_left, +1.0, x_right, step);
    if (!enter) return r;  // no forbidden zone: at or above the barrier top
    const TurningPoint a = refine_turning(model, E, enter->first, enter->second);
    r.xa = a.x;
    auto leave = scan_flip(model, E, enter->second, +1.0, x_right, step);
    if (leave) {
        r.xb = refine_turning(model, E, leave->second, leave->first).x;
        // is the allowed region we reach the one containing x_right?
        if (auto again = scan_flip(model, E, leave->second, +1.0, x_right, step)) r.interior_allowed = true;
    } else {
        r.xb = x_right;
    }
    auto kappa = [&](double x) { return std::acosh(std::max(1.0, std::abs(model.cos_momentum(E, x)))); };
    r.S_B = integrate_endpoint_singular(kappa, r.xa, r.xb);
    r.n_barr = sites_inside(r.xa, r.xb, model.spec().L);
    return r;
}

TunnelingRates tunneling_rates(const LevelPrediction& left, const LevelPrediction& right, const PhaseSpaceModel& model) {
    const double E = 0.5 * (left.E + right.E);
    const double xl = 0.5 * (left.x1.x + left.x2.x), xr = 0.5 * (right.x1.x + right.x2.x);
    TunnelingRates t;
    t.S_B = barrier_action(model, E, std::min(xl, xr), std::max(xl, xr)).S_B;
    t.eta = std::sqrt(left.spacing * right.spacing) / (2.0 * pi) * std::exp(-t.S_B);
    t.Gamma = left.spacing / (2.0 * pi) * std::exp(-2.0 * t.S_B);
    return t;
}

double correction_dH(double, double p, double dt, double J) {
    const double s = std::sin(p);
    return J * (J * dt) * (J * dt) / 24.0 * std::cos(p) * s * s;
}

namespace {

// -(J dt)^2/24 int cos p sin p dx over the allowed interval of `lv`
double allowed_shift(const PhaseSpaceModel& model, const LevelPrediction& lv, double k) {
    auto f = [&](double x) {
        const double c = std::clamp(model.cos_momentum(lv.E, x), -1.0, 1.0);
        return c * std::sqrt(1.0 - c * c);
    };
    return -k * integrate_endpoint_singular(f, lv.x1.x, lv.x2.x);
}

BarrierReport barrier_for(const PhaseSpaceModel& model, const LevelPrediction& lv, const LevelPrediction* partner,
                          double E) {
    const double xl = 0.5 * (lv.x1.x + lv.x2.x);
    if (partner) {
        const double xr = 0.5 * (partner->x1.x + partner->x2.x);
        if (!allowed_at(model, E, std::min(xl, xr))) return {};
        return barrier_action(model, E, std::min(xl, xr), std::max(xl, xr));
    }
    if (!allowed_at(model, E, xl)) return {};
    if (lv.x2.kind != TurningKind::wall) return barrier_action(model, E, xl, model.x_hi());
    // only a left barrier: mirror by scanning leftwards is not supported, report none
    return {};
}

}  // namespace

ShiftReport perturbation_shifts(const LevelPrediction& level, const PhaseSpaceModel& model, double dt,
                                const LevelPrediction* partner) {
    ShiftReport r;
    const double J = model.J();
    const double jdt2 = (J * dt) * (J * dt);
    const double k = jdt2 / 24.0;
    r.perturbative_exceeded = jdt2 * model.spec().potential_range() / J > 1.0;
    if (dt == 0.0) return r;

    r.dS12 = allowed_shift(model, level, k);
    r.dE = -2.0 * r.dS12 / level.T12;
    if (partner) {
        const double dS_R = allowed_shift(model, *partner, k);
        r.dE_N = -r.dS12 / level.T12 - dS_R / partner->T12;
    } else {
        r.dE_N = r.dE;
    }

    const double E = partner ? 0.5 * (level.E + partner->E) : level.E;
    const BarrierReport b = barrier_for(model, level, partner, E);
    if (b.xb > b.xa) {
        auto f = [&](double x) {
            const double c = std::abs(model.cos_momentum(E, x));
            return c > 1.0 ? c * std::sqrt(c * c - 1.0) : 0.0;  // sinh(2|p|)/2
        };
        r.dS_B = -k * integrate_endpoint_singular(f, b.xa, b.xb);
        auto SB = [&](double e) {
            try {
                return barrier_for(model, level, partner, e).S_B;
            } catch (const std::invalid_argument&) {
                return std::numeric_limits<double>::quiet_NaN();
            }
        };
        const double dSB_dE = derivative(SB, E, kEnergyStep);
        const double exponent = r.dS_B + dSB_dE * r.dE_N;
        r.eta_ratio = std::exp(-exponent);
        r.gamma_ratio = r.eta_ratio * r.eta_ratio;
    }
    return r;
}

DetuningReport detuning_effective(double eps0, const LevelPrediction& left, const LevelPrediction& right, double eta,
                                  double dt, double J) {
    DetuningReport d;
    d.epsilon_eff = eps0 - left.shifts.dS12 / left.T12 + right.shifts.dS12 / right.T12;
    d.dt_threshold = std::sqrt(std::max(0.0, eta * left.n_cl / left.spacing)) / J;
    d.criterion_ok = dt <= d.dt_threshold;
    return d;
}

LargeStepKinetic large_step_kinetic(double p, double dt, double J) {
    if (!(J * dt > 0.0 && J * dt < 2.0 * pi)) throw std::invalid_argument("large_step_kinetic: need 0 < J dt < 2 pi");
    const double g = std::sin(0.5 * J * dt);
    const double s4 = std::sin(0.25 * J * dt);
    auto T = [&](double q) { return -(2.0 / dt) * std::asin(g * std::cos(q)); };
    auto cos4 = [&](double q, double* theta) {
        const double c = std::cos(q);
        const double root = std::sqrt(1.0 - c * c * g * g);
        const double s2 = s4 * s4 * std::sin(2.0 * q) / root;
        const double c2 = (1.0 - 2.0 * c * c * s4 * s4) / root;
        if (theta) {
            double th = 0.5 * std::atan2(s2, c2);
            if (th < 0.0) th += pi;  // theta in [0, pi]
            *theta = th;
        }
        return c2 * c2 - s2 * s2;
    };
    LargeStepKinetic out;
    out.T = T(p);
    const double c4 = cos4(p, &out.theta);
    const double Tp = (2.0 / dt) * g * std::sin(p) / std::sqrt(1.0 - g * g * std::cos(p) * std::cos(p));
    const double hh = 1e-6;
    const double dc4 = (cos4(p + hh, nullptr) - cos4(p - hh, nullptr)) / (2.0 * hh);
    out.v = Tp * c4 + 0.5 * out.T * dc4;
    out.p_c = g < 1.0 ? std::acosh(1.0 / g) : 0.0;
    return out;
}

PhasePortrait phase_portrait(const PhaseSpaceModel& model, const std::vector<double>& energies, int samples) {
    if (samples < 2) throw std::invalid_argument("phase_portrait: need at least 2 samples");
    PhasePortrait out;
    const double a = model.x_lo(), b = model.x_hi();
    for (double E : energies) {
        for (int i = 0; i < samples; ++i) {
            const double x = a + (b - a) * i / (samples - 1);
            const double c = model.cos_momentum(E, x);
            if (std::abs(c) > 1.0) continue;
            const double p = std::acos(c);
            out.points.push_back({E, x, p});
            if (p > 0.0) out.points.push_back({E, x, -p});
        }
        for (const auto& tp : [&] {
                 std::vector<std::pair<double, double>> regions;
                 double x = a;
                 while (x < b) {
                     if (allowed_at(model, E, x)) {
                         auto iv = allowed_interval(model, E, x);
                         regions.emplace_back(iv->first.x, iv->second.x);
                         x = iv->second.x + 1e-6;
                         if (auto f = scan_flip(model, E, x, +1.0, b, 0.01)) x = f->second;
                         else break;
                     } else if (auto f = scan_flip(model, E, x, +1.0, b, 0.01)) {
                         x = f->second;
                     } else {
                         break;
                     }
                 }
                 return regions;
             }()) {
            PortraitRegion r;
            r.E = E;
            r.x1 = tp.first;
            r.x2 = tp.second;
            r.area = 2.0 * action_between(model, E, tp.first, tp.second);
            out.regions.push_back(r);
        }
    }
    return out;
}

PeriodChange period_change(const LevelPrediction& level, const PhaseSpaceModel& model, double dt) {
    PeriodChange pc;
    if (dt == 0.0) return pc;
    const double J = model.J();
    const double k = (J * dt) * (J * dt) / 24.0;
    auto f = [&](double x) {
        const double c = std::clamp(model.cos_momentum(level.E, x), -1.0, 1.0);
        const double s = std::sqrt(std::max(1.0 - c * c, 1e-300));
        return (2.0 * c * c - 1.0) / (J * s);
    };
    auto g = [&](double x) {
        const double c = std::clamp(model.cos_momentum(level.E, x), -1.0, 1.0);
        return 1.0 / (J * std::sqrt(std::max(1.0 - c * c, 1e-300)));
    };
    const double T = 2.0 * integrate_endpoint_singular(g, level.x1.x, level.x2.x);
    pc.dT1_over_T = -2.0 * k * integrate_endpoint_singular(f, level.x1.x, level.x2.x) / T;

    // dT/dE from the action with moving turning points
    const double xm = 0.5 * (level.x1.x + level.x2.x);
    auto S = [&](double e) {
        auto iv = allowed_interval(model, e, xm);
        if (!iv) return std::numeric_limits<double>::quiet_NaN();
        const double a = level.x1.kind == TurningKind::wall ? level.x1.x : iv->first.x;
        const double b = level.x2.kind == TurningKind::wall ? level.x2.x : iv->second.x;
        return action_between(model, e, a, b);
    };
    const double h = 1e-3;
    const double d2S = (S(level.E + h) - 2.0 * S(level.E) + S(level.E - h)) / (h * h);
    const double dTdE = 2.0 * d2S;
    const double dE = level.shifts.dE != 0.0 ? level.shifts.dE : perturbation_shifts(level, model, dt).dE;
    pc.dT2_over_T = dTdE * dE / level.T12;
    return pc;
}

}  // namespace trotter
