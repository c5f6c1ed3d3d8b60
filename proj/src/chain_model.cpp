#include "trotter/chain_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>

namespace trotter {

void ChainSpec::validate() const {
    if (L < 2) throw std::invalid_argument("ChainSpec: L must be >= 2");
    if (!(J > 0.0) || !std::isfinite(J)) throw std::invalid_argument("ChainSpec: J must be positive and finite");
    if (!(a > 0.0) || !std::isfinite(a)) throw std::invalid_argument("ChainSpec: a must be positive and finite");
    if (static_cast<int>(h.size()) != L)
        throw std::invalid_argument("ChainSpec: potential has " + std::to_string(h.size()) +
                                    " values, expected " + std::to_string(L));
    for (double v : h)
        if (!std::isfinite(v)) throw std::invalid_argument("ChainSpec: non-finite potential value");
}

double ChainSpec::h_min() const { return *std::min_element(h.begin(), h.end()); }
double ChainSpec::h_max() const { return *std::max_element(h.begin(), h.end()); }
double ChainSpec::potential_range() const { return h_max() - h_min(); }

PotentialFamily PotentialFamily::cosine(double P) {
    PotentialFamily f;
    f.kind = PotentialKind::cosine;
    f.P = P;
    return f;
}

PotentialFamily PotentialFamily::linear(double alpha) {
    PotentialFamily f;
    f.kind = PotentialKind::linear;
    f.alpha = alpha;
    return f;
}

PotentialFamily PotentialFamily::experimental(double P, double w, double dn, double alpha,
                                              double tilt_length) {
    PotentialFamily f;
    f.kind = PotentialKind::experimental;
    f.P = P;
    f.w = w;
    f.dn = dn;
    f.alpha = alpha;
    f.tilt_length = tilt_length;
    return f;
}

PotentialFamily PotentialFamily::custom(std::vector<double> values) {
    PotentialFamily f;
    f.kind = PotentialKind::custom;
    f.values = std::move(values);
    return f;
}

namespace {

void require_finite(double v, const char* name) {
    if (!std::isfinite(v)) throw std::invalid_argument(std::string("potential parameter ") + name + " is not finite");
}

// f(n, dn) of the engineered double well. The endpoint term -(L/2)/sqrt((n-1)(L-n))
// tends to -infinity at n = 1 and n = L, so f vanishes there.
double experimental_envelope(double n, double dn, double w, int L) {
    const double centre = 0.5 * (L + 1);
    const double d = (n - 1.0) * (L - n);
    if (d <= 0.0) return 0.0;
    const double q = (n - dn - centre) / w;
    return std::exp(-0.5 * q * q * q * q - 0.5 * L / std::sqrt(d));
}

}  // namespace

std::vector<double> PotentialFamily::evaluate(int L, double a) const {
    if (L < 2) throw std::invalid_argument("PotentialFamily: L must be >= 2");
    std::vector<double> h(L);
    switch (kind) {
    case PotentialKind::cosine:
        require_finite(P, "P");
        for (int n = 1; n <= L; ++n)
            h[n - 1] = P * std::cos(4.0 * std::numbers::pi * (n - 1) / (L - 1));
        break;
    case PotentialKind::linear:
        require_finite(alpha, "alpha");
        for (int n = 1; n <= L; ++n) h[n - 1] = alpha * a * n;
        break;
    case PotentialKind::experimental: {
        require_finite(P, "P");
        require_finite(w, "w");
        require_finite(dn, "dn");
        require_finite(alpha, "alpha");
        require_finite(tilt_length, "tilt_length");
        if (!(w > 0.0)) throw std::invalid_argument("experimental potential: w must be positive");
        if (L < 4) throw std::invalid_argument("experimental potential: L must be >= 4");
        const int n0 = (L + 1) / 2;
        const double norm = experimental_envelope(n0, dn, w, L);
        if (!(norm > 0.0)) throw std::invalid_argument("experimental potential: envelope vanishes at the centre site");
        const double tilt = tilt_length > 0.0 ? tilt_length : static_cast<double>(L);
        const double centre = 0.5 * (L + 1);
        for (int n = 1; n <= L; ++n)
            h[n - 1] = P * experimental_envelope(n, dn, w, L) / norm + alpha * (n - centre) / tilt;
        break;
    }
    case PotentialKind::custom:
        if (static_cast<int>(values.size()) != L)
            throw std::invalid_argument("custom potential has " + std::to_string(values.size()) +
                                        " values, chain has " + std::to_string(L) + " sites");
        for (double v : values) require_finite(v, "values");
        h = values;
        break;
    }
    return h;
}

std::string to_string(PotentialKind kind) {
    switch (kind) {
    case PotentialKind::cosine: return "cosine";
    case PotentialKind::linear: return "linear";
    case PotentialKind::experimental: return "experimental";
    case PotentialKind::custom: return "custom";
    }
    return "custom";
}

PotentialKind potential_kind_from_string(const std::string& name) {
    if (name == "cosine") return PotentialKind::cosine;
    if (name == "linear") return PotentialKind::linear;
    if (name == "experimental") return PotentialKind::experimental;
    if (name == "custom") return PotentialKind::custom;
    throw std::invalid_argument("unknown potential kind '" + name + "'");
}

ChainSpec build_chain(int L, double J, const PotentialFamily& family) {
    ChainSpec spec;
    spec.L = L;
    spec.J = J;
    spec.h = family.evaluate(L, spec.a);
    spec.validate();
    return spec;
}

Eigen::MatrixXd hamiltonian_real(const ChainSpec& spec) {
    spec.validate();
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(spec.L, spec.L);
    for (int n = 0; n < spec.L; ++n) H(n, n) = spec.h[n];
    for (int n = 0; n + 1 < spec.L; ++n) {
        H(n, n + 1) = -0.5 * spec.J;
        H(n + 1, n) = -0.5 * spec.J;
    }
    return H;
}

std::vector<double> load_potential_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open potential file '" + path + "'");
    std::vector<double> values;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream ss(line);
        double v;
        std::string rest;
        if (!(ss >> v) || (ss >> rest) || !std::isfinite(v))
            throw std::invalid_argument("potential file '" + path + "' line " + std::to_string(lineno) +
                                        ": expected one finite number");
        values.push_back(v);
    }
    if (values.size() < 2) throw std::invalid_argument("potential file '" + path + "' has fewer than 2 values");
    return values;
}

struct SmoothPotential::Impl {
    std::vector<double> h;
    std::optional<boost::math::interpolators::cardinal_cubic_b_spline<double>> spline;
};

SmoothPotential::SmoothPotential(const ChainSpec& spec) : L_(spec.L) {
    spec.validate();
    auto impl = std::make_shared<Impl>();
    impl->h = spec.h;
    if (spec.L >= 5) impl->spline.emplace(impl->h.data(), impl->h.size(), 1.0, 1.0);
    impl_ = std::move(impl);
}

double SmoothPotential::operator()(double x) const {
    const double xc = std::clamp(x, 1.0, static_cast<double>(L_));
    if (impl_->spline) return (*impl_->spline)(xc);
    // too few points for a cubic: piecewise linear
    const int i = std::min(static_cast<int>(std::floor(xc)), L_ - 1);
    const double t = xc - i;
    return (1.0 - t) * impl_->h[i - 1] + t * impl_->h[i];
}

double SmoothPotential::derivative(double x) const {
    if (x < 1.0 || x > L_) return 0.0;
    if (impl_->spline) return impl_->spline->prime(x);
    const int i = std::min(static_cast<int>(std::floor(x)), L_ - 1);
    return impl_->h[i] - impl_->h[i - 1];
}

double wigner_transform(const ChainSpec& spec, double x, double p) {
    return wigner_transform(SmoothPotential(spec), spec.J, x, cplx(p, 0.0)).real();
}

cplx wigner_transform(const ChainSpec& spec, double x, cplx p) {
    return wigner_transform(SmoothPotential(spec), spec.J, x, p);
}

cplx wigner_transform(const SmoothPotential& h, double J, double x, cplx p) {
    return -J * std::cos(p) + h(x);
}

}  // namespace trotter
