#pragma once

#include <complex>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace trotter {

using cplx = std::complex<double>;

// Single-particle chain: L sites, hopping -J/2 between neighbours, on-site h_n.
// Sites are labelled n = 1..L; h[0] holds h_1.
struct ChainSpec {
    int L = 0;
    double J = 1.0;
    double a = 1.0;
    std::vector<double> h;

    void validate() const;
    double h_min() const;
    double h_max() const;
    // P := max h - min h
    double potential_range() const;
};

enum class PotentialKind { cosine, linear, experimental, custom };

struct PotentialFamily {
    PotentialKind kind = PotentialKind::custom;
    double P = 0.0;
    double alpha = 0.0;
    double w = 8.0;
    double dn = 0.0;
    // Length that normalises the linear tilt of the experimental profile.
    // Zero means the chain length L.
    double tilt_length = 0.0;
    std::vector<double> values;

    static PotentialFamily cosine(double P);
    static PotentialFamily linear(double alpha);
    static PotentialFamily experimental(double P, double w, double dn, double alpha,
                                        double tilt_length = 0.0);
    static PotentialFamily custom(std::vector<double> values);

    std::vector<double> evaluate(int L, double a = 1.0) const;
};

std::string to_string(PotentialKind kind);
PotentialKind potential_kind_from_string(const std::string& name);

ChainSpec build_chain(int L, double J, const PotentialFamily& family);

Eigen::MatrixXd hamiltonian_real(const ChainSpec& spec);

// Reads one h_n per line; blank lines and lines starting with '#' are skipped.
std::vector<double> load_potential_file(const std::string& path);

// Cubic interpolant h(x) through (n, h_n), n = 1..L. Outside [1, L] the
// potential is held at its end value.
class SmoothPotential {
public:
    explicit SmoothPotential(const ChainSpec& spec);

    double operator()(double x) const;
    double derivative(double x) const;
    double x_min() const { return 1.0; }
    double x_max() const { return static_cast<double>(L_); }
    int size() const { return L_; }

private:
    struct Impl;
    std::shared_ptr<const Impl> impl_;
    int L_ = 0;
};

// -J cos p + h(x)
double wigner_transform(const ChainSpec& spec, double x, double p);
cplx wigner_transform(const ChainSpec& spec, double x, cplx p);
// Same, reusing a prebuilt interpolant.
cplx wigner_transform(const SmoothPotential& h, double J, double x, cplx p);

}  // namespace trotter
