#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "trotter/chain_model.hpp"

using namespace trotter;
using doctest::Approx;

TEST_CASE("flat three-site chain") {
    const ChainSpec spec = build_chain(3, 1.0, PotentialFamily::custom({0.0, 0.0, 0.0}));
    const Eigen::MatrixXd H = hamiltonian_real(spec);
    for (int i = 0; i < 3; ++i) CHECK(H(i, i) == 0.0);
    CHECK(H(0, 1) == -0.5);
    CHECK(H(1, 2) == -0.5);
    CHECK(H(0, 2) == 0.0);
    CHECK(H(2, 0) == 0.0);  // open boundary
}

TEST_CASE("two-site eigenvalues are +-1/2") {
    const ChainSpec spec = build_chain(2, 1.0, PotentialFamily::custom({0.0, 0.0}));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hamiltonian_real(spec));
    CHECK(es.eigenvalues()(0) == Approx(-0.5).epsilon(1e-14));
    CHECK(es.eigenvalues()(1) == Approx(0.5).epsilon(1e-14));
}

TEST_CASE("cosine profile starts at P") {
    const ChainSpec spec = build_chain(50, 1.0, PotentialFamily::cosine(1.25));
    CHECK(spec.h[0] == Approx(1.25).epsilon(1e-15));
    CHECK(spec.potential_range() == Approx(2.5).epsilon(1e-3));
}

TEST_CASE("experimental profile") {
    SUBCASE("endpoints vanish") {
        const ChainSpec spec = build_chain(50, 1.0, PotentialFamily::experimental(1.25, 8, 0, 0));
        CHECK(spec.h[0] == 0.0);
        CHECK(spec.h[49] == 0.0);
        for (double v : spec.h) CHECK(std::isfinite(v));
    }
    SUBCASE("mirror symmetric without shift or tilt") {
        const ChainSpec spec = build_chain(50, 1.0, PotentialFamily::experimental(1.25, 8, 0, 0));
        double worst = 0.0;
        for (int n = 0; n < 50; ++n) worst = std::max(worst, std::abs(spec.h[n] - spec.h[49 - n]));
        CHECK(worst < 1e-12 * 1.25);
    }
    SUBCASE("normalised at the centre site") {
        const ChainSpec spec = build_chain(50, 1.0, PotentialFamily::experimental(1.05, 8, 0, 0));
        CHECK(spec.h[24] == Approx(1.05).epsilon(1e-15));  // n0 = 25
    }
    SUBCASE("tilt length convention") {
        const ChainSpec a = build_chain(50, 1.0, PotentialFamily::experimental(1.05, 8, 4, 0.04));
        const ChainSpec b = build_chain(50, 1.0, PotentialFamily::experimental(1.05, 8, 4, 0.02, 25.0));
        for (int n = 0; n < 50; ++n) CHECK(a.h[n] == Approx(b.h[n]).epsilon(1e-14));
    }
}

TEST_CASE("spectrum lies within the band bound") {
    const ChainSpec spec = build_chain(200, 1.0, PotentialFamily::cosine(1.25));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hamiltonian_real(spec));
    CHECK(es.eigenvalues().minCoeff() >= spec.h_min() - spec.J - 1e-12);
    CHECK(es.eigenvalues().maxCoeff() <= spec.h_max() + spec.J + 1e-12);
}

TEST_CASE("hamiltonian is exactly symmetric") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> h(17);
    for (double& v : h) v = u(rng);
    const Eigen::MatrixXd H = hamiltonian_real(build_chain(17, 0.8, PotentialFamily::custom(h)));
    CHECK((H - H.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("linear potential gives an equally spaced ladder in the interior") {
    const double alpha = 0.2;
    const ChainSpec spec = build_chain(50, 1.0, PotentialFamily::linear(alpha));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hamiltonian_real(spec));
    // levels far from both ends are unaffected by the boundaries
    for (int i = 15; i < 35; ++i) CHECK(es.eigenvalues()(i + 1) - es.eigenvalues()(i) == Approx(alpha).epsilon(1e-9));
}

TEST_CASE("invalid input is rejected") {
    CHECK_THROWS_AS(build_chain(1, 1.0, PotentialFamily::cosine(1.0)), std::invalid_argument);
    CHECK_THROWS_AS(build_chain(10, 0.0, PotentialFamily::cosine(1.0)), std::invalid_argument);
    CHECK_THROWS_AS(build_chain(10, 1.0, PotentialFamily::cosine(NAN)), std::invalid_argument);
    CHECK_THROWS_AS(build_chain(10, 1.0, PotentialFamily::custom({1.0, 2.0})), std::invalid_argument);
    CHECK_THROWS_AS(potential_kind_from_string("parabolic"), std::invalid_argument);
}

TEST_CASE("wigner transform") {
    const ChainSpec flat = build_chain(10, 1.0, PotentialFamily::custom(std::vector<double>(10, 0.0)));
    CHECK(wigner_transform(flat, 4.3, 0.0) == Approx(-1.0));
    const ChainSpec spec = build_chain(20, 1.0, PotentialFamily::cosine(0.7));
    const SmoothPotential hs(spec);
    CHECK(wigner_transform(spec, 6.4, std::numbers::pi / 2) == Approx(hs(6.4)).epsilon(1e-14));
    const cplx w = wigner_transform(flat, 3.0, cplx(0.0, std::acosh(2.0)));
    CHECK(w.real() == Approx(-2.0).epsilon(1e-14));
    CHECK(std::abs(w.imag()) < 1e-14);

    SUBCASE("row sum at integer sites") {
        // sum_m H_{n,n+m} e^{i p m} equals the transform at x = n
        const Eigen::MatrixXd H = hamiltonian_real(spec);
        for (int n : {3, 7, 11, 14, 18}) {
            for (double p : {0.3, 1.1, 2.7}) {
                cplx sum = 0.0;
                for (int m = 0; m < spec.L; ++m) sum += H(n - 1, m) * std::exp(cplx(0.0, p * (m - (n - 1))));
                CHECK(sum.real() == Approx(wigner_transform(spec, n, p)).epsilon(1e-12));
                CHECK(std::abs(sum.imag()) < 1e-12);
            }
        }
    }
}

TEST_CASE("smooth potential interpolates the sites") {
    const ChainSpec spec = build_chain(30, 1.0, PotentialFamily::cosine(1.0));
    const SmoothPotential hs(spec);
    for (int n = 1; n <= 30; ++n) CHECK(hs(n) == Approx(spec.h[n - 1]).epsilon(1e-12));
    CHECK(hs(0.0) == Approx(spec.h[0]));
    CHECK(hs(31.0) == Approx(spec.h[29]));
    // derivative matches a finite difference between sites
    const double x = 7.3, e = 1e-6;
    CHECK(hs.derivative(x) == Approx((hs(x + e) - hs(x - e)) / (2 * e)).epsilon(1e-6));
}

TEST_CASE("potential file round trip") {
    std::filesystem::create_directories(TEST_WORK_DIR);
    const std::string path = std::string(TEST_WORK_DIR) + "/potential.txt";
    {
        std::ofstream out(path);
        out << "# custom profile\n0.5\n\n-0.25\n1e-3\n";
    }
    const auto v = load_potential_file(path);
    REQUIRE(v.size() == 3);
    CHECK(v[0] == 0.5);
    CHECK(v[1] == -0.25);
    CHECK(v[2] == 1e-3);
    {
        std::ofstream out(path);
        out << "0.5 0.6\n1.0\n";
    }
    CHECK_THROWS_AS(load_potential_file(path), std::invalid_argument);
}
