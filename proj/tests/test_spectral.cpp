#include <doctest.h>

#include "chainqed/common.hpp"
#include "chainqed/spectral.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

using namespace chainqed;
using cd = std::complex<double>;

namespace {

SweepContext nn_context(std::size_t n, double detuning, double kappa) {
    return SweepContext{ChainRealization::ordered(n, 1.0), SystemParams::uniform(n, detuning, kappa),
                        DipoleOrientation::pi(), std::nullopt};
}

std::vector<double> sorted_real(const Eigen::VectorXcd& v) {
    std::vector<double> out;
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i).real());
    std::sort(out.begin(), out.end());
    return out;
}

// Laplace-domain amplitudes of the two-atom problem by Cramer's rule on the
// 2x2 system left after eliminating the photon.
std::pair<cd, cd> two_atom_laplace(cd s, double w1, double w2, double w, double m, double ka, double kb) {
    const cd i{0.0, 1.0};
    const cd a = s + i * w1 + ka * ka / (s + i * w);
    const cd b = i * m + ka * kb / (s + i * w);
    const cd d = s + i * w2 + kb * kb / (s + i * w);
    const cd det = a * d - b * b;
    return {d / det, -b / det};
}

}  // namespace

TEST_CASE("uncoupled chain reproduces the open tight-binding spectrum") {
    const std::size_t n = 8;
    const auto ctx = nn_context(n, 0.2, 0.0);
    for (double m : {0.0, 0.07, 0.25, 0.5}) {
        auto got = sorted_real(eigensystem(ctx.hamiltonian_at(SweepKind::CouplingM, m)).values);
        std::vector<double> expected{0.2};
        for (std::size_t k = 1; k <= n; ++k) expected.push_back(2.0 * m * std::cos(k * std::numbers::pi / (n + 1)));
        std::sort(expected.begin(), expected.end());
        for (std::size_t k = 0; k <= n; ++k) CHECK(got[k] == doctest::Approx(expected[k]).epsilon(1e-12));
    }
}

TEST_CASE("eigensystem returns sorted values and unit vectors that diagonalize H") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 0.5);
    for (int trial = 0; trial < 50; ++trial) {
        const auto ctx = nn_context(5, u(rng), u(rng));
        const auto h = ctx.hamiltonian_at(SweepKind::CouplingM, u(rng));
        const auto es = eigensystem(h);
        for (Eigen::Index k = 1; k < es.values.size(); ++k) CHECK(es.values(k).real() >= es.values(k - 1).real());
        for (Eigen::Index k = 0; k < es.values.size(); ++k) {
            CHECK(std::abs(es.vectors.col(k).norm() - 1.0) < 1e-12);
            CHECK((h.matrix * es.vectors.col(k) - es.values(k) * es.vectors.col(k)).norm() < 1e-12);
        }
    }
}

TEST_CASE("sweep grid validation") {
    SweepAxis axis{SweepKind::CouplingM, {0.0, 0.2, 0.1}};
    CHECK_THROWS_AS(axis.validate(), std::invalid_argument);
    CHECK_THROWS_AS(SweepAxis::linspace(SweepKind::CouplingM, 0.0, 1.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(SweepAxis::linspace(SweepKind::SpacingK0R, 0.0, 1.0, 10).validate(), std::invalid_argument);
    const auto ok = SweepAxis::linspace(SweepKind::CouplingM, 0.0, 0.5, 11);
    CHECK(ok.step() == doctest::Approx(0.05));
    CHECK(ok.grid.back() == 0.5);
}

TEST_CASE("eigen sweep tracks curves continuously with large overlaps") {
    const auto ctx = nn_context(8, 0.2, 0.2);
    const auto sweep = eigen_sweep(ctx, SweepAxis::linspace(SweepKind::CouplingM, 0.0, 0.5, 101));
    REQUIRE(sweep.n_curves() == 9);
    CHECK(sweep.n_points() >= 101);
    CHECK(sweep.hermitian);
    const double range = sweep.spectral_range();
    for (std::size_t p = 0; p < sweep.n_points(); ++p) {
        // Multiset of eigenvalues equals a fresh diagonalization.
        auto tracked = sorted_real(sweep.eigenvalues[p]);
        auto direct = sorted_real(eigensystem(ctx.hamiltonian_at(SweepKind::CouplingM, sweep.axis.grid[p])).values);
        for (std::size_t k = 0; k < tracked.size(); ++k) CHECK(std::abs(tracked[k] - direct[k]) < 1e-12);
        if (p == 0) continue;
        for (std::size_t c = 0; c < sweep.n_curves(); ++c) {
            const double overlap =
                std::abs(sweep.eigenvectors[p - 1].col(c).dot(sweep.eigenvectors[p].col(c)));
            // Inside an exact degeneracy any rotation of the pair is admissible.
            bool degenerate = false;
            for (std::size_t o = 0; o < sweep.n_curves(); ++o) {
                for (std::size_t q : {p - 1, p}) {
                    if (o != c && std::abs(sweep.eigenvalues[q](c) - sweep.eigenvalues[q](o)) < 1e-6 * range) {
                        degenerate = true;
                    }
                }
            }
            if (!degenerate) CHECK(overlap >= 1.0 / std::sqrt(2.0) - 1e-12);
        }
    }
}

TEST_CASE("threaded sweep equals the serial one") {
    const auto ctx = nn_context(6, 0.2, 0.2);
    const auto axis = SweepAxis::linspace(SweepKind::CouplingM, 0.0, 0.5, 61);
    const auto a = eigen_sweep(ctx, axis);
    const auto b = eigen_sweep(ctx, axis, SweepOptions{4, 24});
    REQUIRE(a.n_points() == b.n_points());
    for (std::size_t p = 0; p < a.n_points(); ++p) CHECK(a.eigenvalues[p] == b.eigenvalues[p]);
}

TEST_CASE("parallel flat lines produce no events") {
    const auto ctx = nn_context(1, 0.3, 0.0);
    const auto sweep = eigen_sweep(ctx, SweepAxis::linspace(SweepKind::CouplingM, 0.0, 0.5, 21));
    CHECK(detect_crossings(sweep).events.empty());
}

TEST_CASE("two-atom dark-state crossing is found at the analytic coupling") {
    // The antisymmetric state sits at -M, the symmetric branch solves
    // (x - M)(x - delta) = 2 kappa^2; they meet where M^2 + M delta = kappa^2.
    const double delta = 0.2;
    const double kappa = 0.2;
    const double m_cross = 0.5 * (-delta + std::sqrt(delta * delta + 4.0 * kappa * kappa));
    const auto ctx = nn_context(2, delta, kappa);
    const auto sweep = eigen_sweep(ctx, SweepAxis::linspace(SweepKind::CouplingM, 0.0, 0.5, 51));
    const auto report = detect_crossings(sweep);
    REQUIRE(report.count(CrossingKind::Crossing) == 1);
    const auto& ev = report.events.front();
    CHECK(ev.kind == CrossingKind::Crossing);
    CHECK(std::abs(ev.parameter - m_cross) < 1e-8);
    CHECK(ev.min_gap < report.tau_cross);
    CHECK(ev.energy.real() == doctest::Approx(-m_cross).epsilon(1e-6));
}

TEST_CASE("bond disorder turns the two-atom crossing into an avoided crossing") {
    // Coupling the dark state to the photon requires unequal kappa.
    auto ctx = nn_context(2, 0.2, 0.2);
    ctx.params.kappa = {0.2, 0.15};
    const auto sweep = eigen_sweep(ctx, SweepAxis::linspace(SweepKind::CouplingM, 0.0, 0.5, 51));
    const auto report = detect_crossings(sweep);
    CHECK(report.count(CrossingKind::Crossing) == 0);
    CHECK(report.count(CrossingKind::AvoidedCrossing) >= 1);
    for (const auto& ev : report.events) CHECK(ev.min_gap > report.tau_cross);
}

TEST_CASE("tolerances default from the sweep and can be overridden") {
    const auto ctx = nn_context(2, 0.2, 0.2);
    const auto sweep = eigen_sweep(ctx, SweepAxis::linspace(SweepKind::CouplingM, 0.0, 0.5, 51));
    const auto report = detect_crossings(sweep);
    CHECK(report.tau_cross == doctest::Approx(1e-6 * sweep.spectral_range()));
    CHECK(report.tau_refine == doctest::Approx(1e-10 * 0.5));
    CrossingTolerances strict;
    strict.tau_cross = 1e-30;
    CHECK(detect_crossings(sweep, strict).count(CrossingKind::Crossing) == 0);
}

TEST_CASE("pole orders account for every eigenvalue") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, 0.5);
    for (int trial = 0; trial < 50; ++trial) {
        const auto ctx = nn_context(1 + trial % 6, u(rng), u(rng));
        const auto h = ctx.hamiltonian_at(SweepKind::CouplingM, u(rng));
        CHECK(characteristic_poles(h).total_order() == h.dim());
    }
}

TEST_CASE("resonant uncoupled atom and mode give a second-order pole") {
    const auto ctx = nn_context(1, 0.0, 0.0);
    const auto poles = characteristic_poles(ctx.hamiltonian_at(SweepKind::CouplingM, 0.0));
    REQUIRE(poles.poles.size() == 1);
    CHECK(poles.max_order() == 2);
    CHECK(std::abs(poles.poles[0].location) < 1e-15);
}

TEST_CASE("pole at a detected crossing is degenerate") {
    const auto ctx = nn_context(8, 0.2, 0.2);
    const auto sweep = eigen_sweep(ctx, SweepAxis::linspace(SweepKind::CouplingM, 0.0, 0.5, 501));
    const auto report = detect_crossings(sweep);
    REQUIRE(report.count(CrossingKind::Crossing) >= 1);
    for (const auto& ev : report.events) {
        if (ev.kind != CrossingKind::Crossing) continue;
        const auto poles = characteristic_poles(ctx.hamiltonian_at(SweepKind::CouplingM, ev.parameter));
        CHECK(poles.max_order() >= 2);
        CHECK(poles.total_order() == 9);
    }
}

TEST_CASE("residue expansion reproduces the Laplace-domain amplitudes") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    for (int trial = 0; trial < 30; ++trial) {
        const double w1 = u(rng), w2 = u(rng), w = u(rng), m = u(rng), ka = u(rng), kb = u(rng);
        EffectiveHamiltonian h;
        h.n_atoms = 2;
        h.matrix = Eigen::MatrixXcd::Zero(3, 3);
        h.matrix(0, 0) = w1;
        h.matrix(1, 1) = w2;
        h.matrix(2, 2) = w;
        h.matrix(0, 1) = h.matrix(1, 0) = m;
        h.matrix(0, 2) = h.matrix(2, 0) = ka;
        h.matrix(1, 2) = h.matrix(2, 1) = kb;
        Eigen::VectorXcd alpha0(2);
        alpha0 << 1.0, 0.0;
        const auto expansion = residue_expansion(h, alpha0, characteristic_poles(h));
        for (cd s : {cd(0.3, 0.1), cd(1.0, -2.0), cd(0.05, 0.7)}) {
            Eigen::VectorXcd sum = Eigen::VectorXcd::Zero(2);
            for (const auto& term : expansion.terms) sum += term.residue / std::pow(s - term.pole, double(term.power));
            const auto [a1, a2] = two_atom_laplace(s, w1, w2, w, m, ka, kb);
            CHECK(std::abs(sum(0) - a1) < 1e-10 * (1.0 + std::abs(a1)));
            CHECK(std::abs(sum(1) - a2) < 1e-10 * (1.0 + std::abs(a2)));
        }
    }
}

TEST_CASE("simple-pole residues sum to the initial amplitudes") {
    const auto ctx = nn_context(4, 0.2, 0.2);
    const auto h = ctx.hamiltonian_at(SweepKind::CouplingM, 0.13);
    Eigen::VectorXcd alpha0 = Eigen::VectorXcd::Zero(4);
    alpha0(1) = cd(0.6, 0.0);
    alpha0(2) = cd(0.0, 0.8);
    const auto expansion = residue_expansion(h, alpha0, characteristic_poles(h));
    Eigen::VectorXcd sum = Eigen::VectorXcd::Zero(4);
    for (const auto& t : expansion.terms) {
        CHECK(t.power == 1);
        sum += t.residue;
    }
    CHECK((sum - alpha0).norm() < 1e-12);
}

TEST_CASE("residue expansion input checks") {
    const auto ctx = nn_context(2, 0.2, 0.2);
    const auto h = ctx.hamiltonian_at(SweepKind::CouplingM, 0.1);
    const auto poles = characteristic_poles(h);
    CHECK_THROWS_AS(residue_expansion(h, Eigen::VectorXcd::Ones(2), poles), std::invalid_argument);
    CHECK_THROWS_AS(residue_expansion(h, Eigen::VectorXcd::Zero(3), poles), std::invalid_argument);
}

TEST_CASE("an under-merged cluster is reported instead of returning poor residues") {
    EffectiveHamiltonian h;
    h.n_atoms = 2;
    h.matrix = Eigen::MatrixXcd::Zero(3, 3);
    h.matrix(1, 1) = 1e-6;
    h.matrix(2, 2) = 3e-6;
    // 0 and 1e-6 merge; the 3e-6 pole is too close for a safe contour.
    const auto poles = characteristic_poles(h, 1.5e-6);
    REQUIRE(poles.poles.size() == 2);
    Eigen::VectorXcd alpha0(2);
    alpha0 << 1.0, 0.0;
    CHECK_THROWS_AS(residue_expansion(h, alpha0, poles), NumericalError);
}

TEST_CASE("two-atom cubic roots match a direct eigensolve") {
    std::mt19937_64 rng(1234);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 1000; ++trial) {
        const double w1 = u(rng), w2 = u(rng), w = u(rng), m = u(rng), ka = u(rng), kb = u(rng);
        Eigen::Matrix3d h;
        h << w1, m, ka, m, w2, kb, ka, kb, w;
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(h);
        const auto roots = two_atom_eigenvalues(w1, w2, w, m, ka, kb);
        for (int k = 0; k < 3; ++k) CHECK(std::abs(roots[k] - es.eigenvalues()(k)) < 1e-9);
    }
}

TEST_CASE("two-atom cubic handles degenerate and decoupled limits") {
    const auto triple = two_atom_eigenvalues(0.3, 0.3, 0.3, 0.0, 0.0, 0.0);
    for (double r : triple) CHECK(r == doctest::Approx(0.3));
    const auto split = two_atom_eigenvalues(0.0, 0.0, 0.2, 0.1, 0.0, 0.0);
    CHECK(split[0] == doctest::Approx(-0.1));
    CHECK(split[1] == doctest::Approx(0.1));
    CHECK(split[2] == doctest::Approx(0.2));
}
