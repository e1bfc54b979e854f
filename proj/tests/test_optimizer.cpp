#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "parisi/errors.hpp"
#include "parisi/optimizer.hpp"
#include "parisi/rng.hpp"

using namespace parisi;

TEST_CASE("k=0 recovers the sk rs point") {
    MixtureSpec sk = MixtureSpec::sk(0.8);
    GridParams grid = GridParams::defaults(sk, 0.0);
    auto [m, v] = minimize_krsb(sk, 0.0, 0, 4, 1, grid);
    CHECK(m.size() == 1);  // exactly one atom by construction
    CHECK(m.atoms()[0] <= 1e-3);
    CHECK(v == doctest::Approx(std::log(2.0) + 0.16).epsilon(1e-4 / 0.85));
}

TEST_CASE("k=1 cannot improve below the at line") {
    MixtureSpec sk = MixtureSpec::sk(0.8);
    GridParams grid = GridParams::defaults(sk, 0.0);
    auto [m0, v0] = minimize_krsb(sk, 0.0, 0, 4, 1, grid);
    auto [m1, v1] = minimize_krsb(sk, 0.0, 1, 4, 1, grid);
    CHECK(std::abs(v1 - v0) <= 1e-4);
}

TEST_CASE("minimum never exceeds hand-picked candidates") {
    MixtureSpec mix({{2, 0.6}, {4, 0.15}});
    GridParams grid = GridParams::defaults(mix, 0.2);
    auto [m, v] = minimize_krsb(mix, 0.2, 1, 4, 3, grid);
    Rng rng(19);
    for (int rep = 0; rep < 6; ++rep) {
        double q1 = rng.uniform() * 0.5, q2 = 0.5 + rng.uniform() * 0.5;
        double a = rng.uniform();
        AtomicMeasure cand({q1, q2}, {a, 1.0 - a});
        CHECK(v <= parisi_functional(cand, mix, 0.2, grid) + 1e-5);
    }
}

TEST_CASE("seeded runs are reproducible bit for bit") {
    MixtureSpec sk = MixtureSpec::sk(1.1);
    GridParams grid = GridParams::defaults(sk, 0.2);
    auto [m1, v1] = minimize_krsb(sk, 0.2, 1, 3, 99, grid);
    auto [m2, v2] = minimize_krsb(sk, 0.2, 1, 3, 99, grid);
    CHECK(v1 == v2);
    REQUIRE(m1.size() == m2.size());
    for (std::size_t i = 0; i < m1.size(); ++i) {
        CHECK(m1.atoms()[i] == m2.atoms()[i]);
        CHECK(m1.weights()[i] == m2.weights()[i]);
    }
}

TEST_CASE("escalation on sk beta=0.8: rs verdict") {
    MixtureSpec sk = MixtureSpec::sk(0.8);
    GridParams grid = GridParams::defaults(sk, 0.0);
    EscalationParams ep;
    ep.restarts = 4;
    ep.q_grid_n = 21;
    ParisiEstimate est = find_parisi_measure(sk, 0.0, 2, 1e-5, 1, grid, ep);
    CHECK(est.k_used == 0);
    CHECK(est.conclusive);
    CHECK(est.criterion.pass);
    CHECK(est.measure.size() == 1);
    CHECK(est.eta <= 1e-3);
    CHECK(est.value == doctest::Approx(0.85314717).epsilon(2e-4));
    CHECK(est.history.size() >= 2);
}

TEST_CASE("escalation on sk beta=1.5 rejects rs") {
    MixtureSpec sk = MixtureSpec::sk(1.5);
    GridParams grid = GridParams::defaults(sk, 0.0);
    EscalationParams ep;
    ep.restarts = 3;
    ep.q_grid_n = 21;
    ParisiEstimate est = find_parisi_measure(sk, 0.0, 2, 1e-5, 1, grid, ep);
    CHECK(est.k_used >= 1);
    CHECK(est.measure.size() >= 2);
    // The Dirac level is strictly worse than the deeper levels.
    CHECK(est.history[0] > est.history.back() + 1e-4);
}

TEST_CASE("criterion linearity transfers pass to mixtures of probes") {
    MixtureSpec sk = MixtureSpec::sk(0.8);
    GridParams grid = GridParams::defaults(sk, 0.0);
    AtomicMeasure mu0 = AtomicMeasure::dirac(0.0);
    PhiSolution phi = solve_phi(mu0, sk, 0.0, grid);
    MomentCurve curve = second_moment_curve(phi, CurveMethod::deterministic, {});
    CriterionReport rep = check_parisi_criterion(mu0, sk, 0.0, 21, grid, {});
    REQUIRE(rep.pass);
    Rng rng(31);
    for (int rep_i = 0; rep_i < 10; ++rep_i) {
        double q1 = rng.uniform(), q2 = rng.uniform(), a = rng.uniform();
        AtomicMeasure probe({q1, q2}, {a, 1.0 - a});
        CHECK(directional_derivative(mu0, probe, sk, 0.0, curve) >= -kCriterionTol);
    }
}

TEST_CASE("guards") {
    MixtureSpec sk = MixtureSpec::sk(1.0);
    GridParams grid = GridParams::defaults(sk, 0.0);
    CHECK_THROWS_AS(minimize_krsb(sk, 0.0, -1, 2, 1, grid), domain_error);
    CHECK_THROWS_AS(find_parisi_measure(MixtureSpec({}, true), 0.0, 2, 1e-5, 1, grid, {}),
                    domain_error);
}
