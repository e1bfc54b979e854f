#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "parisi/errors.hpp"
#include "parisi/flows.hpp"
#include "parisi/rng.hpp"

using namespace parisi;

namespace {

MomentCurve det_curve(const PhiSolution& phi, int r_samples = 257) {
    FlowParams p;
    p.r_samples = r_samples;
    return second_moment_curve(phi, CurveMethod::deterministic, p);
}

}  // namespace

TEST_CASE("eu2 starts at the deterministic square and stays in [0,1)") {
    MixtureSpec sk = MixtureSpec::sk(1.2);
    double h = 0.4;
    AtomicMeasure mu({0.2, 0.6}, {0.5, 0.5});
    PhiSolution phi = solve_phi(mu, sk, h, GridParams::defaults(sk, h));
    MomentCurve curve = det_curve(phi);

    double u0 = phi.dvalue_at0(h);
    CHECK(curve.eu2.front() == doctest::Approx(u0 * u0).epsilon(1e-10));
    for (std::size_t i = 0; i < curve.r.size(); ++i) {
        CHECK(curve.eu2[i] < 1.0);
        CHECK(curve.eu2[i] >= -1e-12);
        if (i > 0) CHECK(curve.eu2[i] >= curve.eu2[i - 1] - 1e-8);  // martingale monotonicity
    }
}

TEST_CASE("h=0 keeps eu2(0)=0 and the sk beta<=1 bound eu2(r) <= r") {
    MixtureSpec sk = MixtureSpec::sk(1.0);
    PhiSolution phi = solve_phi(AtomicMeasure::dirac(0.0), sk, 0.0, GridParams::defaults(sk, 0.0));
    MomentCurve curve = det_curve(phi);
    CHECK(curve.eu2.front() == doctest::Approx(0.0));
    for (std::size_t i = 0; i < curve.r.size(); ++i)
        CHECK(curve.eu2[i] <= curve.r[i] + 1e-9);
}

TEST_CASE("increment identity d eu2 = zeta euxx2 dr") {
    MixtureSpec mix({{2, 0.5}, {3, 0.08}});
    double h = 0.25;
    AtomicMeasure mu({0.15, 0.55}, {0.35, 0.65});
    PhiSolution phi = solve_phi(mu, mix, h, GridParams::defaults(mix, h));
    MomentCurve curve = det_curve(phi, 513);

    // eu2(b) - eu2(a) = int_a^b zeta euxx2 dw via the trapezoid on the curve grid.
    double integral = 0.0;
    for (std::size_t i = 1; i < curve.r.size(); ++i) {
        double za = mix.d2(curve.r[i - 1]) * curve.euxx2[i - 1];
        double zb = mix.d2(curve.r[i]) * curve.euxx2[i];
        integral += 0.5 * (za + zb) * (curve.r[i] - curve.r[i - 1]);
        double lhs = curve.eu2[i] - curve.eu2.front();
        CHECK(std::abs(lhs - integral) <= 1e-3);
    }
}

TEST_CASE("monte carlo oracle agrees with the deterministic density") {
    MixtureSpec sk = MixtureSpec::sk(1.3);
    double h = 0.3;
    AtomicMeasure mu({0.25, 0.7}, {0.6, 0.4});
    PhiSolution phi = solve_phi(mu, sk, h, GridParams::defaults(sk, h));

    MomentCurve det = det_curve(phi);
    FlowParams p;
    p.n_paths = 100000;
    p.n_steps = 256;
    p.seed = 42;
    MomentCurve mc = second_moment_curve(phi, CurveMethod::monte_carlo, p);
    CHECK(mc.monte_carlo);

    for (std::size_t i = 0; i < mc.r.size(); i += 16) {
        double se = std::max(mc.std_err[i], 1e-5);
        CHECK(std::abs(mc.eu2[i] - det.eu2_at(mc.r[i])) <= 3.0 * se + 2e-3);
    }
}

TEST_CASE("monte carlo is reproducible bit for bit") {
    MixtureSpec sk = MixtureSpec::sk(1.0);
    PhiSolution phi = solve_phi(AtomicMeasure::dirac(0.3), sk, 0.1, GridParams::defaults(sk, 0.1));
    FlowParams p;
    p.n_paths = 2000;
    p.n_steps = 64;
    p.seed = 7;
    MomentCurve a = second_moment_curve(phi, CurveMethod::monte_carlo, p);
    MomentCurve b = second_moment_curve(phi, CurveMethod::monte_carlo, p);
    for (std::size_t i = 0; i < a.r.size(); ++i) CHECK(a.eu2[i] == b.eu2[i]);
}

TEST_CASE("directional derivative basics") {
    MixtureSpec sk08 = MixtureSpec::sk(0.8);
    PhiSolution phi08 =
        solve_phi(AtomicMeasure::dirac(0.0), sk08, 0.0, GridParams::defaults(sk08, 0.0));
    MomentCurve c08 = det_curve(phi08);

    SUBCASE("toward itself vanishes") {
        CHECK(directional_derivative(AtomicMeasure::dirac(0.0), AtomicMeasure::dirac(0.0), sk08,
                                     0.0, c08) == doctest::Approx(0.0));
    }
    SUBCASE("delta_0 optimal for beta<=1: derivatives nonnegative") {
        Rng rng(3);
        for (int rep = 0; rep < 20; ++rep) {
            double q = rng.uniform();
            double d = directional_derivative(AtomicMeasure::dirac(0.0),
                                              AtomicMeasure::dirac(q), sk08, 0.0, c08);
            CHECK(d >= -1e-9);
        }
    }
    SUBCASE("beta=1.5 has a descent direction from delta_0") {
        MixtureSpec sk15 = MixtureSpec::sk(1.5);
        PhiSolution phi15 =
            solve_phi(AtomicMeasure::dirac(0.0), sk15, 0.0, GridParams::defaults(sk15, 0.0));
        MomentCurve c15 = det_curve(phi15);
        double d = directional_derivative(AtomicMeasure::dirac(0.0), AtomicMeasure::dirac(0.1),
                                          sk15, 0.0, c15);
        CHECK(d < -1e-6);
    }
}

TEST_CASE("directional derivative is linear in the probe measure") {
    MixtureSpec mix({{2, 0.6}, {4, 0.1}});
    double h = 0.2;
    AtomicMeasure mu0({0.3, 0.7}, {0.5, 0.5});
    PhiSolution phi = solve_phi(mu0, mix, h, GridParams::defaults(mix, h));
    MomentCurve curve = det_curve(phi);

    Rng rng(17);
    for (int rep = 0; rep < 10; ++rep) {
        double q1 = rng.uniform(), q2 = rng.uniform(), q3 = rng.uniform();
        double a1 = rng.uniform(), a2 = rng.uniform(), a3 = rng.uniform();
        double tot = a1 + a2 + a3;
        a1 /= tot;
        a2 /= tot;
        a3 /= tot;
        AtomicMeasure mixmu({q1, q2, q3}, {a1, a2, a3});
        double lhs = directional_derivative(mu0, mixmu, mix, h, curve);
        double rhs = a1 * directional_derivative(mu0, AtomicMeasure::dirac(q1), mix, h, curve) +
                     a2 * directional_derivative(mu0, AtomicMeasure::dirac(q2), mix, h, curve) +
                     a3 * directional_derivative(mu0, AtomicMeasure::dirac(q3), mix, h, curve);
        CHECK(std::abs(lhs - rhs) <= 1e-9);
    }
}

TEST_CASE("criterion verdicts for sk") {
    GridParams g08 = GridParams::defaults(MixtureSpec::sk(0.8), 0.0);
    CriterionReport pass =
        check_parisi_criterion(AtomicMeasure::dirac(0.0), MixtureSpec::sk(0.8), 0.0, 21, g08, {});
    CHECK(pass.pass);

    GridParams g15 = GridParams::defaults(MixtureSpec::sk(1.5), 0.0);
    CriterionReport fail =
        check_parisi_criterion(AtomicMeasure::dirac(0.0), MixtureSpec::sk(1.5), 0.0, 21, g15, {});
    CHECK_FALSE(fail.pass);
    CHECK(fail.worst_q > 0.0);
    CHECK(fail.worst_q < 1.0);

    CHECK_THROWS_AS(check_parisi_criterion(AtomicMeasure::dirac(0.0), MixtureSpec({}, true), 0.0,
                                           21, g08, {}),
                    domain_error);
    CHECK_THROWS_AS(check_parisi_criterion(AtomicMeasure::dirac(0.0), MixtureSpec::sk(0.8), 0.0,
                                           5, g08, {}),
                    domain_error);
}

TEST_CASE("criterion pass bounds the functional improvement along probes") {
    MixtureSpec sk = MixtureSpec::sk(0.8);
    GridParams grid = GridParams::defaults(sk, 0.0);
    AtomicMeasure mu0 = AtomicMeasure::dirac(0.0);
    double p0 = parisi_functional(mu0, sk, 0.0, grid);
    CriterionReport rep = check_parisi_criterion(mu0, sk, 0.0, 21, grid, {});
    REQUIRE(rep.pass);
    // Convexity: P(mu_theta) >= P(mu0) + theta * derivative >= P(mu0) - theta*tol.
    for (double q : {0.2, 0.5, 0.9}) {
        for (double theta : {0.1, 0.4}) {
            AtomicMeasure blend({0.0, q}, {1.0 - theta, theta});
            double p = parisi_functional(blend, sk, 0.0, grid);
            CHECK(p >= p0 - theta * kCriterionTol - 1e-7);
        }
    }
}

TEST_CASE("support conditions at delta_0") {
    SUBCASE("beta=0.8 satisfied") {
        MixtureSpec sk = MixtureSpec::sk(0.8);
        PhiSolution phi =
            solve_phi(AtomicMeasure::dirac(0.0), sk, 0.0, GridParams::defaults(sk, 0.0));
        MomentCurve curve = det_curve(phi);
        SupportReport rep =
            check_support_conditions(AtomicMeasure::dirac(0.0), sk, 0.0, 0.0, curve);
        CHECK(rep.eq_gap == doctest::Approx(0.0).epsilon(1e-10));
        CHECK(rep.ineq_slack == doctest::Approx(1.0 - 0.64).epsilon(1e-8));
    }
    SUBCASE("beta=1.2 violated") {
        MixtureSpec sk = MixtureSpec::sk(1.2);
        PhiSolution phi =
            solve_phi(AtomicMeasure::dirac(0.0), sk, 0.0, GridParams::defaults(sk, 0.0));
        MomentCurve curve = det_curve(phi);
        SupportReport rep =
            check_support_conditions(AtomicMeasure::dirac(0.0), sk, 0.0, 0.0, curve);
        CHECK(rep.ineq_slack == doctest::Approx(1.0 - 1.44).epsilon(1e-8));
        CHECK(rep.ineq_slack < 0.0);
    }
    SUBCASE("q=1 flagged invalid") {
        MixtureSpec sk = MixtureSpec::sk(0.8);
        PhiSolution phi =
            solve_phi(AtomicMeasure::dirac(0.0), sk, 0.0, GridParams::defaults(sk, 0.0));
        MomentCurve curve = det_curve(phi);
        CHECK_THROWS_AS(
            check_support_conditions(AtomicMeasure::dirac(0.0), sk, 0.0, 1.0, curve),
            domain_error);
    }
}

TEST_CASE("at-line check") {
    SUBCASE("h=0 root is 0 for every beta") {
        for (double beta : {0.5, 0.9, 1.5}) {
            ATLineReport rep = at_line_check(MixtureSpec::sk(beta), 0.0);
            CHECK(rep.q_root == 0.0);
            CHECK(rep.lhs_ineq == doctest::Approx(beta * beta).epsilon(1e-12));
            CHECK(rep.rs_consistent == (beta <= 1.0));
        }
    }
    SUBCASE("sk beta=1.5 h=0: lhs = 2.25 exactly") {
        ATLineReport rep = at_line_check(MixtureSpec::sk(1.5), 0.0);
        CHECK(std::abs(rep.lhs_ineq - 2.25) <= 1e-9);
        CHECK_FALSE(rep.rs_consistent);
    }
    SUBCASE("sk beta=0.5 h=0.3 consistent with interior root") {
        ATLineReport rep = at_line_check(MixtureSpec::sk(0.5), 0.3);
        CHECK(rep.q_root > 0.0);
        CHECK(rep.q_root < 1.0);
        CHECK(rep.rs_consistent);
        // Verify the fixed point with an independent quadrature.
        const int n = 200001;
        double sigma = std::sqrt(0.25 * rep.q_root);
        double acc = 0.0, range = 8.0;
        for (int i = 0; i < n; ++i) {
            double z = -range + 2.0 * range * i / (n - 1);
            double t = std::tanh(sigma * z + 0.3);
            acc += t * t * std::exp(-0.5 * z * z);
        }
        acc *= 2.0 * range / (n - 1) / std::sqrt(2.0 * 3.14159265358979323846);
        CHECK(rep.q_root == doctest::Approx(acc).epsilon(1e-5));
    }
    SUBCASE("quad order gate") {
        CHECK_THROWS_AS(at_line_check(MixtureSpec::sk(1.0), 0.0, 10), domain_error);
    }
}
