#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "parisi/errors.hpp"
#include "parisi/mixture.hpp"
#include "parisi/rng.hpp"

using namespace parisi;

TEST_CASE("eval_mixture basic values") {
    MixtureSpec sk = MixtureSpec::sk(1.0);  // {2: 0.5}
    CHECK(sk.eval(1.0, 0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(sk.eval(0.5, 2) == doctest::Approx(1.0).epsilon(1e-14));

    // Independent Horner evaluation of xi'' for {2:1, 3:0.2} at s=-1:
    // 2*1 + 6*0.2*(-1) = 0.8.
    MixtureSpec mix({{2, 1.0}, {3, 0.2}});
    CHECK(mix.eval(-1.0, 2) == doctest::Approx(0.8).epsilon(1e-14));
    double horner = 0.0;
    for (int p = 3; p >= 2; --p) {
        double c = (p == 3) ? 0.2 : 1.0;
        horner = (horner + c * p * (p - 1)) * ((p > 2) ? -1.0 : 1.0);
    }
    CHECK(mix.eval(-1.0, 2) == doctest::Approx(horner).epsilon(1e-14));

    CHECK_THROWS_AS(sk.eval(1.5, 0), domain_error);
    CHECK_THROWS_AS(sk.eval(0.5, 3), domain_error);
    CHECK_THROWS_AS(MixtureSpec({{1, 0.5}}), domain_error);
    CHECK_THROWS_AS(MixtureSpec({{2, -0.1}}), domain_error);
    CHECK_THROWS_AS(MixtureSpec({}), domain_error);
    CHECK_NOTHROW(MixtureSpec({}, true));
}

TEST_CASE("theta values and derivative identity") {
    MixtureSpec sk = MixtureSpec::sk(1.0);
    CHECK(theta_eval(sk, 0.0) == doctest::Approx(0.0));
    CHECK(theta_eval(sk, 1.0) == doctest::Approx(0.5).epsilon(1e-14));

    MixtureSpec cubic({{3, 1.0}});
    CHECK(theta_eval(cubic, 0.5) == doctest::Approx(0.25).epsilon(1e-13));
    CHECK(theta_eval(cubic, 0.5) ==
          doctest::Approx(0.5 * cubic.eval(0.5, 1) - cubic.eval(0.5, 0)).epsilon(1e-14));

    // theta'(s) = s xi''(s) by central differences.
    MixtureSpec mix({{2, 0.7}, {4, 0.2}, {5, 0.05}});
    for (double s : {-0.6, -0.2, 0.3, 0.8}) {
        double fd = (theta_eval(mix, s + 1e-6) - theta_eval(mix, s - 1e-6)) / 2e-6;
        CHECK(fd == doctest::Approx(s * mix.eval(s, 2)).epsilon(1e-6));
    }
}

TEST_CASE("derivatives match finite differences") {
    MixtureSpec mix({{2, 0.4}, {3, 0.1}, {6, 0.05}});
    for (double s : {-0.7, -0.1, 0.2, 0.55, 0.9}) {
        double fd1 = (mix.eval(s + 1e-6, 0) - mix.eval(s - 1e-6, 0)) / 2e-6;
        double fd2 = (mix.eval(s + 1e-5, 1) - mix.eval(s - 1e-5, 1)) / 2e-5;
        CHECK(std::abs(fd1 - mix.eval(s, 1)) <= 1e-6 * std::max(1.0, std::abs(fd1)));
        CHECK(std::abs(fd2 - mix.eval(s, 2)) <= 1e-6 * std::max(1.0, std::abs(fd2)));
    }
}

TEST_CASE("convexity checks") {
    for (double beta : {0.2, 0.5, 1.0, 2.0})
        CHECK(check_convexity(MixtureSpec::sk(beta)).convex);

    // 2p/2p+1 pair with c = 3 g3^2/g2^2 < 1 stays convex.
    MixtureSpec ex1({{2, 0.5}, {3, 0.15}});  // c = 0.9
    CHECK(check_convexity(ex1).convex);

    ConvexityReport bad = check_convexity(MixtureSpec({{3, 1.0}}));
    CHECK_FALSE(bad.convex);
    CHECK(bad.witness.value() == doctest::Approx(-1.0).epsilon(1e-6));
}

TEST_CASE("monotone ratio for the odd-coupling families") {
    // xi''/(xi''+xi''(-s)) = (1+cs)/2 for the 2/3 pair.
    for (double c : {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9}) {
        MixtureSpec mix({{2, 0.5}, {3, 0.5 * c / 3.0}});
        MonotoneReport rep = check_monotone_ratio(mix, mix, true);
        CHECK(rep.monotone);
    }
    // Decoupled variant: (1+cs)/(2(1+((1 +- t)/2)cs)) is nondecreasing.
    MixtureSpec xi({{2, 0.5}, {3, 0.1}});
    MixtureSpec xi0({{2, 0.5}, {3, 0.05}});
    CHECK(check_monotone_ratio(xi, xi0, true).monotone);
    CHECK(check_monotone_ratio(xi, xi0, false).monotone);

    // Even mixture against itself: ratio is the constant 1/2.
    MixtureSpec even({{2, 0.3}, {4, 0.2}});
    CHECK(check_monotone_ratio(even, even, true).monotone);

    // A decreasing ratio is detected: make xi0'' grow faster than xi''.
    MixtureSpec slow({{2, 1.0}});
    MixtureSpec fast({{2, 0.1}, {4, 2.0}});
    MonotoneReport rep = check_monotone_ratio(slow, fast, false);
    CHECK_FALSE(rep.monotone);
    CHECK(rep.witness.has_value());
}

TEST_CASE("dominance checks") {
    MixtureSpec even({{2, 0.5}, {4, 0.25}});
    SUBCASE("xi0 = t xi strict") {
        MixtureSpec damped({{2, 0.25}, {4, 0.125}});
        DominanceReport rep = check_dominance(CouplingSpec(even, damped, 0.0, 0.0));
        CHECK(rep.weak);
        CHECK(rep.strict);
    }
    SUBCASE("identical coupling is weak only") {
        DominanceReport rep = check_dominance(CouplingSpec(even, even, 0.0, 0.0));
        CHECK(rep.weak);
        CHECK_FALSE(rep.strict);
    }
    SUBCASE("damped odd term is strict") {
        MixtureSpec xi({{2, 0.5}, {3, 0.1}});
        MixtureSpec xi0({{2, 0.5}, {3, 0.05}});
        DominanceReport rep = check_dominance(CouplingSpec(xi, xi0, 0.0, 0.0));
        CHECK(rep.strict);
    }
    SUBCASE("violation reports a witness") {
        MixtureSpec xi({{2, 0.5}});
        MixtureSpec xi0({{2, 0.8}});
        DominanceReport rep = check_dominance(CouplingSpec(xi, xi0, 0.0, 0.0));
        CHECK_FALSE(rep.weak);
        CHECK(rep.witness.has_value());
    }
}

TEST_CASE("coupling iota convention") {
    MixtureSpec sk = MixtureSpec::sk(1.0);
    CHECK(CouplingSpec(sk, sk, 0.0, 0.3).iota() == 1);
    CHECK(CouplingSpec(sk, sk, 0.0, 0.0).iota() == 1);
    CHECK(CouplingSpec(sk, sk, 0.0, -0.3).iota() == -1);
}
