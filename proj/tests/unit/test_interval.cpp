#include <gtest/gtest.h>

#include "ergolab/classify.hpp"
#include "ergolab/interval.hpp"

using namespace ergolab;

namespace {

std::vector<double> locations(const std::vector<FixedPointRecord>& v) {
    std::vector<double> out;
    for (const auto& r : v) out.push_back(r.location);
    return out;
}

} // namespace

TEST(FixedPoints, Halving) {
    auto fp = find_fixed_points(halving_map());
    ASSERT_EQ(fp.size(), 1u);
    EXPECT_EQ(fp[0].location, 0.0);
    ASSERT_TRUE(fp[0].exact);
    EXPECT_EQ(*fp[0].exact, 0);
}

TEST(FixedPoints, TentZeroAndTwoThirds) {
    auto fp = find_fixed_points(tent_map());
    ASSERT_EQ(fp.size(), 2u);
    EXPECT_EQ(*fp[0].exact, 0);
    EXPECT_EQ(*fp[1].exact, Rational(2, 3));
    // brackets carry a sign change or an exact zero
    for (const auto& r : fp) EXPECT_TRUE(r.g_lo * r.g_hi <= 0.0 || std::fabs(r.g_lo) <= 1e-10);
}

TEST(FixedPoints, IdentityIsContinuum) {
    auto fp = find_fixed_points(interval_map("x"));
    ASSERT_EQ(fp.size(), 1u);
    EXPECT_TRUE(fp[0].inconclusive);
    EXPECT_EQ(fp[0].lo, 0.0);
    EXPECT_EQ(fp[0].hi, 1.0);
}

TEST(FixedPoints, Logistic) {
    auto fp = find_fixed_points(logistic(2.5));
    ASSERT_EQ(fp.size(), 2u);
    EXPECT_NEAR(fp[0].location, 0.0, 1e-10);
    EXPECT_NEAR(fp[1].location, 0.6, 1e-10);
    EXPECT_FALSE(fp[1].exact);
}

TEST(FixedPoints, BracketsChangeSign) {
    for (const auto& f : {"cos(3*x)/2 + 0.5", "x*x", "0.9*x*(1-x) + 0.05", "1 - x"}) {
        auto sys = interval_map(f);
        for (const auto& r : find_fixed_points(sys)) {
            if (r.inconclusive) continue;
            EXPECT_TRUE(r.g_lo * r.g_hi <= 0.0 || std::fabs(r.g_lo) <= 1e-10 || std::fabs(r.g_hi) <= 1e-10) << f;
            EXPECT_LE(r.hi - r.lo, 1e-10) << f;
            EXPECT_LE(std::fabs(sys.interval_map().eval(r.location) - r.location), 1e-9) << f;
        }
    }
}

TEST(PeriodicPoints, HalvingHasNone) {
    EXPECT_TRUE(find_periodic_points(halving_map(), 2).empty());
}

TEST(PeriodicPoints, TentPeriodTwo) {
    auto pp = find_periodic_points(tent_map(), 2);
    ASSERT_EQ(pp.size(), 2u);
    EXPECT_EQ(*pp[0].exact, Rational(2, 5));
    EXPECT_EQ(*pp[1].exact, Rational(4, 5));
}

TEST(PeriodicPoints, TentCountsMatchFormula) {
    // the tent map has 2^q points with T^q(x) = x; least-period counts follow
    // by Moebius inversion: 2, 2, 6, 12, 30
    const std::size_t expect[] = {2, 2, 6, 12, 30};
    for (int q = 1; q <= 5; ++q) EXPECT_EQ(find_periodic_points(tent_map(), q).size(), expect[q - 1]) << q;
}

TEST(PeriodicPoints, PeriodOneEqualsFixed) {
    for (const auto& sys : {halving_map(), tent_map(), logistic(2.5)})
        EXPECT_EQ(locations(find_periodic_points(sys, 1)), locations(find_fixed_points(sys)));
}

TEST(Attraction, HalvingAttracts) {
    auto sys = halving_map();
    auto fp = find_fixed_points(sys);
    AttractionParams ap;
    ap.samples = 64;
    ap.horizon = 60;
    EXPECT_EQ(is_attracting(sys, fp[0], ap), Attraction::Attracting);
    // distance to 0 is non-increasing along every sampled orbit
    for (double x0 : fp[0].basin_starts) {
        double x = x0;
        for (int j = 0; j < 60; ++j) {
            double y = x / 2;
            EXPECT_LE(y, x);
            x = y;
        }
    }
}

TEST(Attraction, TentZeroRepels) {
    auto sys = tent_map();
    auto fp = find_fixed_points(sys);
    EXPECT_EQ(is_attracting(sys, fp[0]), Attraction::NotAttracting);
    // oracle: the orbit of 0.3 stays away from 0
    Point x = Point::real(0.3);
    double closest = 1.0;
    for (int j = 0; j < 1000; ++j) {
        closest = std::min(closest, x.coordinate());
        x = step(sys, x);
    }
    EXPECT_GE(closest, 0.3);
}

TEST(Attraction, InvolutionNotAttracting) {
    auto sys = interval_map("1 - x");
    auto fp = find_fixed_points(sys);
    ASSERT_EQ(fp.size(), 1u);
    EXPECT_NEAR(fp[0].location, 0.5, 1e-12);
    EXPECT_EQ(is_attracting(sys, fp[0]), Attraction::NotAttracting);
}

TEST(Attraction, RejectsNonFixed) {
    FixedPointRecord r;
    r.location = 0.5;
    EXPECT_THROW(is_attracting(halving_map(), r), Error);
}

TEST(Fnxgex, HalvingHolds) {
    auto sys = halving_map();
    auto fp = find_fixed_points(sys);
    auto rep = check_fnxgex(sys, fp[0]);
    EXPECT_TRUE(rep.hypothesis_met);
    EXPECT_EQ(rep.checked, 128u);
    EXPECT_TRUE(rep.violations.empty());
}

TEST(Fnxgex, SqrtHasTwoFixedPoints) {
    auto sys = interval_map("sqrt(x)");
    FixedPointRecord p;
    p.location = 1.0;
    auto rep = check_fnxgex(sys, p);
    EXPECT_FALSE(rep.hypothesis_met);
    EXPECT_EQ(rep.checked, 0u);
}

TEST(Fnxgex, PerturbedHalving) {
    auto sys = interval_map("x/2 + 0.1*x*(1-x)");
    auto fp = find_fixed_points(sys);
    ASSERT_EQ(fp.size(), 1u);
    auto rep = check_fnxgex(sys, fp[0]);
    EXPECT_TRUE(rep.hypothesis_met);
    EXPECT_TRUE(rep.violations.empty());
    // oracle: f(x) - x = -x/2 + 0.1 x (1 - x) < 0 on (0, 1]
    for (int i = 1; i <= 1000; ++i) {
        double x = i / 1000.0;
        EXPECT_LT(-x / 2 + 0.1 * x * (1 - x), 0.0);
    }
}

TEST(Fnxgex, ViolationsReportedWhenForced) {
    auto sys = tent_map();
    auto fp = find_fixed_points(sys);
    FnxgexParams p;
    p.assume_hypothesis = true;
    p.samples = 16;
    auto rep = check_fnxgex(sys, fp[1], p);
    EXPECT_FALSE(rep.violations.empty());
}

TEST(Classify, HalvingSatisfies) {
    auto v = classify_zero_entropy_app(halving_map());
    EXPECT_TRUE(v.characterization);
    ASSERT_TRUE(v.attractor.has_value());
    EXPECT_EQ(v.attractor->attraction, Attraction::Attracting);
    EXPECT_LT(v.entropy.estimate, 0.02);
    EXPECT_EQ(v.clusters.count(), 1u);
    EXPECT_TRUE(v.app_passes);
    ASSERT_TRUE(v.fnxgex.has_value());
    EXPECT_TRUE(v.fnxgex->hypothesis_met);
    EXPECT_TRUE(v.fnxgex->violations.empty());
    auto j = classify_to_json(halving_map(), v);
    EXPECT_TRUE(j.at("characterization").get<bool>());
}

TEST(Classify, TentFails) {
    auto v = classify_zero_entropy_app(tent_map());
    EXPECT_FALSE(v.characterization);
    EXPECT_EQ(v.census.fixed.size(), 2u);
    EXPECT_FALSE(v.census.higher.empty());
    EXPECT_NEAR(v.entropy.estimate, std::log(2.0), 0.1);
    EXPECT_GE(v.clusters.count(), 2u);
    EXPECT_FALSE(v.fnxgex.has_value());
}

TEST(Classify, LogisticTwoFixedPoints) {
    ClassifyParams p;
    p.entropy_n = {1, 2, 3, 4, 5, 6};
    auto v = classify_zero_entropy_app(logistic(2.5), p);
    EXPECT_FALSE(v.characterization);
    EXPECT_EQ(v.census.fixed.size(), 2u);
    ASSERT_FALSE(v.reasons.empty());
    EXPECT_EQ(v.reasons.front(), "2 fixed points");
}

TEST(Classify, RejectsNonInterval) { EXPECT_THROW(classify_zero_entropy_app(full_shift(2)), Error); }
