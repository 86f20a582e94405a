#include <gtest/gtest.h>

#include <cmath>

#include "ergolab/entropy.hpp"

using namespace ergolab;

namespace {

// Brute-force word count: every word over the alphabet, filtered by the
// legality predicate.
std::size_t brute_count(const System& sys, std::size_t n) {
    const int k = sys.alphabet();
    std::size_t total = 0, count = 0;
    std::size_t all = 1;
    for (std::size_t i = 0; i < n; ++i) all *= static_cast<std::size_t>(k);
    for (std::size_t code = 0; code < all; ++code, ++total) {
        Word w(n);
        std::size_t c = code;
        for (std::size_t i = 0; i < n; ++i, c /= k) w[n - 1 - i] = static_cast<Symbol>(c % k);
        if (word_legal(sys, w)) ++count;
    }
    return count;
}

std::array<Point, 4> fixed4() {
    return {SymbolicPoint::periodic({0}), SymbolicPoint::periodic({1}), SymbolicPoint::periodic({2}), SymbolicPoint::periodic({3})};
}

} // namespace

TEST(CountWords, Examples) {
    EXPECT_EQ(count_words(full_shift(2), 5), 32);
    EXPECT_EQ(count_words(golden_mean_sft(), 5), 13);
    EXPECT_EQ(count_words(power(full_shift(2), 3), 2), 64);
    EXPECT_THROW(count_words(halving_map(), 3), Error);
    EXPECT_THROW(count_words(full_shift(2), 0), Error);
}

TEST(CountWords, MatchesBruteForce) {
    const auto gm = golden_mean_sft();
    const auto dz = density_zero_subshift();
    const auto other = sft_from_forbidden(3, {"02", "11"});
    for (std::size_t n = 1; n <= 12; ++n) {
        EXPECT_EQ(count_words(gm, n), brute_count(gm, n)) << n;
        EXPECT_EQ(count_words(dz, n), brute_count(dz, n)) << n;
        if (n <= 9) {
            EXPECT_EQ(count_words(other, n), brute_count(other, n)) << n;
        }
    }
}

TEST(CountWords, GoldenMeanFibonacci) {
    BigInt a = 2, b = 3; // counts at n = 1, 2
    for (std::size_t n = 3; n <= 64; ++n) {
        BigInt c = a + b;
        EXPECT_EQ(count_words(golden_mean_sft(), n), c) << n;
        a = b;
        b = c;
    }
}

TEST(CountWords, LogOfLargeCounts) {
    EXPECT_NEAR(log_bigint(count_words(full_shift(2), 200)), 200 * std::log(2.0), 1e-9);
    EXPECT_NEAR(log_bigint(BigInt(1)), 0.0, 0.0);
}

TEST(MaxSeparated, SymbolicExact) {
    auto s = max_separated(full_shift(2), 3, 0.6);
    EXPECT_EQ(s.size(), 8u);
    EXPECT_EQ(s.method, SeparationMethod::Brute);
    EXPECT_FALSE(s.degraded);
    EXPECT_TRUE(is_separated(full_shift(2), s.points, 3, 0.6));
    // eps = 0.3 needs two symbols of agreement per step
    auto t = max_separated(golden_mean_sft(), 4, 0.3);
    EXPECT_EQ(t.size(), brute_count(golden_mean_sft(), 5));
    EXPECT_TRUE(is_separated(golden_mean_sft(), t.points, 4, 0.3));
}

TEST(MaxSeparated, BeyondDiameterIsOnePoint) {
    EXPECT_EQ(max_separated(full_shift(3), 5, 1.5).size(), 1u);
    EXPECT_EQ(max_separated(tent_map(), 5, 2.0).size(), 1u);
    EXPECT_EQ(max_separated(golden_rotation(), 5, 0.6).size(), 1u);
}

TEST(MaxSeparated, RotationIsConstantInN) {
    const auto r = golden_rotation();
    std::size_t first = 0;
    for (std::size_t n : {1u, 5u, 20u}) {
        SeparationBudget b;
        b.pool = 1 << 14;
        auto s = max_separated(r, n, 0.1, SeparationMethod::Greedy, b);
        EXPECT_LE(s.size(), 10u);
        EXPECT_TRUE(is_separated(r, s.points, n, 0.1));
        if (first == 0) first = s.size();
        EXPECT_EQ(s.size(), first) << n;
    }
}

TEST(MaxSeparated, BruteDegradesWhenOverBudget) {
    SeparationBudget b;
    b.max_words = 100;
    auto s = max_separated(full_shift(2), 10, 0.6, SeparationMethod::Brute, b);
    EXPECT_TRUE(s.degraded);
    EXPECT_EQ(s.size(), 100u);
    EXPECT_TRUE(is_separated(full_shift(2), s.points, 10, 0.6));
}

TEST(MaxSeparated, GreedySetsReverify) {
    SeparationBudget b;
    b.pool = 1 << 12;
    for (const auto& sys : {tent_map(), halving_map(), logistic(3.9)}) {
        auto s = max_separated(sys, 6, 0.05, SeparationMethod::Greedy, b);
        EXPECT_GE(s.size(), 1u);
        EXPECT_TRUE(is_separated(sys, s.points, 6, 0.05)) << sys.name;
    }
}

TEST(EntropyEstimate, Slopes) {
    auto fs = entropy_estimate(full_shift(2), {0.5}, {4, 6, 8, 10});
    EXPECT_NEAR(fs.estimate, std::log(2.0), 1e-9);
    ASSERT_TRUE(fs.word_count_fit.has_value());
    EXPECT_NEAR(fs.word_count_fit->slope, std::log(2.0), 1e-9);

    auto gm = entropy_estimate(golden_mean_sft(), {0.25}, {8, 16, 24, 32});
    EXPECT_NEAR(gm.estimate, std::log((1 + std::sqrt(5.0)) / 2), 0.05);

    SeparationBudget b;
    b.pool = 1 << 14;
    auto rot = entropy_estimate(golden_rotation(), {0.05}, {1, 4, 8, 16}, SeparationMethod::Greedy, b);
    EXPECT_NEAR(rot.estimate, 0.0, 1e-9);
}

TEST(EntropyEstimate, TentNearLog2) {
    SeparationBudget b;
    b.pool = 1 << 16;
    auto e = entropy_estimate(tent_map(), {0.01}, {1, 2, 3, 4, 5, 6}, SeparationMethod::Greedy, b);
    EXPECT_NEAR(e.estimate, std::log(2.0), 0.1);
    ASSERT_EQ(e.per_eps.size(), 1u);
    EXPECT_TRUE(e.per_eps[0].fitted);
}

TEST(EntropyEstimate, SaturationShrinksWindow) {
    SeparationBudget b;
    b.pool = 1 << 10;
    auto e = entropy_estimate(tent_map(), {0.01}, {1, 2, 3, 4, 5, 6, 7, 8}, SeparationMethod::Greedy, b);
    bool any = false;
    for (const auto& r : e.rows) any = any || r.saturated;
    EXPECT_TRUE(any);
    if (e.per_eps[0].fitted) {
        for (const auto& r : e.rows)
            if (r.n >= e.per_eps[0].fit_from && r.n <= e.per_eps[0].fit_to) {
                EXPECT_FALSE(r.saturated);
            }
    }
}

TEST(EntropyEstimate, Errors) {
    EXPECT_THROW(entropy_estimate(full_shift(2), {0.5}, {1, 2}), Error);
    EXPECT_THROW(entropy_estimate(full_shift(2), {}, {1, 2, 3}), Error);
    EXPECT_THROW(max_separated(full_shift(2), 0, 0.5), Error);
    EXPECT_THROW(max_separated(full_shift(2), 3, 0.0), Error);
}

TEST(FourPointSelector, Examples) {
    auto y = fixed4();
    std::vector<Point> c(y.begin(), y.end());
    auto sel = four_point_selector(full_shift(4), c, 20, 0.25);
    ASSERT_TRUE(sel.has_value());
    EXPECT_EQ((*sel)[2].symbolic().at(0), 2);

    std::vector<Point> two{SymbolicPoint::periodic({0}), SymbolicPoint::periodic({1})};
    EXPECT_FALSE(four_point_selector(full_shift(2), two, 20, 0.25).has_value());

    // (01)^inf and (10)^inf are too close in the orbit sense once times shift
    std::vector<Point> mixed{SymbolicPoint::periodic({0, 1}), SymbolicPoint::periodic({1, 0}), SymbolicPoint::periodic({2}),
                             SymbolicPoint::periodic({3}), SymbolicPoint::periodic({0})};
    EXPECT_FALSE(four_point_selector(full_shift(4), mixed, 10, 0.25).has_value());
}

TEST(Family, XiIndexing) {
    EXPECT_EQ(xi_of(0, 3), (std::vector<int>{1, 1, 1}));
    EXPECT_EQ(xi_of(5, 3), (std::vector<int>{2, 1, 2}));
    auto y = fixed4();
    auto t = family_targets(y, {2, 1});
    ASSERT_EQ(t.size(), 4u);
    EXPECT_EQ(t[0].symbolic().at(0), 2);
    EXPECT_EQ(t[1].symbolic().at(0), 3);
    EXPECT_EQ(t[2].symbolic().at(0), 0);
    EXPECT_EQ(t[3].symbolic().at(0), 1);
}

TEST(Family, DepthOneHasTwoMembers) {
    FamilyParams p;
    p.m = 8;
    p.depth = 1;
    auto fam = build_separated_family(full_shift(4), fixed4(), p);
    EXPECT_EQ(fam.members.size(), 2u);
    auto rep = verify_pairwise_separation(fam);
    EXPECT_EQ(rep.pairs, 1u);
}

TEST(Family, DeltaOutOfRange) {
    FamilyParams p;
    p.delta = 0.2;
    EXPECT_THROW(build_separated_family(full_shift(4), fixed4(), p), Error);
    p.delta = 0.1;
    EXPECT_THROW(build_separated_family(full_shift(4), fixed4(), p), Error);
    p.delta = 0.0;
    EXPECT_THROW(build_separated_family(full_shift(4), fixed4(), p), Error);
}

TEST(Family, FullShiftFourDepthSix) {
    FamilyParams p; // m = 8, delta = 0.05, N = 6, eps_trace = 1/2, gamma = 1/4
    auto fam = build_separated_family(full_shift(4), fixed4(), p);
    ASSERT_EQ(fam.members.size(), 64u);
    for (const auto& m : fam.members) {
        EXPECT_EQ(m.certificate.instance.schedule.max_gap(), 1u);
        for (auto c : m.certificate.mistakes) EXPECT_EQ(c, 0u);
    }
    // Horizon counted in targets: every pair separates.
    auto tgt = verify_pairwise_separation(fam, HorizonIndex::Target);
    EXPECT_EQ(tgt.pairs, 2016u);
    EXPECT_EQ(tgt.case1, 2016u);
    EXPECT_NEAR(tgt.bound, std::log(2.0) / (2 * 1.05 * 8), 1e-12);

    // Horizon counted in xi positions: a pair first differing at position k
    // first differs in symbols at time 16(k-1) and is 1/4-separated from time
    // 16k - 17 on, past ceil(8.4 k) once k >= 3. Failing pairs:
    // sum_{k=3..6} 2^(k-1) 4^(6-k) = 480.
    auto pair = check_pairwise_separation(fam, HorizonIndex::Pair);
    EXPECT_EQ(pair.pairs, 2016u);
    EXPECT_EQ(pair.failures, 480u);
    EXPECT_FALSE(pair.separated);
    EXPECT_EQ(pair.first_failure.substr(0, 13), "111111/111112");
    EXPECT_NEAR(pair.bound, std::log(2.0) / (1.05 * 8), 1e-12);
    EXPECT_THROW(verify_pairwise_separation(fam, HorizonIndex::Pair), Error);
}

TEST(Family, StaggeredGapsExerciseCaseTwo) {
    FamilyParams p;
    p.m = 40;
    p.depth = 4;
    // gap 3 everywhere when the last xi entry is 2, else gap 1
    auto fam = build_family_with_gaps(full_shift(4), fixed4(), p,
                                      [](const std::vector<int>& xi, std::size_t) -> std::size_t { return xi.back() == 2 ? 3 : 1; });
    ASSERT_EQ(fam.members.size(), 16u);
    auto rep = verify_pairwise_separation(fam, HorizonIndex::Target);
    EXPECT_EQ(rep.pairs, 120u);
    // Only pairs first differing at position 4 see start offsets 2*6 = 12 > 4*delta*m = 8.
    EXPECT_EQ(rep.case2, 8u);
    EXPECT_EQ(rep.case1, 112u);
    EXPECT_GT(rep.min_achieved, 0.25);
}

TEST(Family, PrescribedGapOutOfRange) {
    FamilyParams p;
    p.m = 8;
    p.depth = 2;
    EXPECT_THROW(build_family_with_gaps(full_shift(4), fixed4(), p, [](const std::vector<int>&, std::size_t) -> std::size_t { return 2; }),
                 Error);
}

TEST(Family, JsonRoundTrip) {
    FamilyParams p;
    p.depth = 3;
    auto fam = build_separated_family(full_shift(4), fixed4(), p);
    auto back = family_from_json(json::parse(family_to_json(fam).dump()));
    EXPECT_EQ(back.members.size(), 8u);
    EXPECT_EQ(back.m, fam.m);
    auto a = check_pairwise_separation(fam, HorizonIndex::Target);
    auto b = check_pairwise_separation(back, HorizonIndex::Target);
    EXPECT_EQ(a.pairs, b.pairs);
    EXPECT_EQ(a.failures, b.failures);

    json j = family_to_json(fam);
    j["members"][2]["xi"] = "1";
    EXPECT_THROW(family_from_json(j), Error);
    json k = family_to_json(fam);
    k["members"].erase(0);
    auto short_fam = family_from_json(k);
    EXPECT_THROW(check_pairwise_separation(short_fam), Error);
}
