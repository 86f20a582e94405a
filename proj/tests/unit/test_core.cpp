#include <gtest/gtest.h>

#include <random>

#include "ergolab/zoo.hpp"

using namespace ergolab;

TEST(Step, ShiftDropsFirstSymbol) {
    auto sys = full_shift(2);
    Point y = step(sys, Point::word("0110"));
    EXPECT_EQ(y.symbolic().word(0, 3), parse_word("110"));
}

TEST(Step, RotationAddsModOne) {
    auto sys = rotation(0.25);
    Point y = step(sys, Point::circle(0.9));
    EXPECT_NEAR(y.coordinate(), 0.15, 1e-15);
}

TEST(Step, IntervalFormula) {
    auto sys = interval_map("x/2");
    EXPECT_DOUBLE_EQ(step(sys, Point::real(0.8)).coordinate(), 0.4);
}

TEST(Step, IllegalPointRejected) {
    auto gm = golden_mean_sft();
    EXPECT_THROW(step(gm, Point::word("0110")), Error);
    EXPECT_THROW(step(full_shift(2), Point::word("0120")), Error);
    EXPECT_THROW(step(halving_map(), Point::circle(0.3)), Error);
    EXPECT_THROW(step(halving_map(), Point::real(1.5)), Error);
    EXPECT_THROW(step(density_zero_subshift(), Point::word("11")), Error);
}

TEST(OrbitSegment, RepeatedHalving) {
    auto seg = orbit_segment(halving_map(), Point::real(1.0), 4);
    ASSERT_EQ(seg.length(), 4u);
    const double expect[] = {1.0, 0.5, 0.25, 0.125};
    for (int i = 0; i < 4; ++i) EXPECT_EQ(seg.states[i].coordinate(), expect[i]);
}

TEST(OrbitSegment, PeriodTwoPoint) {
    auto sys = full_shift(2);
    auto seg = orbit_segment(sys, Point::word("", "01"), 3);
    EXPECT_EQ(dist(sys, seg.states[0], Point::word("", "01")), 0.0);
    EXPECT_EQ(dist(sys, seg.states[1], Point::word("", "10")), 0.0);
    EXPECT_EQ(dist(sys, seg.states[2], Point::word("", "01")), 0.0);
}

TEST(OrbitSegment, GoldenRotationMatchesArithmetic) {
    auto sys = golden_rotation();
    auto seg = orbit_segment(sys, Point::circle(0.0), 3);
    // oracle: x_{j+1} = frac(x_j + phi) in long double
    long double x = 0, a = 0.6180339887498948482L;
    for (int j = 0; j < 3; ++j) {
        EXPECT_NEAR(seg.states[j].coordinate(), static_cast<double>(x), 1e-15);
        x += a;
        if (x >= 1) x -= 1;
    }
    EXPECT_NEAR(seg.states[1].coordinate(), 0.6180339887, 1e-10);
    EXPECT_NEAR(seg.states[2].coordinate(), 0.2360679775, 1e-10);
}

TEST(OrbitSegment, ZeroLengthRejected) {
    EXPECT_THROW(orbit_segment(halving_map(), Point::real(0.5), 0), Error);
}

TEST(Dist, SymbolicFirstDisagreement) {
    auto sys = full_shift(2);
    EXPECT_EQ(dist(sys, Point::word("0110"), Point::word("0100")), 0.25);
    EXPECT_EQ(dist(sys, Point::word("0110"), Point::word("0110")), 0.0);
    EXPECT_EQ(dist(sys, Point::word("1"), Point::word("0")), 1.0);
}

TEST(Dist, CircleWrapsAround) {
    auto sys = rotation(0.1);
    EXPECT_NEAR(dist(sys, Point::circle(0.05), Point::circle(0.95)), 0.1, 1e-15);
}

TEST(Dist, ProductUsesMax) {
    auto sys = product(full_shift(2), halving_map());
    Point a = Point::product(Point::word("00"), Point::real(0.1));
    Point b = Point::product(Point::word("01"), Point::real(0.9));
    EXPECT_NEAR(dist(sys, a, b), 0.8, 1e-15);
    Point c = step(sys, a);
    EXPECT_NEAR(c.product_point().parts[1].coordinate(), 0.05, 1e-15);
}

TEST(Dist, UltrametricOnRandomWords) {
    std::mt19937_64 rng(7);
    auto sys = full_shift(3);
    std::uniform_int_distribution<int> sym(0, 2);
    auto rand_point = [&] {
        std::string s;
        for (int i = 0; i < 10; ++i) s.push_back(static_cast<char>('0' + sym(rng) % (i < 3 ? 1 : 3)));
        return Point::word(s);
    };
    for (int t = 0; t < 2000; ++t) {
        Point x = rand_point(), y = rand_point(), z = rand_point();
        EXPECT_EQ(dist(sys, x, y), dist(sys, y, x));
        EXPECT_LE(dist(sys, x, z), std::max(dist(sys, x, y), dist(sys, y, z)));
        if (dist(sys, x, y) == 0.0) EXPECT_EQ(x.symbolic().word(0, 12), y.symbolic().word(0, 12));
    }
}

TEST(OrbitSegment, PrefixProperty) {
    std::mt19937_64 rng(11);
    for (const auto& sys : {full_shift(2), golden_rotation(), density_zero_subshift()}) {
        Point x = sys.is_rotation() ? Point::circle(0.123456) : Point(SymbolicPoint::generator(5));
        if (sys.name == "full_shift(2)") x = Point::word("0110100111", "01");
        auto a = orbit_segment(sys, x, 40), b = orbit_segment(sys, x, 25);
        for (std::size_t i = 0; i < 25; ++i) EXPECT_EQ(dist(sys, a.states[i], b.states[i]), 0.0);
    }
}

TEST(Bump, ThreeRegimes) {
    auto sys = halving_map();
    const double eps = 0.1;
    auto phi = bump_function(Point::real(0.0), eps);
    EXPECT_EQ(phi(sys, Point::real(0.0)), 1.0);
    EXPECT_EQ(phi(sys, Point::real(0.1)), 1.0);
    EXPECT_EQ(phi(sys, Point::real(0.2)), 0.0);
    EXPECT_NEAR(phi(sys, Point::real(0.15)), 0.5, 1e-12);
    EXPECT_EQ(phi(sys, Point::real(0.7)), 0.0);
    for (int i = 1; i < 100; ++i) {
        double d = 0.1 + 0.1 * i / 100.0;
        double v = phi(sys, Point::real(d));
        EXPECT_GT(v, 0.0);
        EXPECT_LT(v, 1.0);
    }
    EXPECT_DOUBLE_EQ(phi.lipschitz(sys), 1.0 / eps);
    EXPECT_THROW(bump_function(Point::real(0.0), 0.0), Error);
}

TEST(Zoo, DensityZeroGeneratorPrefix) {
    auto g = SymbolicPoint::generator(0);
    EXPECT_EQ(format_word(g.word(0, 9)), "011010001");
}

TEST(Zoo, GoldenMeanLanguage) {
    auto gm = golden_mean_sft();
    EXPECT_TRUE(word_legal(gm, parse_word("0101")));
    EXPECT_FALSE(word_legal(gm, parse_word("0110")));
}

TEST(Zoo, UnknownSystem) {
    EXPECT_THROW(zoo("no_such_map"), Error);
    for (const auto& e : zoo_catalog()) EXPECT_NO_THROW(zoo(e.name));
}

TEST(Zoo, InvalidDefinitions) {
    EXPECT_THROW(sft({{1, 0}, {1, 0}}), Error);              // column 1 all zero
    EXPECT_THROW(interval_map("2*x"), Error);                // leaves [0,1]
    EXPECT_THROW(interval_map("x +"), Error);                // parse error
    EXPECT_THROW(sft_from_forbidden(2, {"110"}), Error);     // longer words unsupported
}

TEST(Zoo, RotationReducedModOne) {
    auto a = rotation(1.25), b = rotation(0.25);
    EXPECT_EQ(std::get<Rotation>(a.kind).phase, std::get<Rotation>(b.kind).phase);
}

// Windows of the generator carry at most log2(n) + 2 ones.
TEST(Zoo, DensityZeroWindowBound) {
    auto ones_in = [](std::uint64_t a, std::uint64_t n) {
        int c = 0;
        for (int j = 0; j < 63; ++j) {
            std::uint64_t p = std::uint64_t{1} << j;
            if (p >= a && p < a + n) ++c;
        }
        return c;
    };
    // brute-force oracle on small windows
    for (std::uint64_t n = 1; n <= 256; ++n) {
        for (std::uint64_t a = 0; a < 1024; ++a) {
            int brute = 0;
            for (std::uint64_t i = a; i < a + n; ++i) brute += density_zero_symbol(i);
            ASSERT_EQ(brute, ones_in(a, n));
            ASSERT_LE(brute, std::log2(static_cast<double>(n)) + 2);
        }
    }
    double prev = 1.0;
    for (int j = 0; j <= 20; ++j) {
        std::uint64_t n = std::uint64_t{1} << j;
        int worst = 0;
        for (std::uint64_t a = 0; a <= 2 * n + 2; ++a) worst = std::max(worst, ones_in(a, n));
        EXPECT_LE(worst, j + 2);
        double density = static_cast<double>(worst) / static_cast<double>(n);
        if (j >= 2) EXPECT_LT(density, prev);
        prev = density;
    }
}

TEST(Json, SystemsRoundTrip) {
    for (const auto& e : zoo_catalog()) {
        System s = zoo(e.name);
        json j = system_to_json(s);
        System back = system_from_json(j);
        EXPECT_EQ(system_to_json(back).dump(), j.dump()) << e.name;
    }
    System pw = power(product(full_shift(3), halving_map()), 2);
    EXPECT_EQ(system_to_json(system_from_json(system_to_json(pw))).dump(), system_to_json(pw).dump());
}

TEST(Json, PointsRoundTrip) {
    std::vector<std::pair<System, Point>> cases = {
        {full_shift(2), Point::word("0110", "01")},
        {density_zero_subshift(), SymbolicPoint::generator(3)},
        {golden_rotation(), Point::circle(0.3)},
        {tent_map(), Point::real(0.3)},
    };
    for (auto& [sys, p] : cases) {
        Point shifted = iterate(sys, p, 5);
        Point back = point_from_json(point_to_json(shifted));
        EXPECT_EQ(dist(sys, back, shifted), 0.0);
        EXPECT_EQ(point_to_json(back).dump(), point_to_json(shifted).dump());
    }
}

TEST(Interval, TentIsExactOnRationals) {
    auto sys = tent_map();
    // 0.3 -> 0.6 -> 0.8 -> 0.4 -> 0.8 exactly
    auto seg = orbit_segment(sys, Point::real(0.3), 5);
    EXPECT_EQ(*seg.states[4].real_point().exact, Rational(4, 5));
    Point far = iterate(sys, Point::real(0.3), 1001);
    EXPECT_EQ(*far.real_point().exact, Rational(2, 5)); // odd iterates >= 3 sit at 0.4
}

TEST(Interval, LogisticIsFloating) {
    auto sys = logistic(2.5);
    Point y = step(sys, Point::real(0.5));
    EXPECT_FALSE(y.real_point().exact.has_value());
    EXPECT_NEAR(y.coordinate(), 0.625, 1e-15);
}
