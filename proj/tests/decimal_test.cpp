#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>

#include "iva/decimal.hpp"
#include "iva/error.hpp"
#include "iva/rng.hpp"

using iva::Decimal;

TEST(Decimal, CanonicalFormat) {
    EXPECT_EQ(iva::format_decimal(1.0), "1.0");
    EXPECT_EQ(iva::format_decimal(-0.056), "-0.056");
    EXPECT_EQ(iva::format_decimal(0.0115), "0.0115");
    EXPECT_EQ(iva::format_decimal(0.0), "0.0");
    EXPECT_EQ(iva::format_decimal(-0.00001), "0.0");
    EXPECT_EQ(iva::format_decimal(1.23456), "1.2346");
}

TEST(Decimal, FromDoubleRoundsValue) {
    auto d = Decimal::from_double(-0.014449);
    EXPECT_EQ(d.text(), "-0.0144");
    EXPECT_DOUBLE_EQ(d.value(), -0.0144);
}

TEST(Decimal, TokenKeepsSourceText) {
    for (const char* tok : {"0", "1.0", "-0.0004", "12", "1.50", "2e-3", "+3"}) {
        auto d = Decimal::from_token(tok);
        EXPECT_EQ(d.text(), tok);
        EXPECT_DOUBLE_EQ(d.value(), std::strtod(tok, nullptr));
    }
}

TEST(Decimal, RejectsNonTokens) {
    for (const char* tok : {"", "-", "1.", ".5", "1e", "abc", "1 ", "nan", "inf", "0x10"}) {
        EXPECT_THROW(Decimal::from_token(tok), iva::InvalidSpec) << tok;
    }
    EXPECT_THROW(Decimal::from_double(std::nan("")), iva::InvalidSpec);
}

TEST(Decimal, ScanStopsAtTokenEnd) {
    EXPECT_EQ(iva::scan_number_token("0.0098, 0.1"), 6u);
    EXPECT_EQ(iva::scan_number_token("1.]"), 1u);
    EXPECT_EQ(iva::scan_number_token("-12e3x"), 5u);
    EXPECT_EQ(iva::scan_number_token("x1"), 0u);
}

// Property: the canonical text of any 4-decimal value parses back to itself.
TEST(Decimal, CanonicalRoundTripProperty) {
    iva::Rng rng(11);
    for (int i = 0; i < 5000; ++i) {
        double v = rng.uniform(-5.0, 5.0);
        auto d = Decimal::from_double(v);
        auto back = Decimal::from_token(d.text());
        EXPECT_EQ(back, d);
        EXPECT_LE(std::abs(d.value() - v), 0.5e-4 + 1e-12);
    }
}

TEST(Rng, HashUnitIsStableAndInRange) {
    EXPECT_EQ(iva::hash_unit(1, "ep", 3), iva::hash_unit(1, "ep", 3));
    EXPECT_NE(iva::hash_unit(1, "ep", 3), iva::hash_unit(1, "ep", 4));
    for (std::uint64_t i = 0; i < 1000; ++i) {
        double u = iva::hash_unit(5, "x", i);
        EXPECT_GE(u, 0.0);
        EXPECT_LT(u, 1.0);
    }
}

TEST(Rng, FnvReferenceValues) {
    // Published FNV-1a 64-bit test vectors.
    EXPECT_EQ(iva::fnv1a64(""), 0xcbf29ce484222325ULL);
    EXPECT_EQ(iva::fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
    EXPECT_EQ(iva::fnv1a64("foobar"), 0x85944171f73967e8ULL);
}

TEST(Rng, IndexIsUnbiasedEnough) {
    iva::Rng rng(3);
    std::array<int, 6> counts{};
    const int n = 60000;
    for (int i = 0; i < n; ++i) ++counts[rng.index(6)];
    for (int c : counts) EXPECT_NEAR(c, n / 6, 5 * std::sqrt(n / 6.0));
}
