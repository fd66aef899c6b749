#include "doctest.h"

#include <random>

#include "bssfp/fpnum.hpp"
#include "bssfp/props.hpp"
#include "support.hpp"

using namespace bssfp;

static Float F(long v, int t) { return Float::from_rational(Rational(v), t); }

TEST_CASE("precision digits")
{
        CHECK(Precision(Rational(1, 8)).digits() == 3);
        CHECK(Precision(Rational(1, 10)).digits() == 3);
        CHECK(Precision(Rational(1, 16)).digits() == 4);
        CHECK(Precision(Rational(0)).is_exact());
        CHECK_THROWS_AS(Precision(Rational(1, 4)), PreconditionError);
        CHECK_THROWS_AS(Precision(Rational(-1, 8)), PreconditionError);
        CHECK(Precision::digits(53).epsilon() == pow2(-53));
}

TEST_CASE("round examples")
{
        Precision p3 = Precision::digits(3);
        auto oracle = support::enumerate_floats(3, -2, 4);
        CHECK(support::nearest_even(oracle, Rational(17), 3) == 16);
        CHECK(round(Rational(17), p3).value() == 16);
        CHECK(round(Rational(17), p3).mantissa() == 8);
        CHECK(round(Rational(-17), p3).value() == -16);
        CHECK(round(Rational(5, 4), Precision::exact()).value() == Rational(5, 4));
        CHECK(round(Rational(19), p3).value() == 20);
        CHECK(round(Rational(31), p3).value() == 32);
        CHECK(round(Rational(31), p3).mantissa() == 8);
}

TEST_CASE("fp_op examples")
{
        Precision p3 = Precision::digits(3);
        CHECK(fp_op(Op::Add, F(9, 3), F(9, 3), p3).value() == 18);
        CHECK(fp_op(Op::Add, F(15, 3), F(1, 3), p3).value() == 16);
        CHECK(fp_op(Op::Add, F(15, 3), F(2, 3), p3).value() == 16);
        CHECK_THROWS_AS(fp_op(Op::Div, F(1, 3), Float::zero(3), p3), PreconditionError);
        CHECK_THROWS_AS(fp_op(Op::Add, Float::from_rational(17, 4), F(1, 3), p3), PreconditionError);
}

TEST_CASE("fast_two_sum examples")
{
        Precision p3 = Precision::digits(3);
        auto [c1, e1] = fast_two_sum(F(8, 3), Float::zero(3), p3);
        CHECK(c1.value() == 8);
        CHECK(e1.value() == 0);
        auto [c2, e2] = fast_two_sum(F(8, 3), F(-4, 3), p3);
        CHECK(c2.value() == 4);
        CHECK(e2.value() == 0);
        Float b = Float::from_rational(Rational(9, 8), 3);
        auto [c3, e3] = fast_two_sum(F(9, 3), b, p3);
        CHECK(c3.value() + e3.value() == 9 + Rational(9, 8));
        CHECK_THROWS_AS(fast_two_sum(F(1, 3), F(8, 3), p3), PreconditionError);
}

TEST_CASE("sign_compare_abc examples")
{
        Precision p4 = Precision::digits(4);
        CHECK(sign_compare_abc(F(31, 4), F(16, 4), F(15, 4), p4) == 0);
        CHECK(sign_compare_abc(F(8, 4), F(2, 4), F(1, 4), p4) == 1);
        CHECK(sign_compare_abc(F(4, 4), F(4, 4), F(1, 4), p4) == -1);
        CHECK_THROWS_AS(sign_compare_abc(F(4, 4), F(1, 4), F(2, 4), p4), PreconditionError);
}

TEST_CASE("neighbor_gap examples")
{
        auto [lo, hi] = neighbor_gap(F(8, 3));
        CHECK(lo == Rational(1, 2));
        CHECK(hi == 1);
        auto [lo2, hi2] = neighbor_gap(F(15, 3));
        CHECK(lo2 == 1);
        CHECK(hi2 == 1);
        auto [nlo, nhi] = neighbor_gap(F(-8, 3));
        CHECK(nlo == 1);
        CHECK(nhi == Rational(1, 2));
        CHECK_THROWS_AS(neighbor_gap(Float::zero(3)), PreconditionError);
}

TEST_CASE("neighbor_gap matches enumeration")
{
        for (int t = 1; t <= 4; ++t) {
                auto all = support::enumerate_floats(t, -4, 4);
                for (size_t i = 1; i + 1 < all.size(); ++i) {
                        if (sgn(all[i]) == 0 || abs(all[i]) < pow2(t - 2) || abs(all[i]) >= pow2(t + 4))
                                continue;
                        auto [lo, hi] = neighbor_gap(Float::from_rational(all[i], t));
                        CHECK(lo == all[i] - all[i - 1]);
                        CHECK(hi == all[i + 1] - all[i]);
                        Rational a = abs(all[i]);
                        CHECK(lo >= pow2(-t - 1) * a);
                        CHECK(hi <= pow2(-t) * a);
                }
        }
}

TEST_CASE("round matches enumeration oracle")
{
        for (int t = 1; t <= 4; ++t) {
                auto grid = support::enumerate_floats(t, -8 - t, 8);
                Precision p = Precision::digits(t);
                for (int num = -200; num <= 200; ++num)
                        for (int den : {1, 3, 7, 8, 16}) {
                                Rational x(num, den);
                                x.canonicalize();
                                CHECK(round(x, p).value() == support::nearest_even(grid, x, t));
                        }
        }
}

TEST_CASE("rounding properties on random rationals")
{
        std::mt19937_64 rng(7);
        for (int t : {1, 2, 5, 10, 53}) {
                Precision p = Precision::digits(t);
                for (int i = 0; i < 2000; ++i) {
                        Rational x(long(rng() % 2000001) - 1000000, long(rng() % 9999) + 1);
                        Rational y(long(rng() % 2000001) - 1000000, long(rng() % 9999) + 1);
                        x.canonicalize();
                        y.canonicalize();
                        Rational fx = fl(x, p);
                        CHECK(abs(fx - x) <= p.epsilon() * abs(x));
                        CHECK(fl(-x, p) == -fx);
                        CHECK(fl(fx, p) == fx);
                        if (x <= y)
                                CHECK(fx <= fl(y, p));
                        CHECK(representable(fx, Precision::digits(t + 3)));
                        CHECK(representable(fx / 2, p));
                }
        }
}

TEST_CASE("text form round trip")
{
        Float a = round(Rational(-17, 3), Precision::digits(5));
        CHECK(Float::parse(a.str()) == a);
        CHECK(Float::parse("+0@4").is_zero());
        CHECK(Float::parse("-7/3@exact").value() == Rational(-7, 3));
        CHECK(Float::parse("+9*2^-3@3").value() == Rational(9, 8));
        CHECK_THROWS_AS(Float::parse("+17*2^0@3"), ParseError);
        CHECK(parse_rational("0.125") == Rational(1, 8));
        CHECK(parse_rational("-3/6") == Rational(-1, 2));
        CHECK(parse_rational("1e-2") == Rational(1, 100));
        CHECK_THROWS_AS(parse_rational("abc"), ParseError);
}

TEST_CASE("Sterbenz, A1, A2 and Fast2Sum on all small pairs")
{
        for (int t = 1; t <= 3; ++t) {
                Precision p = Precision::digits(t);
                auto all = support::enumerate_floats(t, -3, 3);
                for (const auto &a : all)
                        for (const auto &b : all) {
                                Rational s = fl(a + b, p);
                                CHECK(representable(a + b - s, p));
                                if (abs(b) <= abs(a)) {
                                        CHECK(abs(s) <= 2 * abs(a));
                                        auto [c, e] = fast_two_sum(Float::from_rational(a, t),
                                                                   Float::from_rational(b, t), p);
                                        CHECK(c.value() + e.value() == a + b);
                                }
                                if (sgn(a) >= 0 && a / 2 <= b && b <= 2 * a)
                                        CHECK(representable(a - b, p));
                        }
        }
}

TEST_CASE("sign_compare_abc on all small triples")
{
        for (int t = 1; t <= 3; ++t) {
                Precision p = Precision::digits(t);
                auto pos = support::enumerate_floats(t, -2, 2, false);
                pos.erase(pos.begin());
                for (const auto &a : pos)
                        for (const auto &b : pos)
                                for (const auto &c : pos) {
                                        if (b < c)
                                                continue;
                                        int got = sign_compare_abc(Float::from_rational(a, t),
                                                                   Float::from_rational(b, t),
                                                                   Float::from_rational(c, t), p);
                                        CHECK(got == sgn(a - b - c));
                                }
        }
}

TEST_CASE("property suites")
{
        for (const auto &r : props_fpnum(2, -3, 3)) {
                CAPTURE(r.name);
                CHECK(r.ok());
                CHECK(r.checks > 0);
        }
        auto laws = props_fpnum(2, -3, 3);
        CHECK(laws.size() == 9);
        for (const auto &r : props_fast2sum_random(24, 500, 3))
                CHECK(r.ok());
        /* 2 t-digit floats per binade and sign, 7 binades, plus zero */
        CHECK(all_floats(2, -3, 3).size() == 1 + 2 * 4 * 7);
        CHECK(all_floats(2, -3, 3, false).size() == 1 + 4 * 7);
        std::mt19937_64 rng(2);
        for (int i = 0; i < 100; ++i) {
                Float f = random_float(rng, 10, -5, 5);
                CHECK(representable(f.value(), Precision::digits(10)));
        }
        CHECK(props_report({PropResult{"x", 3, 1, "a=1"}}) == "FAIL x checks 3 failures 1 first a=1\n");
}
