#include "doctest.h"

#include <cmath>
#include <mpfr.h>
#include <random>

#include "bssfp/problems.hpp"
#include "support.hpp"

using namespace bssfp;
using support::q;

namespace {

/* d(x, C_k), C_k the union of the 2^k level-k intervals. */
Rational cantor_level_distance(const Rational &x, int k)
{
        std::vector<std::pair<Rational, Rational>> iv = {{0, 1}};
        for (int i = 0; i < k; ++i) {
                std::vector<std::pair<Rational, Rational>> next;
                for (const auto &[a, b] : iv) {
                        Rational w = (b - a) / 3;
                        next.emplace_back(a, a + w);
                        next.emplace_back(b - w, b);
                }
                iv = std::move(next);
        }
        Rational best = -1;
        for (const auto &[a, b] : iv) {
                Rational d = x < a ? Rational(a - x) : x > b ? Rational(x - b) : Rational(0);
                if (best < 0 || d < best)
                        best = d;
        }
        return best;
}

Rational tent(const Rational &x) { return std::min(Rational(3 * x), Rational(3 - 3 * x)); }

/* sign(y - e^x) with 256-bit MPFR, 0 when too close to call */
int mpfr_exp_sign(const Rational &x, const Rational &y)
{
        mpfr_t a, b;
        mpfr_inits2(256, a, b, (mpfr_ptr)0);
        mpfr_set_q(a, x.get_mpq_t(), MPFR_RNDN);
        mpfr_exp(a, a, MPFR_RNDN);
        mpfr_set_q(b, y.get_mpq_t(), MPFR_RNDN);
        mpfr_sub(b, b, a, MPFR_RNDN);
        mpfr_div(b, b, a, MPFR_RNDN);
        double rel = mpfr_get_d(b, MPFR_RNDN);
        mpfr_clears(a, b, (mpfr_ptr)0);
        if (std::abs(rel) < 1e-60)
                return 0;
        return rel > 0 ? 1 : -1;
}

std::vector<EvalMode> weak_modes(const Rational &eps, uint64_t seed)
{
        return {EvalMode::weak(eps, ErrorSource::seeded_random(seed)),
                EvalMode::weak(eps, ErrorSource::adversarial(seed, 1)),
                EvalMode::weak(eps, ErrorSource::adversarial(seed, -1)),
                EvalMode::weak(eps, ErrorSource::adversarial(seed, 0))};
}

} // namespace

TEST_CASE("cantor condition")
{
        CHECK(cantor_distance(q(1, 2)).distance == q(1, 6));
        CHECK(*cantor_condition(q(1, 2)) == 6);
        CHECK_FALSE(cantor_condition(q(1, 4)).has_value());
        CHECK_FALSE(cantor_condition(q(3, 4)).has_value());
        CHECK_FALSE(cantor_condition(Rational(0)).has_value());
        CHECK_FALSE(cantor_condition(q(1, 3)).has_value());
        CHECK(*cantor_condition(Rational(2)) == 1);
        CHECK(*cantor_condition(q(-1, 5)) == 5);
        /* against the level-12 interval union */
        for (long den = 1; den <= 60; ++den)
                for (long num = -3; num <= den + 3; ++num) {
                        Rational x = q(num, den);
                        auto d = cantor_distance(x);
                        Rational lvl = cantor_level_distance(x, 10);
                        if (d.member)
                                CHECK(lvl <= pow2(-10));
                        else
                                CHECK(lvl == d.distance);
                        if (auto mu = cantor_condition(x))
                                CHECK(*mu >= 1);
                }
}

TEST_CASE("cantor decider: worked example and machine agreement")
{
        for (const EvalMode &mode : {EvalMode::exact(), EvalMode::strong(q(1, 64))}) {
                auto m = cantor_machine_run(q(1, 2), q(1, 64), mode);
                auto d = cantor_decide(q(1, 2), q(1, 64), mode);
                CHECK(m.outcome == Outcome::Accept);
                CHECK(m.iterations == 1);
                CHECK(d.outcome == Outcome::Accept);
                CHECK(d.iterations == 1);
        }
        /* scripted errors: the machine and the direct routine consume them identically */
        std::mt19937_64 rng(5);
        for (int it = 0; it < 60; ++it) {
                Rational x = q(long(rng() % 200) - 50, 81 + long(rng() % 40));
                Rational eps = pow2(-4 - int(rng() % 8));
                EvalMode mode = EvalMode::weak(eps, ErrorSource::seeded_random(it));
                auto p = run(cantor_machine(), {x, eps}, mode, 800 + 300 * 13).errors();
                auto a = cantor_machine_run(x, eps, EvalMode::weak(eps, ErrorSource::scripted(p)), 12);
                auto b = cantor_decide(x, eps, EvalMode::weak(eps, ErrorSource::scripted(p)), 12);
                if (a.outcome == Outcome::Timeout || b.outcome == Outcome::Timeout)
                        continue;
                CHECK(a.outcome == b.outcome);
                CHECK(a.iterations == b.iterations);
        }
}

TEST_CASE("cantor decider: margin covers the weak orbit error")
{
        /* exact recurrences on a grid of eps, for every regime a weak run can select */
        int checked = 0;
        for (long k = 1; k <= 180; ++k) {
                Rational eps = q(k, 1000);
                for (bool large : {false, true}) {
                        if (large ? !cantor_large_regime_possible(eps) : !cantor_small_regime_possible(eps))
                                continue;
                        for (int l = 0; l <= 30; ++l) {
                                CHECK(cantor_min_radius(eps, l, large) >= cantor_required_radius(eps, l));
                                ++checked;
                        }
                }
        }
        CHECK(checked > 5000);
        CHECK(cantor_small_regime_possible(q(1, 64)));
        CHECK_FALSE(cantor_large_regime_possible(q(1, 100)));
}

TEST_CASE("cantor decider: weak orbit error per iteration")
{
        std::mt19937_64 rng(7);
        for (int it = 0; it < 300; ++it) {
                Rational x = q(long(rng() % 1000), 999);
                Rational eps = pow2(-3 - int(rng() % 12));
                auto r = cantor_decide(x, eps, EvalMode::weak(eps, ErrorSource::seeded_random(it)), 15);
                Rational u = x;
                for (size_t i = 0; i + 1 < r.orbit.size(); ++i) {
                        const Rational &xi = r.orbit[i];
                        if (xi >= 0 && xi <= 1)
                                CHECK(abs(r.orbit[i + 1] - tent(xi)) <= 12 * eps);
                        /* distance to the exact orbit of x stays inside the margin bound */
                        if (u >= 0 && u <= 1)
                                CHECK(abs(xi - u) <= cantor_required_radius(eps, int(i)));
                        u = tent(u);
                }
        }
}

TEST_CASE("cantor decider: completeness on small denominators")
{
        /* strong runs must accept within k; weak runs only clear the margin with high probability */
        int runs = 0, weak_runs = 0, weak_accepts = 0;
        for (long den = 1; den <= 81; ++den)
                for (long num = -2; num <= den + 2; ++num) {
                        Rational x = q(num, den);
                        if (x.get_den() != den)
                                continue;
                        auto mu = cantor_condition(x);
                        if (!mu)
                                continue;
                        int t = 1;
                        while (pow2(-t) * 6 * *mu >= 1)
                                ++t;
                        Rational eps = pow2(-t);
                        int k = 0;
                        for (Rational b = 6; *mu >= b; b *= 3)
                                ++k;
                        auto r = cantor_decide(x, eps, EvalMode::strong(eps), k + 3);
                        CHECK(r.outcome == Outcome::Accept);
                        CHECK(r.iterations <= k);
                        ++runs;
                        if (x < 0 || x > 1)
                                continue;
                        auto w = cantor_decide(x, eps, EvalMode::weak(eps, ErrorSource::seeded_random(uint64_t(num * 131 + den))),
                                               k + 3);
                        CHECK(w.outcome != Outcome::Reject);
                        weak_accepts += w.outcome == Outcome::Accept;
                        ++weak_runs;
                }
        MESSAGE("weak accepted " << weak_accepts << " of " << weak_runs);
        CHECK(runs > 2000);
        CHECK(weak_accepts * 100 >= weak_runs * 99);
}

TEST_CASE("cantor decider never accepts members")
{
        std::vector<Rational> members = {0, 1, q(1, 4), q(3, 4), q(1, 3), q(2, 3), q(1, 10), q(2, 9), q(7, 9), q(1, 40)};
        for (const auto &x : members)
                REQUIRE(cantor_distance(x).member);
        for (const auto &x : members)
                for (Rational eps : {q(1, 5), q(1, 8), q(1, 9), q(1, 47), q(1, 48), q(1, 50), pow2(-10)}) {
                        for (uint64_t s = 0; s < 20; ++s)
                                for (const auto &mode : weak_modes(eps, s))
                                        CHECK(cantor_decide(x, eps, mode, 25).outcome != Outcome::Accept);
                        CHECK(cantor_decide(x, eps, EvalMode::strong(eps), 25).outcome != Outcome::Accept);
                }
        /* the machine itself, through the generic search */
        for (const auto &x : {q(1, 4), Rational(1)})
                CHECK_FALSE(adversarial_search(cantor_machine(), {x, q(1, 8)}, q(1, 8), 6, 3000, 9).has_value());
        /* eps beyond the guard: no decision at all */
        CHECK(cantor_decide(q(1, 2), q(1, 5), EvalMode::exact()).outcome == Outcome::Timeout);
}

TEST_CASE("integers machine")
{
        for (long v : {5L, 7L, 0L, -6L, 1L, 64L, 1000L}) {
                auto r = integers_run(Rational(v), EvalMode::exact());
                CHECK(r.outcome == Outcome::Accept);
                double bound = 1 + (std::abs(v) > 0 ? std::log2(double(std::abs(v))) : 0.0);
                CHECK(double(r.doublings) <= bound + 1e-9);
                CHECK(double(r.halvings) <= bound + 1e-9);
        }
        for (Rational v : {q(7, 2), q(1, 3), q(-5, 4), q(1001, 1000)})
                CHECK(integers_run(v, EvalMode::exact()).outcome == Outcome::Reject);
        CHECK(*integers_condition(Rational(-3)) == 4);
}

TEST_CASE("x <= 1 machine")
{
        Machine m = x_le_1_machine();
        auto out = [&](const Rational &x, const EvalMode &mode) {
                Trace tr = run(m, {x, mode.epsilon()}, mode, 10000);
                REQUIRE(tr.terminated);
                return tr.accepted;
        };
        Rational eps = pow2(-10);
        CHECK(out(q(1, 2), EvalMode::strong(eps)));
        CHECK(out(Rational(-3), EvalMode::strong(eps)));
        CHECK(out(Rational(0), EvalMode::strong(eps)));
        CHECK_FALSE(out(Rational(2), EvalMode::strong(eps)));
        CHECK_FALSE(out(Rational(1), EvalMode::strong(eps)));
        for (Rational x : {Rational(1), q(1025, 1024), Rational(2), Rational(5)})
                for (Rational e : {q(1, 5), q(1, 16), eps})
                        CHECK_FALSE(adversarial_search(m, {x, e}, e, 30, 10000, 3).has_value());
        CHECK_FALSE(x_le_1_condition(Rational(1)).has_value());
        CHECK(*x_le_1_condition(q(1, 2)) == 2);
}

TEST_CASE("koch region")
{
        /* centroid of e */
        auto c = koch_membership({q(4, 9), q(1, 9)});
        CHECK(c.outcome == Outcome::Accept);
        CHECK(c.iterations == 0);
        /* base vertex */
        CHECK(koch_membership({0, 0}, 40).outcome == Outcome::Timeout);
        CHECK(koch_membership({1, 0}, 40).outcome == Outcome::Timeout);
        /* outside the triangle */
        CHECK(koch_membership({q(1, 2), q(-1, 10)}).outcome == Outcome::Reject);
        /* sub-triangle one holds a scaled copy of e */
        auto s = koch_membership({q(4, 27), q(1, 27)});
        CHECK(s.outcome == Outcome::Accept);
        CHECK(s.iterations == 1);
        CHECK(s.path == std::vector<int>{1});

        std::mt19937_64 rng(13);
        const double err = koch_polyline_error(7);
        int accepted = 0, rejected = 0;
        for (int it = 0; it < 400; ++it) {
                /* a point of the triangle: x in (0, 1), y / sqrt3 in (0, min(x, 1 - x) / 3) */
                Rational x = q(long(rng() % 100000) + 1, 100001);
                Rational cap = std::min(x, Rational(1 - x)) / 3;
                Rational w = cap * q(long(rng() % 100000) + 1, 100001);
                Eis p = eis_from_xy_rational(x, w);
                auto r = koch_membership(p, 60);
                if (r.outcome == Outcome::Timeout)
                        continue;
                double d = koch_boundary_distance(p.x(), p.y());
                double d_hi = d + err;
                double d_lo = std::max(d - err, 1e-300);
                CHECK(double(r.iterations) <= std::floor(std::log(1 / d_lo) / std::log(3.0)) + 1);
                CHECK(r.distance_lower() <= d_hi * (1 + 1e-9));
                CHECK(r.distance_lower() > 0);
                (r.outcome == Outcome::Accept ? accepted : rejected)++;
        }
        MESSAGE("koch accepted " << accepted << ", rejected " << rejected);
        CHECK(accepted > 50);
        CHECK(rejected > 20);
}

TEST_CASE("exp epigraph")
{
        Rational eps = pow2(-40);
        CHECK(exp_epigraph(0, 2, eps, EvalMode::strong(eps)).outcome == Outcome::Accept);
        CHECK(exp_epigraph(1, 2, eps, EvalMode::strong(eps)).outcome == Outcome::Reject);
        Rational ln2 = q(693147, 1000000);
        auto r = exp_epigraph(ln2, 2, eps, EvalMode::strong(eps));
        REQUIRE(r.outcome != Outcome::Timeout);
        CHECK((r.outcome == Outcome::Accept ? 1 : -1) == exp_sign_oracle(ln2, 2));
        CHECK(exp_sign_oracle(ln2, 2) == mpfr_exp_sign(ln2, 2));
        CHECK(exp_epigraph(-1, -2, eps, EvalMode::strong(eps)).outcome == Outcome::Reject);

        /* rational enclosure against MPFR */
        for (Rational x : {q(-7, 3), q(0, 1), q(1, 2), Rational(5), q(41, 4)}) {
                auto [lo, hi] = exp_bounds(x, 30);
                CHECK(mpfr_exp_sign(x, lo) <= 0);
                CHECK(mpfr_exp_sign(x, hi) >= 0);
        }

        /* one-sided under every mode */
        std::mt19937_64 rng(19);
        int decided = 0;
        for (int it = 0; it < 120; ++it) {
                Rational x = q(long(rng() % 4001) - 2000, 400);
                Rational ex = exp_bounds(x, 40).first;
                Rational y = ex * q(900 + long(rng() % 201), 1000);
                int truth = mpfr_exp_sign(x, y);
                if (truth == 0)
                        continue;
                Rational e = pow2(-8 - int(rng() % 30));
                std::vector<EvalMode> modes = weak_modes(e, it);
                modes.push_back(EvalMode::strong(e));
                for (const auto &mode : modes) {
                        auto run = exp_epigraph(x, y, e, mode, 200000);
                        if (run.outcome == Outcome::Timeout)
                                continue;
                        CHECK((run.outcome == Outcome::Accept ? 1 : -1) == truth);
                        ++decided;
                }
        }
        MESSAGE("exp decided " << decided);
        CHECK(decided > 200);
}

TEST_CASE("sparse polynomial systems")
{
        auto f = PolySystem::parse_string("1 : 1\n");
        CHECK(f.n == 1);
        CHECK(check_safeas_witness(f, {Rational(1)}));
        auto g = PolySystem::parse_string("1 : 2\n-2 : 0\n\n2 : 0\n-1 : 2\n");
        CHECK(g.polys.size() == 2);
        CHECK(g.polys[0].eval({q(3, 2)}) == q(1, 4));
        CHECK(g.polys[1].eval({q(3, 2)}) == q(-1, 4));
        CHECK_FALSE(check_safeas_witness(g, {q(3, 2)}));
        auto h = PolySystem::parse_string("# comment\n= 0\n1 : 1 0\n-1 : 0 1\n\n3/2 : 1 1\n");
        CHECK(h.equations() == 1);
        CHECK(h.inequalities() == 1);
        CHECK(check_safeas_witness(h, {Rational(2), Rational(2)}));
        CHECK_FALSE(check_safeas_witness(h, {Rational(2), Rational(3)}));
        auto round = PolySystem::parse_string(h.str());
        CHECK(round.str() == h.str());
        CHECK_THROWS_AS(PolySystem::parse_string("1 : 1\n1 : 1 2\n"), ParseError);
        CHECK_THROWS_AS(PolySystem::parse_string("x : 1\n"), ParseError);
        CHECK_THROWS_AS(PolySystem::parse_string("1 1\n"), ParseError);
        CHECK_THROWS_AS(check_safeas_witness(h, {Rational(2), Rational(2)}, EvalMode::strong(pow2(-10))),
                        PreconditionError);

        /* weak acceptance implies exact positivity */
        std::mt19937_64 rng(41);
        int accepted = 0;
        for (int it = 0; it < 400; ++it) {
                PolySystem s;
                s.n = 2;
                for (int i = 0; i < 2; ++i) {
                        Polynomial p;
                        p.terms.push_back({q(long(rng() % 21) - 10, 4), {}});
                        for (int tms = 0; tms < 3; ++tms) {
                                Monomial m{q(long(rng() % 21) - 10, 3), {}};
                                int e0 = int(rng() % 3), e1 = int(rng() % 3);
                                if (e0)
                                        m.powers.emplace_back(0, e0);
                                if (e1)
                                        m.powers.emplace_back(1, e1);
                                p.terms.push_back(m);
                        }
                        s.polys.push_back(p);
                }
                std::vector<Rational> y = {q(long(rng() % 41) - 20, 8), q(long(rng() % 41) - 20, 8)};
                Rational e = pow2(-4 - int(rng() % 10));
                for (const auto &mode : weak_modes(e, it)) {
                        if (check_safeas_witness(s, y, mode)) {
                                CHECK(check_safeas_witness(s, y));
                                ++accepted;
                        }
                }
        }
        MESSAGE("weak accepted " << accepted);
        CHECK(accepted > 20);
}

TEST_CASE("geodesic certificate on the unit circle")
{
        auto c = check_geodesic_certificate({1, 0}, {}, q(1, 2), 1);
        CHECK(c.accepted);
        CHECK(c.m_lo == 1);
        CHECK(c.m_hi == 1);
        /* antipode: the chain length is about pi, more than 3 */
        Rational t_anti = 1000000;
        auto g3 = geodesic_certificate(t_anti, 4);
        auto a4 = check_geodesic_certificate(circle_point(t_anti), g3.waypoints, g3.delta, 4);
        CHECK(a4.accepted);
        auto a3 = check_geodesic_certificate(circle_point(t_anti), g3.waypoints, g3.delta, 3);
        CHECK_FALSE(a3.accepted);
        /* off the circle */
        Pt off = circle_point(q(1, 3));
        off.x *= q(1001, 1000);
        CHECK_FALSE(check_geodesic_certificate(circle_point(q(1, 2)), {off}, q(9, 10), 2).accepted);
        /* spacing larger than delta */
        CHECK_FALSE(check_geodesic_certificate(circle_point(q(1, 2)), {}, q(1, 2), 2).accepted);
        CHECK_FALSE(check_geodesic_certificate({1, 0}, {}, Rational(1), 2).accepted);

        std::mt19937_64 rng(43);
        for (int it = 0; it < 150; ++it) {
                Rational t = q(long(rng() % 8001) - 4000, 400);
                double d = circle_arc_length(t);
                Rational r = Rational(d) + q(long(rng() % 300) + 5, 100);
                auto cert = geodesic_certificate(t, r);
                CHECK(cert.delta < 1);
                auto chk = check_geodesic_certificate(circle_point(t), cert.waypoints, cert.delta, r);
                REQUIRE(chk.accepted);
                double gap = to_double(r) - d;
                CHECK(chk.m() >= gap * (1 - 1e-9));
                CHECK(chk.m() <= 2 * gap);
                CHECK(int64_t(cert.waypoints.size()) == cert.N - 1);
        }
}

TEST_CASE("real encoding")
{
        /* accepts iff x_1 > 0 */
        Machine first_bit = Machine::parse_string("1 input 2\n2 copy 1 3\n3 output\n");
        auto r = real_encoding_run(q(5, 8), pow2(-5), EvalMode::strong(pow2(-5)), first_bit);
        CHECK(r.bits == std::vector<int>{1, 0, 1});
        CHECK(r.outcome == Outcome::Accept);
        auto z = real_encoding_run(q(5, 16), pow2(-6), EvalMode::exact(), first_bit);
        CHECK(z.bits == std::vector<int>{0, 1, 0, 1});
        CHECK(z.outcome == Outcome::Reject);
        CHECK(z.rejected_at == "machine");
        auto p = real_encoding_run(q(5, 8), pow2(-2), EvalMode::exact(), first_bit);
        CHECK(p.outcome == Outcome::Reject);
        CHECK(p.rejected_at == "precision");
        CHECK(real_encoding_run(q(-5, 8), pow2(-8), EvalMode::exact(), first_bit).rejected_at == "sign");
        CHECK(real_encoding_run(q(3, 2), pow2(-8), EvalMode::exact(), first_bit).rejected_at == "exponent");
        CHECK(real_encoding_run(Rational(0), pow2(-8), EvalMode::exact(), first_bit).rejected_at == "zero");
        CHECK(real_encoding_run(q(1, 3), pow2(-8), EvalMode::exact(), first_bit, 2000).outcome == Outcome::Timeout);
}

TEST_CASE("condition estimator stays below the condition")
{
        /* calibrate T <= c Size^d on small members, then test larger ones */
        auto steps = [](long v) { return int64_t(integers_run(Rational(v), EvalMode::exact()).trace.steps.size()); };
        auto size = [](long v) { return *input_size(1, integers_condition(Rational(v))); };
        const double d = 1.0;
        double c = 0;
        for (long v = 0; v <= 64; ++v)
                c = std::max(c, double(steps(v)) / size(v));
        for (long v : {100L, 1000L, 4097L, 65536L, 1000003L, -77777L}) {
                double lmu = log2_mu_prime(steps(v), 1, c, d);
                CHECK(lmu <= std::log2(to_double(*integers_condition(Rational(v)))) + 1e-9);
        }
}

TEST_CASE("registry")
{
        for (const char *n : {"integers", "x-le-1", "cantor", "toy-root", "koch", "exp"})
                CHECK(find_problem(n).name == n);
        CHECK_THROWS_AS(find_problem("nope"), PreconditionError);
        const auto &c = find_problem("cantor");
        CHECK(*c.member({q(1, 2), pow2(-8)}));
        CHECK_FALSE(*c.member({q(1, 4), pow2(-8)}));
        CHECK(c.machine().size() > 10);
        CHECK(*find_problem("exp").member({Rational(0), Rational(2)}));
        CHECK(find_problem("toy-root").machine().size() == 14);
}
