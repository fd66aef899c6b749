#include "bssfp/props.hpp"

#include <sstream>

#include "bssfp/verifier.hpp"

namespace bssfp {

namespace {

class Tally {
public:
        PropResult &at(const std::string &name)
        {
                for (auto &r : rs_)
                        if (r.name == name)
                                return r;
                rs_.push_back(PropResult{name, 0, 0, {}});
                return rs_.back();
        }
        void check(const std::string &name, bool ok, const std::string &what)
        {
                auto &r = at(name);
                ++r.checks;
                if (!ok && r.failures++ == 0)
                        r.first_failure = what;
        }
        template <class F>
        void check(const std::string &name, bool ok, F what)
        {
                auto &r = at(name);
                ++r.checks;
                if (!ok && r.failures++ == 0)
                        r.first_failure = what();
        }
        std::vector<PropResult> take() { return std::move(rs_); }

private:
        std::vector<PropResult> rs_;
};

std::string pair_str(const Rational &a, const Rational &b) { return "a=" + to_string(a) + " b=" + to_string(b); }

void single_laws(Tally &T, const Rational &x, int t, const Precision &p)
{
        if (sgn(x) == 0)
                return;
        Float f = Float::from_rational(x, t);
        auto [lo, hi] = neighbor_gap(f);
        Rational ax = abs(x);
        Rational lower = pow2(-t - 1) * ax, upper = pow2(-t) * ax;
        auto what = [&] { return "x=" + to_string(x); };
        T.check("gap", lower <= lo && lo <= upper && lower <= hi && hi <= upper, what);
        T.check("a-rep", fl(x, p) == x, what);
}

void pair_laws(Tally &T, const Rational &a, const Rational &b, int t, const Precision &p)
{
        auto what = [&] { return pair_str(a, b); };
        for (Op op : {Op::Add, Op::Sub, Op::Mul, Op::Div}) {
                if (op == Op::Div && sgn(b) == 0)
                        continue;
                Rational x = exact_op(op, a, b);
                Rational fx = fl(x, p);
                T.check("a-eps", abs(fx - x) <= p.epsilon() * abs(x), what);
                T.check("a-sym", fl(-x, p) == -fx, what);
                T.check("a-rep", fl(fx, p) == fx, what);
                T.check("a-ref", representable(fx, Precision::digits(t + 1)) && representable(fx, Precision::digits(t + 3)),
                        what);
        }
        if (a < b) {
                Rational x = a + (b - a) / 3, y = a + 2 * (b - a) / 3;
                T.check("a-mon", fl(a, p) <= fl(x, p) && fl(x, p) <= fl(y, p) && fl(y, p) <= fl(b, p), what);
        }
        Rational s = fl(a + b, p);
        T.check("A1", representable(a + b - s, p), what);
        if (abs(b) <= abs(a))
                T.check("A2", abs(s) <= 2 * abs(a), what);
        if (sgn(a) >= 0 && a / 2 <= b && b <= 2 * a)
                T.check("sterbenz", representable(a - b, p), what);
}

void two_sum_law(Tally &T, const Rational &a, const Rational &b, int t, const Precision &p)
{
        if (abs(b) > abs(a))
                return;
        auto [c, e] = fast_two_sum(Float::from_rational(a, t), Float::from_rational(b, t), p);
        T.check("fast2sum", c.value() + e.value() == a + b && c.value() == fl(a + b, p),
                [&] { return pair_str(a, b); });
}

void sign_law(Tally &T, const Rational &a, const Rational &b, const Rational &c, int t, const Precision &p)
{
        int got = sign_compare_abc(Float::from_rational(a, t), Float::from_rational(b, t), Float::from_rational(c, t), p);
        T.check("sign-compare", got == sgn(a - b - c),
                [&] { return pair_str(a, b) + " c=" + to_string(c); });
}

} // namespace

std::vector<Rational> all_floats(int t, int elo, int ehi, bool with_negative)
{
        std::vector<Rational> out = {0};
        for (int e = elo; e <= ehi; ++e)
                for (long m = 1L << t; m < (2L << t); ++m) {
                        Rational v = Rational(m) * pow2(e);
                        out.push_back(v);
                        if (with_negative)
                                out.push_back(-v);
                }
        return out;
}

Float random_float(std::mt19937_64 &rng, int t, int elo, int ehi, bool allow_negative)
{
        Integer m = 1;
        for (int left = t; left > 0; left -= 32) {
                int k = std::min(left, 32);
                m = (m << k) + Integer((unsigned long)(rng() & ((1ULL << k) - 1)));
        }
        std::uniform_int_distribution<int> ed(elo, ehi);
        Rational v = Rational(m) * pow2(ed(rng));
        if (allow_negative && (rng() & 1))
                v = -v;
        return Float::from_rational(v, t);
}

std::vector<PropResult> props_fpnum(int t, int elo, int ehi)
{
        Tally T;
        Precision p = Precision::digits(t);
        auto all = all_floats(t, elo, ehi);
        for (const auto &a : all) {
                single_laws(T, a, t, p);
                for (const auto &b : all)
                        pair_laws(T, a, b, t, p);
        }
        return T.take();
}

std::vector<PropResult> props_fpnum_random(int t, int64_t count, uint64_t seed)
{
        Tally T;
        Precision p = Precision::digits(t);
        std::mt19937_64 rng(seed);
        for (int64_t i = 0; i < count; ++i) {
                Rational a = random_float(rng, t, -40, 40).value();
                /* half the pairs share a binade so Sterbenz and cancellation get exercised */
                Rational b = (i & 1) ? random_float(rng, t, -40, 40).value()
                                     : random_float(rng, t, int(floor_log2(abs(a))) - t - 1, int(floor_log2(abs(a))) - t, false).value();
                single_laws(T, a, t, p);
                pair_laws(T, a, b, t, p);
        }
        return T.take();
}

std::vector<PropResult> props_fast2sum(int t, int elo, int ehi, int triple_elo, int triple_ehi)
{
        Tally T;
        Precision p = Precision::digits(t);
        auto all = all_floats(t, elo, ehi);
        for (const auto &a : all)
                for (const auto &b : all)
                        two_sum_law(T, a, b, t, p);
        auto pos = all_floats(t, triple_elo, triple_ehi, false);
        pos.erase(pos.begin());
        for (const auto &a : pos)
                for (const auto &b : pos)
                        for (const auto &c : pos)
                                if (b >= c)
                                        sign_law(T, a, b, c, t, p);
        return T.take();
}

std::vector<PropResult> props_fast2sum_random(int t, int64_t count, uint64_t seed)
{
        Tally T;
        Precision p = Precision::digits(t);
        std::mt19937_64 rng(seed);
        for (int64_t i = 0; i < count; ++i) {
                Rational a = random_float(rng, t, -40, 40).value();
                Rational b = random_float(rng, t, -40, 40).value();
                if (abs(b) > abs(a))
                        std::swap(a, b);
                two_sum_law(T, a, b, t, p);
                /* a near b + c so the sign is delicate */
                Float fb = random_float(rng, t, -20, 20, false), fc = random_float(rng, t, -20, 20, false);
                if (fb.value() < fc.value())
                        std::swap(fb, fc);
                Rational s = fl(fb.value() + fc.value(), p);
                Rational ca = (i % 3 == 0) ? random_float(rng, t, -20, 21, false).value() : s;
                if (i % 3 == 2) {
                        auto [lo, hi] = neighbor_gap(Float::from_rational(s, t));
                        ca = (i & 4) ? Rational(s + hi) : Rational(s - lo);
                }
                sign_law(T, ca, fb.value(), fc.value(), t, p);
        }
        return T.take();
}

std::vector<PropResult> props_lemmas(const LemmaOptions &o)
{
        Tally T;
        auto b = check_lemma_epsilon_bounds(0, 0);
        double e3 = to_double(b.eps3);
        T.check("eps3", std::abs(e3 - o.eps3) <= o.eps3_tol, [&] {
                std::ostringstream os;
                os.precision(12);
                os << "eps_3 = " << e3 << ", expected " << o.eps3;
                return os.str();
        });
        auto polys = appendix_polynomials();
        for (int64_t k = 0; k <= o.grid; ++k) {
                Rational d(k, 7 * o.grid);
                d.canonicalize();
                for (size_t i = 0; i < polys.size(); ++i)
                        T.check("poly" + std::to_string(i + 1), polys[i].holds(d), [&] { return "delta=" + to_string(d); });
        }
        std::mt19937_64 rng(o.seed);
        for (int64_t i = 0; i < o.pairs; ++i) {
                Rational delta(long(rng() % 7000) + 1, 49000);
                Rational eps = delta / 31 * Rational(long(rng() % 1000), 1000);
                delta.canonicalize();
                eps.canonicalize();
                auto c = check_lemma_c1c2(delta, eps);
                auto what = [&] { return "delta=" + to_string(delta) + " eps=" + to_string(eps); };
                T.check("c1-lower", c.c1_lower, what);
                T.check("c1-upper", c.c1_upper, what);
                T.check("c2-lower", c.c2_lower, what);
                T.check("c2-upper", c.c2_upper, what);
        }
        return T.take();
}

std::string props_report(const std::vector<PropResult> &r)
{
        std::ostringstream os;
        for (const auto &p : r) {
                os << (p.ok() ? "PASS " : "FAIL ") << p.name << " checks " << p.checks << " failures " << p.failures;
                if (!p.ok())
                        os << " first " << p.first_failure;
                os << "\n";
        }
        return os.str();
}

} // namespace bssfp
