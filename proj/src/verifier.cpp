#include "bssfp/verifier.hpp"

#include <sstream>

namespace bssfp {

std::string VerifierReport::str() const
{
        std::ostringstream os;
        os << "accepted " << (accepted ? "yes" : "no") << '\n';
        os << "failing_line " << failing_line << '\n';
        if (failing_line) {
                os << "failing_node " << failing_node << '\n';
                os << "reason " << reason << '\n';
        }
        os << "mode " << mode.str() << '\n';
        os << "C1 " << to_string(C1) << '\n';
        os << "C2 " << to_string(C2) << '\n';
        os << "steps " << steps << '\n';
        return os.str();
}

namespace {

struct Run {
        Arith A;
        VerifierReport r;

        explicit Run(const EvalMode &mode) : A(mode) { r.mode = mode; }

        /* check a <= b, as "a - b > 0 fails" */
        bool le(const Rational &a, const Rational &b) { return !A.positive(A.sub(a, b)); }

        VerifierReport fail(int line, int node, const std::string &why)
        {
                r.failing_line = line;
                r.failing_node = node;
                r.reason = why;
                return finish();
        }

        VerifierReport finish()
        {
                r.accepted = r.failing_line == 0;
                r.steps = A.steps();
                r.errors = A.errors();
                return r;
        }

        /* lines 8-9 and 11-12: lo * w <= v <= hi * w with (lo, hi) = (C2, C1) or (C1, C2) */
        bool sandwich(bool nonneg, const Rational &w, const Rational &v)
        {
                const Rational &lo = nonneg ? r.C2 : r.C1, &hi = nonneg ? r.C1 : r.C2;
                return le(A.mul(lo, w), v) && le(v, A.mul(hi, w));
        }
};

} // namespace

VerifierReport verify(const Circuit &c, const std::vector<Rational> &x, const std::vector<Float> &w,
                      const Rational &delta, const Rational &eps, const EvalMode &mode)
{
        Run u(mode);
        Arith &A = u.A;

        /* line 1 */
        std::vector<Rational> consts(c.size() + 1);
        for (int id = 1; id <= c.size(); ++id)
                if (c.node(id).kind == CKind::Const)
                        consts[id] = A.input(c.node(id).c);
        std::vector<Rational> xs;
        for (const auto &v : x)
                xs.push_back(A.input(v));
        for (const auto &v : w)
                u.r.w_hat.push_back(A.input(v.value()));
        Rational d = A.input(delta), e = A.input(eps);
        u.r.delta_hat = d;
        u.r.eps_hat = e;

        /* line 2 */
        if (!u.le(d, A.load(Rational(1, 8))))
                return u.fail(2, 0, "delta > 1/8");
        /* line 3 */
        if (!u.le(e, A.mul(A.load(Rational(1, 32)), d)))
                return u.fail(3, 0, "epsilon > delta/32");
        /* lines 4-5 */
        u.r.C1 = A.add(A.load(1), A.mul(A.load(Rational(3, 4)), d));
        u.r.C2 = A.sub(A.load(1), A.mul(A.load(Rational(3, 4)), d));

        if (int(w.size()) != c.size())
                return u.fail(6, 0, "witness length differs from circuit size");
        std::vector<Rational> in;
        if (c.inputs() == int(x.size()) + 1) {
                in = xs;
                in.push_back(d);
        } else if (c.inputs() == int(x.size())) {
                in = xs;
        } else {
                return u.fail(6, 0, "input length does not match the circuit");
        }

        const auto &wh = u.r.w_hat;
        size_t next_in = 0;
        for (int id = 1; id <= c.size(); ++id) {
                const CNode &n = c.node(id);
                const Rational &wi = wh[id - 1];
                switch (n.kind) {
                case CKind::In:
                case CKind::Const: {
                        const Rational &v = n.kind == CKind::In ? in[next_in++] : consts[id];
                        bool nonneg = !A.positive(-v);
                        if (!u.sandwich(nonneg, wi, v))
                                return u.fail(nonneg ? 8 : 9, id, "input or constant outside [C2 w, C1 w]");
                        break;
                }
                case CKind::Op: {
                        const Rational &a = wh[n.j - 1], &b = wh[n.k - 1];
                        Rational v;
                        switch (n.op) {
                        case Op::Add: v = A.add(a, b); break;
                        case Op::Sub: v = A.sub(a, b); break;
                        case Op::Mul: v = A.mul(a, b); break;
                        case Op::Div:
                                if (sgn(b) == 0)
                                        return u.fail(11, id, "division by zero; the machine loops");
                                v = A.div(a, b);
                                break;
                        }
                        bool nonneg = !A.positive(-wi);
                        if (!u.sandwich(nonneg, wi, v))
                                return u.fail(nonneg ? 11 : 12, id, "operation outside [C2 w, C1 w]");
                        break;
                }
                case CKind::Sel: {
                        const Rational &s = A.positive(wh[n.l - 1]) ? wh[n.j - 1] : wh[n.k - 1];
                        Rational diff = A.sub(wi, s);
                        if (A.positive(diff) || A.positive(-diff))
                                return u.fail(14, id, "selector value differs");
                        break;
                }
                }
        }
        /* line 15 */
        if (c.size() > 0 && !A.positive(wh.back()))
                return u.fail(15, c.size(), "output not positive");
        return u.finish();
}

VerifierReport verify(const Circuit &c, const WeakWitness &wit, const Rational &eps, const EvalMode &mode)
{
        return verify(c, wit.x, wit.w, wit.delta, eps, mode);
}

WeakWitness reconstruct_witness(const VerifierReport &r, const std::vector<Rational> &x, const Rational &delta)
{
        WeakWitness wit;
        wit.x = x;
        wit.delta = delta;
        for (const auto &v : r.w_hat)
                wit.w.push_back(Float::exact(v));
        return wit;
}

Rational c1_with_errors(const Rational &delta, const std::array<Rational, 5> &e)
{
        return ((1 + e[0]) + Rational(3, 4) * (1 + e[1]) * delta * (1 + e[2]) * (1 + e[3])) * (1 + e[4]);
}

Rational c2_with_errors(const Rational &delta, const std::array<Rational, 5> &e)
{
        return ((1 + e[0]) - Rational(3, 4) * (1 + e[1]) * delta * (1 + e[2]) * (1 + e[3])) * (1 + e[4]);
}

C1C2Check check_lemma_c1c2(const Rational &delta, const Rational &eps)
{
        C1C2Check r;
        r.hypotheses = eps < delta / 31 && delta <= Rational(1, 7) && sgn(eps) >= 0;
        bool first = true;
        for (int mask = 0; mask < 32; ++mask) {
                std::array<Rational, 5> e;
                for (int i = 0; i < 5; ++i)
                        e[i] = (mask >> i & 1) ? eps : Rational(-eps);
                Rational c1 = c1_with_errors(delta, e), c2 = c2_with_errors(delta, e);
                if (first || c1 < r.c1_min)
                        r.c1_min = c1;
                if (first || c1 > r.c1_max)
                        r.c1_max = c1;
                if (first || c2 < r.c2_min)
                        r.c2_min = c2;
                if (first || c2 > r.c2_max)
                        r.c2_max = c2;
                first = false;
        }
        r.c1_lo_bound = (1 + eps) / (1 - delta / 2);
        r.c1_hi_bound = (1 - eps) / (1 + eps) / (1 - delta);
        r.c2_lo_bound = (1 + eps) / (1 - eps) / (1 + delta);
        r.c2_hi_bound = (1 - eps) / (1 + delta / 2);
        r.c1_lower = r.c1_lo_bound < r.c1_min;
        r.c1_upper = r.c1_max < r.c1_hi_bound;
        r.c2_lower = r.c2_lo_bound < r.c2_min;
        r.c2_upper = r.c2_max < r.c2_hi_bound;
        return r;
}

Rational Poly::eval(const Rational &x) const
{
        Rational acc = 0;
        for (auto it = coef.rbegin(); it != coef.rend(); ++it)
                acc = acc * x + *it;
        return acc;
}

namespace {

using Coeffs = std::vector<Rational>;

Coeffs pmul(const Coeffs &a, const Coeffs &b)
{
        Coeffs r(a.size() + b.size() - 1);
        for (size_t i = 0; i < a.size(); ++i)
                for (size_t j = 0; j < b.size(); ++j)
                        r[i + j] += a[i] * b[j];
        return r;
}

Coeffs padd(Coeffs a, const Coeffs &b, int s = 1)
{
        if (a.size() < b.size())
                a.resize(b.size());
        for (size_t i = 0; i < b.size(); ++i)
                a[i] += s * b[i];
        return a;
}

Coeffs ppow(const Coeffs &a, int k)
{
        Coeffs r = {1};
        for (int i = 0; i < k; ++i)
                r = pmul(r, a);
        return r;
}

Poly make(const std::vector<std::pair<long, long>> &desc, int relation)
{
        Poly p;
        p.relation = relation;
        for (auto [n, d] : desc)
                p.coef.push_back(Rational(n, d));
        for (auto &q : p.coef)
                q.canonicalize();
        return p;
}

} // namespace

std::array<Poly, 4> appendix_polynomials()
{
        return {
                make({{-15, 124}, {-1389, 1922}, {-13853, 119164}, {-226, 29791}, {-915, 3694084},
                      {-231, 57258302}, {-3, 114516604}},
                     -1),
                make({{19, 124}, {-3371, 7688}, {101, 1922}, {-291, 119164}, {189, 3694084}, {-3, 7388168}}, 1),
                make({{-19, 124}, {-2255, 7688}, {95, 3844}, {-3, 59582}, {-45, 1847042}, {3, 7388168}}, -1),
                make({{201, 124}, {1029, 1922}, {-13117, 119164}, {224, 29791}, {-915, 3694084}, {231, 57258302},
                      {-3, 114516604}},
                     1),
        };
}

std::array<Poly, 4> derived_polynomials(const Rational &ratio)
{
        const Coeffs one = {1}, d = {0, 1};
        const Coeffs e = {0, ratio};
        const Coeffs pe = padd(one, e), me = padd(one, e, -1);
        const Coeffs q34d = {0, Rational(3, 4)};
        const Coeffs half_d = {0, Rational(1, 2)};
        std::array<Coeffs, 4> lhs = {
                padd(pmul(pmul(padd(one, d, -1), padd(one, pmul(q34d, ppow(pe, 2)))), ppow(pe, 3)), me, -1),
                padd(pmul(pmul(padd(one, half_d, -1), padd(one, pmul(q34d, ppow(me, 2)))), ppow(me, 2)), pe, -1),
                padd(pmul(pmul(padd(one, half_d), padd(pe, pmul(q34d, ppow(me, 3)), -1)), pe), me, -1),
                padd(pmul(pmul(padd(one, d), padd(me, pmul(q34d, ppow(pe, 3)), -1)), ppow(me, 2)), pe, -1),
        };
        const int rel[4] = {-1, 1, -1, 1};
        std::array<Poly, 4> out;
        for (int i = 0; i < 4; ++i) {
                if (sgn(lhs[i][0]) != 0)
                        throw std::logic_error("constant term does not vanish");
                out[i].coef.assign(lhs[i].begin() + 1, lhs[i].end());
                while (out[i].coef.size() > 1 && sgn(out[i].coef.back()) == 0)
                        out[i].coef.pop_back();
                out[i].relation = rel[i];
        }
        return out;
}

Rational lemma_f(const Rational &e)
{
        Rational p = 1 + e, m = 1 - e;
        return p * p * p * p / (m * m) / 256;
}

Rational lemma_f_slope(const Rational &e)
{
        /* d/de (1+e)^4 (1-e)^-2 = (1+e)^3 (1-e)^-3 (4(1-e) + 2(1+e)) */
        Rational p = 1 + e, m = 1 - e;
        return p * p * p * (4 * m + 2 * p);
}

EpsilonBounds check_lemma_epsilon_bounds(const Rational &eps, const Rational &delta)
{
        EpsilonBounds b;
        Rational cur(1, 4);
        b.iterates.push_back(cur);
        for (int i = 0; i < 3; ++i) {
                cur = lemma_f(cur);
                b.iterates.push_back(cur);
        }
        b.eps3 = cur;
        b.eps3_below_1_250 = b.eps3 < Rational(1, 250);
        b.delta_bound = (1 + b.eps3) / (1 - b.eps3) / 8;
        b.delta_bound_below_1_7 = b.delta_bound < Rational(1, 7);
        b.factor = (1 + b.eps3) * (1 + b.eps3) * (1 + b.eps3) / (1 - b.eps3);
        b.factor_below_32_31 = b.factor < Rational(32, 31);

        /* most favourable errors for passing: read delta low, 1/8 high; read eps low, delta/32 high */
        bool line2 = delta * (1 - eps) <= (1 + eps) / 8;
        Rational g = (1 + eps) * (1 + eps) * (1 + eps);
        bool line3 = eps * (1 - eps) <= delta / 32 * g;
        b.passes_lines = sgn(eps) >= 0 && eps < Rational(1, 4) && line2 && line3;
        b.eps_ok = eps < b.eps3;
        b.delta_ok = delta < b.delta_bound;
        b.ratio_ok = eps < delta / 31;
        return b;
}

} // namespace bssfp
