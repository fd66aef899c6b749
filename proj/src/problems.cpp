#include "bssfp/problems.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <set>
#include <sstream>

#include "bssfp/builder.hpp"

namespace bssfp {

namespace {

Rational qq(long a, long b)
{
        Rational r(a, b);
        r.canonicalize();
        return r;
}

Outcome outcome_of(const Trace &tr)
{
        if (!tr.terminated)
                return Outcome::Timeout;
        return tr.accepted ? Outcome::Accept : Outcome::Reject;
}

int64_t count_node(const Trace &tr, int node)
{
        int64_t n = 0;
        for (const auto &s : tr.steps)
                n += s.node == node;
        return n;
}

} // namespace

const char *outcome_name(Outcome o)
{
        switch (o) {
        case Outcome::Accept: return "accept";
        case Outcome::Reject: return "reject";
        case Outcome::Timeout: return "timeout";
        }
        return "?";
}

std::optional<double> input_size(int64_t length, const Condition &mu)
{
        if (!mu)
                return std::nullopt;
        return double(length) * (1.0 + std::log2(to_double(*mu)));
}

/* ---- integers ---- */

namespace {

struct IntegersProgram {
        Machine m;
        int dbl = 0, half = 0;
};

IntegersProgram integers_program()
{
        /* x, y, one, two, zero */
        ProgramBuilder b(1, 5);
        IntegersProgram p;
        auto pos = b.label(), l1 = b.label(), body1 = b.label(), l2 = b.label(), body2 = b.label();
        auto sub = b.label(), skip = b.label(), l3 = b.label(), rej = b.label(), acc = b.label(), neg = b.label();
        b.branch_diff(4, 0, neg, pos);
        b.bind(neg);
        b.sub(0, 4, 0);
        b.bind(pos);
        b.load(2, 1);
        b.load(3, 2);
        b.load(1, 1);
        b.bind(l1);
        b.branch_diff(1, 0, l2, body1);
        b.bind(body1);
        p.dbl = b.here();
        b.mul(1, 3, 1);
        b.jump(l1);
        b.bind(l2);
        b.branch_diff(3, 1, l3, body2);
        b.bind(body2);
        p.half = b.here() + 1;
        b.div(1, 1, 3);
        b.branch_diff(1, 0, skip, sub);
        b.bind(sub);
        b.sub(0, 0, 1);
        b.bind(skip);
        b.jump(l2);
        b.bind(l3);
        b.branch_pos(0, rej, acc);
        b.bind(acc);
        b.halt_with(1);
        b.bind(rej);
        b.halt_with(-1);
        p.m = b.finish();
        return p;
}

} // namespace

Machine integers_machine() { return integers_program().m; }

IntegersRun integers_run(const Rational &x, const EvalMode &mode, int64_t budget)
{
        auto p = integers_program();
        IntegersRun r;
        r.trace = run(p.m, {x}, mode, budget);
        r.outcome = outcome_of(r.trace);
        r.doublings = count_node(r.trace, p.dbl);
        r.halvings = count_node(r.trace, p.half);
        return r;
}

Condition integers_condition(const Rational &x) { return 1 + abs(x); }

/* ---- x <= 1 ---- */

Machine x_le_1_machine()
{
        /* x, eps, a, b, c, d, e, 8eps */
        ProgramBuilder b(2, 8);
        auto xb = b.label(), xs = b.label(), next = b.label(), cpos = b.label(), cneg = b.label();
        auto acc = b.label(), rej = b.label();
        b.load(2, 1);
        b.load(7, 8);
        b.mul(7, 7, 1);
        b.branch_diff(0, 7, xb, xs);
        b.bind(xb);
        b.copy(3, 0);
        b.copy(4, 7);
        b.jump(next);
        b.bind(xs);
        b.copy(3, 7);
        b.copy(4, 0);
        b.bind(next);
        b.sub(5, 2, 3);
        b.sub(6, 5, 4);
        b.branch_pos(4, cpos, cneg);
        b.bind(cneg);
        b.accept_if_positive(5);
        b.bind(cpos);
        b.branch_pos(6, acc, rej);
        b.bind(acc);
        b.halt_with(1);
        b.bind(rej);
        b.halt_with(-1);
        return b.finish();
}

Condition x_le_1_condition(const Rational &x)
{
        if (x == 1)
                return std::nullopt;
        return 1 / abs(x - 1);
}

/* ---- Cantor ---- */

CantorDistance cantor_distance(const Rational &x)
{
        CantorDistance r;
        if (x < 0) {
                r.distance = -x;
                return r;
        }
        if (x > 1) {
                r.distance = x - 1;
                return r;
        }
        const Rational third = qq(1, 3), two_thirds = qq(2, 3);
        Rational y = x, scale = 1;
        std::set<Rational> seen;
        while (true) {
                if (y == 0 || y == 1 || !seen.insert(y).second) {
                        r.member = true;
                        return r;
                }
                if (y <= third) {
                        y *= 3;
                } else if (y >= two_thirds) {
                        y = 3 * y - 2;
                } else {
                        r.distance = scale * std::min(Rational(y - third), Rational(two_thirds - y));
                        return r;
                }
                scale /= 3;
        }
}

Condition cantor_condition(const Rational &x)
{
        auto d = cantor_distance(x);
        if (d.member)
                return std::nullopt;
        return 1 / std::min(d.distance, Rational(1));
}

namespace {

/*
 * Margin constants. r_0 = c0 eps + c2 eps^2, r_{l+1} = r_l (3 + A eps) + B eps.
 * The regime switches at eps = 1/48; above 1/8 the decider never halts.
 */
struct CantorRegime {
        Rational c0, c2, A, B;
};

const CantorRegime &cantor_regime(bool large)
{
        static const CantorRegime small{qq(9, 4), 8, 25, qq(9, 2)};
        static const CantorRegime big{qq(11, 2), 0, 80, 10};
        return large ? big : small;
}

const Rational &cantor_guard()
{
        static const Rational g = qq(1, 8);
        return g;
}

const Rational &cantor_switch()
{
        static const Rational s = qq(1, 48);
        return s;
}

struct CantorProgram {
        Machine m;
        int tent = 0;
};

/* x, eps, three, one, r, g, h, y, z, w, tmp, zero */
CantorProgram cantor_program()
{
        ProgramBuilder b(2, 12);
        CantorProgram p;
        auto div = b.label(), ok1 = b.label(), ok2 = b.label(), large = b.label(), small = b.label();
        auto loop = b.label(), c1 = b.label(), c2 = b.label(), ty = b.label(), tz = b.label(), upd = b.label();
        auto acc = b.label();
        b.load(10, cantor_guard());
        b.branch_diff(1, 10, div, ok1);
        b.bind(ok1);
        b.branch_diff(11, 1, div, ok2);
        b.bind(ok2);
        b.load(2, 3);
        b.load(3, 1);
        b.load(10, cantor_switch());
        b.branch_diff(1, 10, large, small);
        for (bool lg : {false, true}) {
                const auto &c = cantor_regime(lg);
                b.bind(lg ? large : small);
                b.load(10, c.c0);
                b.mul(4, 10, 1);
                if (c.c2 != 0) {
                        b.load(10, c.c2);
                        b.mul(10, 10, 1);
                        b.mul(10, 10, 1);
                        b.add(4, 4, 10);
                }
                b.load(10, c.A);
                b.mul(10, 10, 1);
                b.add(5, 2, 10);
                b.load(10, c.B);
                b.mul(6, 10, 1);
                b.jump(loop);
        }
        b.bind(loop);
        b.sub(9, 0, 3);
        b.branch_diff(9, 4, acc, c1);
        b.bind(c1);
        b.add(9, 0, 4);
        b.branch_diff(11, 9, acc, c2);
        b.bind(c2);
        p.tent = b.here();
        b.mul(7, 2, 0);
        b.sub(8, 2, 7);
        b.branch_diff(8, 7, ty, tz);
        b.bind(ty);
        b.copy(0, 7);
        b.jump(upd);
        b.bind(tz);
        b.copy(0, 8);
        b.bind(upd);
        b.mul(4, 4, 5);
        b.add(4, 4, 6);
        b.jump(loop);
        b.bind(acc);
        b.halt_with(1);
        b.bind(div);
        b.diverge();
        p.m = b.finish();
        return p;
}

} // namespace

Machine cantor_machine() { return cantor_program().m; }

CantorRun cantor_machine_run(const Rational &x, const Rational &eps, const EvalMode &mode, int64_t max_iterations)
{
        auto p = cantor_program();
        int64_t budget = 800 + 300 * (max_iterations + 1);
        Trace tr = run(p.m, {x, eps}, mode, budget);
        CantorRun r;
        r.outcome = outcome_of(tr);
        r.iterations = count_node(tr, p.tent);
        r.steps = int64_t(tr.steps.size());
        return r;
}

CantorRun cantor_decide(const Rational &x, const Rational &eps, const EvalMode &mode, int64_t max_iterations)
{
        Arith A(mode);
        CantorRun r;
        auto done = [&](Outcome o) {
                r.outcome = o;
                r.steps = A.steps();
                return r;
        };
        /* initial cells in index order: two markers, then the nonzero inputs */
        A.input(1);
        A.input(1);
        Rational X = sgn(x) ? A.input(x) : Rational(0);
        Rational E = sgn(eps) ? A.input(eps) : Rational(0);
        const Rational zero = 0;
        if (A.positive(A.sub(E, A.load(cantor_guard()))))
                return done(Outcome::Timeout);
        if (A.positive(A.sub(zero, E)))
                return done(Outcome::Timeout);
        Rational three = A.load(3), one = A.load(1);
        bool large = A.positive(A.sub(E, A.load(cantor_switch())));
        const auto &c = cantor_regime(large);
        Rational R = A.mul(A.load(c.c0), E);
        if (c.c2 != 0)
                R = A.add(R, A.mul(A.mul(A.load(c.c2), E), E));
        Rational g = A.add(three, A.mul(A.load(c.A), E));
        Rational h = A.mul(A.load(c.B), E);
        r.orbit.push_back(X);
        while (true) {
                if (A.positive(A.sub(A.sub(X, one), R)) || A.positive(A.sub(zero, A.add(X, R)))) {
                        A.load(1);
                        return done(Outcome::Accept);
                }
                if (r.iterations >= max_iterations)
                        return done(Outcome::Timeout);
                Rational y = A.mul(three, X);
                Rational z = A.sub(three, y);
                X = A.positive(A.sub(z, y)) ? y : z;
                ++r.iterations;
                r.orbit.push_back(X);
                R = A.add(A.mul(R, g), h);
        }
}

Rational cantor_required_radius(const Rational &eps, int l)
{
        Rational R = eps;
        for (int i = 0; i < l; ++i) {
                Rational e1 = 1 + eps;
                R = 3 * e1 * e1 * e1 * R + qq(9, 2) * eps + qq(9, 2) * eps * eps + qq(3, 2) * eps * eps * eps;
        }
        return (1 + eps) * (R + eps);
}

Rational cantor_min_radius(const Rational &eps, int l, bool large)
{
        /* every factor at its weak minimum */
        const Rational lo = 1 - eps;
        const Rational e = eps * lo;
        const auto &c = cantor_regime(large);
        Rational R = c.c0 * lo * e * lo;
        if (c.c2 != 0)
                R = (R + c.c2 * lo * e * lo * e * lo) * lo;
        Rational g = (3 * lo + c.A * lo * e * lo) * lo;
        Rational h = c.B * lo * e * lo;
        for (int i = 0; i < l; ++i)
                R = (R * g * lo + h) * lo;
        return R;
}

bool cantor_small_regime_possible(const Rational &eps)
{
        return eps * (1 - eps) <= cantor_switch() * (1 + eps);
}

bool cantor_large_regime_possible(const Rational &eps)
{
        return eps * (1 + eps) > cantor_switch() * (1 - eps);
}

/* ---- Koch ---- */

namespace {

Eis eadd(const Eis &p, const Eis &q) { return {p.a + q.a, p.b + q.b}; }
Eis esub(const Eis &p, const Eis &q) { return {p.a - q.a, p.b - q.b}; }
Eis escale(const Eis &p, const Rational &s) { return {p.a * s, p.b * s}; }
/* times zeta and times 1/zeta */
Eis erot(const Eis &p) { return {-p.b, p.a + p.b}; }
Eis erot_inv(const Eis &p) { return {p.a + p.b, -p.a}; }
Rational ecross(const Eis &u, const Eis &w) { return u.a * w.b - u.b * w.a; }
Rational edot_scaled(const Eis &u, const Eis &w)
{
        /* 2 <u, w> in the (1, zeta) basis */
        return 2 * u.a * w.a + u.a * w.b + u.b * w.a + 2 * u.b * w.b;
}
Rational enorm2(const Eis &u) { return u.a * u.a + u.a * u.b + u.b * u.b; }

struct Tri {
        Eis p[3];
};

Rational seg_dist2(const Eis &p, const Eis &a, const Eis &b)
{
        Eis ab = esub(b, a), ap = esub(p, a);
        Rational L = edot_scaled(ab, ab);
        Rational s = sgn(L) ? Rational(edot_scaled(ap, ab) / L) : Rational(0);
        if (s < 0)
                s = 0;
        if (s > 1)
                s = 1;
        return enorm2(esub(ap, escale(ab, s)));
}

/* -1 outside, 0 on the boundary, 1 inside (counter-clockwise triangles). */
int tri_locate(const Tri &t, const Eis &p)
{
        int lo = 1;
        for (int i = 0; i < 3; ++i) {
                int s = sgn(ecross(esub(t.p[(i + 1) % 3], t.p[i]), esub(p, t.p[i])));
                if (s < 0)
                        return -1;
                lo = std::min(lo, s);
        }
        return lo;
}

Rational tri_boundary_dist2(const Tri &t, const Eis &p)
{
        Rational d = seg_dist2(p, t.p[0], t.p[1]);
        for (int i = 1; i < 3; ++i)
                d = std::min(d, seg_dist2(p, t.p[i], t.p[(i + 1) % 3]));
        return d;
}

struct KochGeometry {
        Tri A, e, sub[4];
        Eis v;
};

Eis koch_map(int i, const Eis &z)
{
        const Eis third{qq(1, 3), 0}, two_thirds{qq(2, 3), 0}, v{qq(1, 3), qq(1, 3)};
        Eis s = escale(z, qq(1, 3));
        switch (i) {
        case 0: return s;
        case 1: return eadd(third, erot(s));
        case 2: return eadd(v, erot_inv(s));
        default: return eadd(two_thirds, s);
        }
}

Eis koch_map_inv(int i, const Eis &p)
{
        const Eis third{qq(1, 3), 0}, two_thirds{qq(2, 3), 0}, v{qq(1, 3), qq(1, 3)};
        switch (i) {
        case 0: return escale(p, 3);
        case 1: return escale(erot_inv(esub(p, third)), 3);
        case 2: return escale(erot(esub(p, v)), 3);
        default: return escale(esub(p, two_thirds), 3);
        }
}

const KochGeometry &koch_geometry()
{
        static const KochGeometry g = [] {
                KochGeometry k;
                k.v = {qq(1, 3), qq(1, 3)};
                k.A = {{{0, 0}, {1, 0}, k.v}};
                k.e = {{{qq(1, 3), 0}, {qq(2, 3), 0}, k.v}};
                for (int i = 0; i < 4; ++i)
                        for (int j = 0; j < 3; ++j)
                                k.sub[i].p[j] = koch_map(i, k.A.p[j]);
                return k;
        }();
        return g;
}

} // namespace

double Eis::x() const { return to_double(a) + to_double(b) / 2; }
double Eis::y() const { return to_double(b) * std::sqrt(3.0) / 2; }

Eis eis_from_xy_rational(const Rational &x, const Rational &y_over_sqrt3)
{
        Rational b = 2 * y_over_sqrt3;
        return {x - y_over_sqrt3, b};
}

double KochRun::distance_lower() const { return std::sqrt(to_double(distance_lower_sq)); }

KochRun koch_membership(const Eis &p, int64_t budget)
{
        const auto &g = koch_geometry();
        KochRun r;
        Eis y = p;
        Rational scale2 = 1;
        for (int64_t t = 0; t <= budget; ++t) {
                r.iterations = t;
                int in_e = tri_locate(g.e, y);
                if (in_e > 0) {
                        r.outcome = Outcome::Accept;
                        r.distance_lower_sq = scale2 * tri_boundary_dist2(g.e, y);
                        return r;
                }
                int which = -1;
                bool edge = in_e == 0;
                for (int i = 0; i < 4; ++i) {
                        int s = tri_locate(g.sub[i], y);
                        if (s > 0)
                                which = i;
                        edge |= s == 0;
                }
                if (which >= 0) {
                        r.path.push_back(which + 1);
                        y = koch_map_inv(which, y);
                        scale2 /= 9;
                        continue;
                }
                if (edge) {
                        /* on a cut line of the subdivision: left undecided */
                        r.outcome = Outcome::Timeout;
                        r.iterations = budget;
                        return r;
                }
                Rational d = tri_boundary_dist2(g.e, y);
                for (int i = 0; i < 4; ++i)
                        d = std::min(d, tri_boundary_dist2(g.sub[i], y));
                if (t > 0)
                        d = std::min(d, tri_boundary_dist2(g.A, y));
                r.outcome = Outcome::Reject;
                r.distance_lower_sq = scale2 * d;
                return r;
        }
        r.outcome = Outcome::Timeout;
        r.iterations = budget;
        return r;
}

double koch_polyline_error(int depth) { return std::sqrt(3.0) / 6 * std::pow(3.0, -depth); }

double koch_boundary_distance(double x, double y, int depth)
{
        using C = std::complex<double>;
        std::vector<C> pts = {C(0, 0), C(1, 0)};
        const C rot = std::polar(1.0, M_PI / 3);
        for (int d = 0; d < depth; ++d) {
                std::vector<C> next;
                next.reserve(pts.size() * 4);
                for (size_t i = 0; i + 1 < pts.size(); ++i) {
                        C a = pts[i], b = pts[i + 1], s = (b - a) / 3.0;
                        next.push_back(a);
                        next.push_back(a + s);
                        next.push_back(a + s + s * rot);
                        next.push_back(a + 2.0 * s);
                }
                next.push_back(pts.back());
                pts = std::move(next);
        }
        const C p(x, y);
        auto seg = [&](C a, C b) {
                C ab = b - a;
                double s = std::clamp(std::real((p - a) * std::conj(ab)) / std::norm(ab), 0.0, 1.0);
                return std::abs(p - (a + s * ab));
        };
        double best = seg(C(0, 0), C(1, 0));
        for (size_t i = 0; i + 1 < pts.size(); ++i)
                best = std::min(best, seg(pts[i], pts[i + 1]));
        return best;
}

/* ---- exp epigraph ---- */

namespace {

/* Smallest m >= 5 with 2 * 3^(m+1) / (m+1)! <= 2^-(n0+1). */
int exp_terms(int n0)
{
        Integer num = 2 * 729, den = 720;
        int m = 5;
        while (true) {
                Integer lhs = num << (n0 + 1);
                if (lhs <= den)
                        return m;
                ++m;
                num *= 3;
                den *= m + 1;
        }
}

} // namespace

ExpRun exp_epigraph(const Rational &x, const Rational &y, const Rational &eps, const EvalMode &mode, int64_t max_steps)
{
        Arith A(mode);
        ExpRun r;
        auto finish = [&](Outcome o) {
                r.outcome = o;
                r.steps = A.steps();
                return r;
        };
        auto stall = [&] {
                r.outcome = Outcome::Timeout;
                r.steps = max_steps;
                return r;
        };
        Rational X = A.input(x), Y = A.input(y), q = A.input(eps);
        const Rational zero = 0;
        if (!A.positive(q) || A.positive(A.sub(q, A.load(qq(1, 64)))))
                return stall();
        if (!A.positive(Y))
                return finish(Outcome::Reject);
        Rational one = A.load(1), two = A.load(2);
        int s = 1;
        if (!A.positive(X)) {
                s = -1;
                X = A.sub(zero, X);
                Y = A.div(one, Y);
        }
        Rational x0 = X;
        while (A.positive(A.sub(x0, two))) {
                x0 = A.div(x0, two);
                if (++r.a > 30)
                        return stall();
        }
        Rational phi = A.add(one, A.mul(A.load(8), q));
        Rational w = A.mul(A.mul(A.load(8 * r.a + 16), q), X);
        if (!A.positive(A.sub(A.load(qq(1, 2)), w)))
                return stall();
        Rational lam = A.div(one, A.sub(one, w));
        for (r.n0 = 8; A.steps() <= max_steps; ++r.n0) {
                int m = exp_terms(r.n0);
                Rational t = A.load(1), sum = A.load(1);
                for (int k = 1; k <= m; ++k) {
                        t = A.div(A.mul(t, x0), A.load(k));
                        sum = A.add(sum, t);
                }
                Rational z = sum;
                for (int i = 0; i < r.a; ++i)
                        z = A.mul(z, z);
                Rational b = A.add(one, A.load(pow2(-r.n0)));
                for (int i = 0; i < 3 * m + 6; ++i)
                        b = A.mul(b, phi);
                Rational E = b;
                for (int i = 0; i < r.a; ++i)
                        E = A.mul(E, E);
                E = A.mul(E, lam);
                for (int i = 0; i < 4; ++i)
                        E = A.mul(E, phi);
                if (A.positive(A.sub(Y, A.mul(z, E))))
                        return finish(s > 0 ? Outcome::Accept : Outcome::Reject);
                if (A.positive(A.sub(A.div(z, E), Y)))
                        return finish(s > 0 ? Outcome::Reject : Outcome::Accept);
                /* truncation already far below the rounding floor */
                if (A.positive(A.sub(A.mul(q, A.load(qq(1, 256))), A.load(pow2(-r.n0)))))
                        return stall();
        }
        return stall();
}

std::pair<Rational, Rational> exp_bounds(const Rational &x, int terms)
{
        Rational ax = abs(x);
        int a = 0;
        while (ax > 1) {
                ax /= 2;
                ++a;
        }
        terms = std::max(terms, 3);
        Rational t = 1, s = 1;
        for (int k = 1; k <= terms; ++k) {
                t = t * ax / k;
                s += t;
        }
        /* tail <= t ax / (terms + 1) / (1 - ax / (terms + 2)) */
        Rational tail = t * ax / (terms + 1) / (1 - ax / (terms + 2));
        Rational lo = s, hi = s + tail;
        for (int i = 0; i < a; ++i) {
                lo *= lo;
                hi *= hi;
        }
        if (sgn(x) < 0)
                return {1 / hi, 1 / lo};
        return {lo, hi};
}

int exp_sign_oracle(const Rational &x, const Rational &y, int max_terms)
{
        for (int n = 8; n <= max_terms; n *= 2) {
                auto [lo, hi] = exp_bounds(x, n);
                if (y > hi)
                        return 1;
                if (y < lo)
                        return -1;
        }
        return 0;
}

/* ---- sparse polynomial systems ---- */

int Monomial::degree() const
{
        int d = 0;
        for (const auto &[v, e] : powers)
                d += e;
        return d;
}

int Polynomial::degree() const
{
        int d = 0;
        for (const auto &t : terms)
                d = std::max(d, t.degree());
        return d;
}

Rational Polynomial::eval(const std::vector<Rational> &y) const
{
        Rational acc = 0;
        for (const auto &t : terms) {
                Rational v = t.coef;
                for (const auto &[var, e] : t.powers) {
                        if (var < 0 || size_t(var) >= y.size())
                                throw PreconditionError("point has too few coordinates");
                        for (int i = 0; i < e; ++i)
                                v *= y[var];
                }
                acc += v;
        }
        return acc;
}

Rational Polynomial::norm1() const
{
        Rational n = 0;
        for (const auto &t : terms)
                n += abs(t.coef);
        return n;
}

int PolySystem::degree() const
{
        int d = 0;
        for (const auto &p : polys)
                d = std::max(d, p.degree());
        return d;
}

int PolySystem::equations() const
{
        return int(std::count_if(polys.begin(), polys.end(), [](const Polynomial &p) { return p.rel == Rel::Eq; }));
}

int PolySystem::inequalities() const { return int(polys.size()) - equations(); }

PolySystem PolySystem::parse(std::istream &in)
{
        PolySystem sys;
        sys.n = -1;
        Polynomial cur;
        bool open = false;
        auto close = [&] {
                if (open)
                        sys.polys.push_back(std::move(cur));
                cur = Polynomial();
                open = false;
        };
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
                ++lineno;
                auto hash = line.find('#');
                if (hash != std::string::npos)
                        line.erase(hash);
                std::istringstream ls(line);
                std::string first;
                if (!(ls >> first)) {
                        close();
                        continue;
                }
                std::string where = "line " + std::to_string(lineno) + ": ";
                if (first == "=" || first == ">") {
                        std::string z, extra;
                        if (!(ls >> z) || z != "0" || (ls >> extra))
                                throw ParseError(where + "relation line must read '= 0' or '> 0'");
                        cur.rel = first == "=" ? Rel::Eq : Rel::Gt;
                        open = true;
                        continue;
                }
                Monomial m;
                try {
                        m.coef = parse_rational(first);
                } catch (const std::exception &) {
                        throw ParseError(where + "bad coefficient '" + first + "'");
                }
                std::string colon;
                if (!(ls >> colon) || colon != ":")
                        throw ParseError(where + "expected ':' after the coefficient");
                std::vector<int> ex;
                std::string tok;
                while (ls >> tok) {
                        try {
                                size_t used = 0;
                                int e = std::stoi(tok, &used);
                                if (used != tok.size() || e < 0)
                                        throw ParseError("");
                                ex.push_back(e);
                        } catch (const std::exception &) {
                                throw ParseError(where + "bad exponent '" + tok + "'");
                        }
                }
                if (sys.n < 0)
                        sys.n = int(ex.size());
                else if (int(ex.size()) != sys.n)
                        throw ParseError(where + "expected " + std::to_string(sys.n) + " exponents");
                for (int i = 0; i < int(ex.size()); ++i)
                        if (ex[i])
                                m.powers.emplace_back(i, ex[i]);
                cur.terms.push_back(std::move(m));
                open = true;
        }
        close();
        if (sys.n < 0)
                sys.n = 0;
        return sys;
}

PolySystem PolySystem::parse_string(const std::string &text)
{
        std::istringstream in(text);
        return parse(in);
}

PolySystem PolySystem::load_file(const std::string &path)
{
        std::ifstream in(path);
        if (!in)
                throw ParseError("cannot open " + path);
        return parse(in);
}

std::string PolySystem::str() const
{
        std::ostringstream os;
        for (size_t i = 0; i < polys.size(); ++i) {
                if (i)
                        os << '\n';
                const auto &p = polys[i];
                if (p.rel == Rel::Eq)
                        os << "= 0\n";
                for (const auto &t : p.terms) {
                        os << to_string(t.coef) << " :";
                        std::vector<int> ex(size_t(n), 0);
                        for (const auto &[v, e] : t.powers)
                                ex.at(size_t(v)) = e;
                        for (int e : ex)
                                os << ' ' << e;
                        os << '\n';
                }
        }
        return os.str();
}

Rational safeas_margin(const Polynomial &p, int D, const std::vector<Rational> &y, const Rational &eps)
{
        Rational inf = 1;
        for (const auto &v : y)
                inf = std::max(inf, Rational(abs(v)));
        Rational scale = 1;
        for (int i = 0; i < D; ++i)
                scale *= inf;
        Rational grow = 1;
        for (int i = 0; i < 2 * D + int(p.terms.size()); ++i)
                grow *= 1 + eps;
        return p.norm1() * scale * (grow - 1);
}

bool check_safeas_witness(const PolySystem &f, const std::vector<Rational> &y, const EvalMode &mode)
{
        if (int(y.size()) != f.n)
                throw PreconditionError("point dimension does not match the system");
        if (mode.semantics == Semantics::Exact) {
                for (const auto &p : f.polys) {
                        int s = sgn(p.eval(y));
                        if (p.rel == Rel::Eq ? s != 0 : s <= 0)
                                return false;
                }
                return true;
        }
        if (f.equations() > 0)
                throw PreconditionError("equations can only be checked exactly");
        Arith A(mode);
        std::vector<Rational> Y;
        for (const auto &v : y)
                Y.push_back(A.input(v));
        const int D = f.degree();
        for (const auto &p : f.polys) {
                Rational g = 0;
                bool first = true;
                for (const auto &t : p.terms) {
                        Rational v = A.load(t.coef);
                        for (const auto &[var, e] : t.powers)
                                for (int i = 0; i < e; ++i)
                                        v = A.mul(v, Y[size_t(var)]);
                        g = first ? v : A.add(g, v);
                        first = false;
                }
                if (g - safeas_margin(p, D, y, mode.epsilon()) <= 0)
                        return false;
        }
        return true;
}

/* ---- geodesic certificate ---- */

namespace {

/* lo <= sqrt(q) <= lo + 2^-k */
Rational sqrt_lower(const Rational &q, int k)
{
        Integer scaled = (q.get_num() << (2 * k)) / q.get_den();
        Integer root;
        mpz_sqrt(root.get_mpz_t(), scaled.get_mpz_t());
        return Rational(root) * pow2(-k);
}

Rational chord2(const Pt &a, const Pt &b)
{
        Rational dx = a.x - b.x, dy = a.y - b.y;
        return dx * dx + dy * dy;
}

bool on_circle(const Pt &p) { return p.x * p.x + p.y * p.y == 1; }

} // namespace

double GeodesicCheck::m() const { return to_double((m_lo + m_hi) / 2); }

Pt circle_point(const Rational &t)
{
        Rational d = 1 + t * t;
        return {(1 - t * t) / d, 2 * t / d};
}

GeodesicCheck check_geodesic_certificate(const Pt &y, const std::vector<Pt> &waypoints, const Rational &delta,
                                         const Rational &r)
{
        GeodesicCheck c;
        auto reject = [&](const std::string &why) {
                c.accepted = false;
                c.reason = why;
                return c;
        };
        if (!on_circle(y))
                return reject("target off the circle");
        if (sgn(delta) <= 0 || delta >= 1)
                return reject("delta outside (0, delta0)");
        std::vector<Pt> chain = {Pt{1, 0}};
        for (const auto &p : waypoints) {
                if (!on_circle(p))
                        return reject("waypoint off the circle");
                chain.push_back(p);
        }
        chain.push_back(y);
        std::vector<Rational> c2;
        for (size_t i = 0; i + 1 < chain.size(); ++i) {
                c2.push_back(chord2(chain[i], chain[i + 1]));
                if (c2.back() > delta * delta)
                        return reject("step longer than delta");
        }
        for (int k = 64; k <= 4096; k *= 2) {
                Rational lo_sum = 0, hi_sum = 0, ulp = pow2(-k);
                for (const auto &q : c2) {
                        Rational lo = sqrt_lower(q, k);
                        lo_sum += lo;
                        hi_sum += lo * lo == q ? lo : Rational(lo + ulp);
                }
                c.m_lo = r - hi_sum;
                c.m_hi = r - lo_sum;
                if (sgn(c.m_lo) > 0) {
                        c.accepted = true;
                        c.reason = "margin positive";
                        return c;
                }
                if (sgn(c.m_hi) <= 0)
                        return reject("path longer than r");
        }
        return reject("margin not separated from zero");
}

int64_t geodesic_chain_length(double r, double d)
{
        double gap = std::abs(r - d);
        double a = gap > 0 ? std::ceil(r * r / (2 * gap)) : 1e18;
        return std::max<int64_t>(1, std::max(int64_t(a), int64_t(std::ceil(r))));
}

double circle_arc_length(const Rational &t) { return std::abs(2 * std::atan(to_double(t))); }

GeodesicCertificate geodesic_certificate(const Rational &t_y, const Rational &r)
{
        GeodesicCertificate g;
        double theta = 2 * std::atan(to_double(t_y));
        g.N = geodesic_chain_length(to_double(r), std::abs(theta));
        Rational max_c2 = 0;
        Pt prev{1, 0};
        for (int64_t i = 1; i <= g.N; ++i) {
                Pt p = i == g.N ? circle_point(t_y) : circle_point(Rational(std::tan(theta * double(i) / double(2 * g.N))));
                if (i < g.N)
                        g.waypoints.push_back(p);
                max_c2 = std::max(max_c2, chord2(prev, p));
                prev = p;
        }
        Rational ub = sqrt_lower(max_c2, 80) + pow2(-80);
        g.delta = ub * (1 + pow2(-40));
        if (sgn(g.delta) == 0)
                g.delta = pow2(-40);
        return g;
}

/* ---- real encoding ---- */

RealEncodingRun real_encoding_run(const Rational &x, const Rational &eps, const EvalMode &mode, const Machine &bit_machine,
                                  int64_t budget)
{
        RealEncodingRun r;
        auto reject = [&](const std::string &why) {
                r.outcome = Outcome::Reject;
                r.rejected_at = why;
                return r;
        };
        BitExpansion be = bit_expansion(x, mode, budget);
        r.steps = be.steps;
        if (!be.terminated) {
                r.outcome = Outcome::Timeout;
                return r;
        }
        if (be.is_zero)
                return reject("zero");
        if (be.rejected)
                return reject("expansion");
        if (be.s < 0)
                return reject("sign");
        if (be.e >= 0)
                return reject("exponent");
        r.bits.assign(size_t(-be.e - 1), 0);
        r.bits.insert(r.bits.end(), be.bits.begin(), be.bits.end());
        if (eps > pow2(-int64_t(r.bits.size()) - 1))
                return reject("precision");
        std::vector<Rational> in(r.bits.begin(), r.bits.end());
        Trace tr = run(bit_machine, in, EvalMode::exact(), budget);
        r.steps += int64_t(tr.steps.size());
        r.outcome = outcome_of(tr);
        if (r.outcome == Outcome::Reject)
                r.rejected_at = "machine";
        return r;
}

/* ---- condition estimator ---- */

double log2_mu_prime(int64_t T, int64_t length, double c, double d)
{
        return std::pow(double(T) / c, 1.0 / d) / double(length) - 1.0;
}

/* ---- toy root problem ---- */

Machine toy_root_machine()
{
        return Machine::parse_string("1 input 2\n"
                                     "2 mul 2 2 3\n"
                                     "3 sub 0 1 4\n"
                                     "4 shr 5\n"
                                     "5 mul 2 4 6\n"
                                     "6 mul 0 4 7\n"
                                     "7 sub 0 1 8\n"
                                     "8 branch 9 13\n"
                                     "9 mul 2 4 10\n"
                                     "10 mul 0 4 11\n"
                                     "11 add 0 1 12\n"
                                     "12 branch 14 13\n"
                                     "13 load -1 14\n"
                                     "14 output\n");
}

bool toy_root_member(const Rational &x) { return sgn(x) >= 0; }

Condition toy_root_condition(const Rational &x)
{
        if (sgn(x) == 0)
                return std::nullopt;
        return std::max(Rational(1), Rational(1 / abs(x)));
}

/* ---- registry ---- */

const std::vector<Problem> &problem_registry()
{
        static const std::vector<Problem> reg = [] {
                std::vector<Problem> v;
                v.push_back({"integers", "x in Z, mu = 1 + |x|", 1,
                             [](const std::vector<Rational> &in) -> std::optional<bool> {
                                     return in.at(0).get_den() == 1;
                             },
                             [](const std::vector<Rational> &in) { return integers_condition(in.at(0)); },
                             integers_machine});
                v.push_back({"x-le-1", "x <= 1 on input (x, eps), mu = 1/|x - 1|", 2,
                             [](const std::vector<Rational> &in) -> std::optional<bool> { return in.at(0) <= 1; },
                             [](const std::vector<Rational> &in) { return x_le_1_condition(in.at(0)); },
                             x_le_1_machine});
                v.push_back({"cantor", "x outside the middle-thirds set on input (x, eps)", 2,
                             [](const std::vector<Rational> &in) -> std::optional<bool> {
                                     return !cantor_distance(in.at(0)).member;
                             },
                             [](const std::vector<Rational> &in) { return cantor_condition(in.at(0)); },
                             cantor_machine});
                v.push_back({"toy-root", "x >= 0 with a root y of y^2 = x as certificate, input (x, y, delta)", 3,
                             [](const std::vector<Rational> &in) -> std::optional<bool> {
                                     return toy_root_member(in.at(0));
                             },
                             [](const std::vector<Rational> &in) { return toy_root_condition(in.at(0)); },
                             toy_root_machine});
                v.push_back({"koch", "point (a, b) = a + b exp(i pi/3) in the Koch region", 2,
                             [](const std::vector<Rational> &in) -> std::optional<bool> {
                                     auto k = koch_membership({in.at(0), in.at(1)});
                                     if (k.outcome == Outcome::Timeout)
                                             return std::nullopt;
                                     return k.outcome == Outcome::Accept;
                             },
                             [](const std::vector<Rational> &in) -> Condition {
                                     Eis p{in.at(0), in.at(1)};
                                     double d = koch_boundary_distance(p.x(), p.y());
                                     if (d <= koch_polyline_error(7))
                                             return std::nullopt;
                                     return std::max(Rational(1), Rational(1 / d));
                             },
                             {}});
                v.push_back({"exp", "y > e^x, mu = max(|x|, 1)/|e^x - y|", 2,
                             [](const std::vector<Rational> &in) -> std::optional<bool> {
                                     int s = exp_sign_oracle(in.at(0), in.at(1));
                                     if (s == 0)
                                             return std::nullopt;
                                     return s > 0;
                             },
                             [](const std::vector<Rational> &in) -> Condition {
                                     auto [lo, hi] = exp_bounds(in.at(0), 200);
                                     Rational gap = std::min(abs(lo - in.at(1)), abs(hi - in.at(1)));
                                     if ((lo <= in.at(1) && in.at(1) <= hi) || sgn(gap) == 0)
                                             return std::nullopt;
                                     return std::max(Rational(1), Rational(abs(in.at(0)))) / gap;
                             },
                             {}});
                return v;
        }();
        return reg;
}

const Problem &find_problem(const std::string &name)
{
        for (const auto &p : problem_registry())
                if (p.name == name)
                        return p;
        throw PreconditionError("unknown problem '" + name + "'");
}

} // namespace bssfp
