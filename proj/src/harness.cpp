#include "bssfp/harness.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "bssfp/builder.hpp"

namespace bssfp {

/* ---- black boxes ---- */

const char *policy_name(BoxPolicy p)
{
        switch (p) {
        case BoxPolicy::Pessimistic: return "pessimistic";
        case BoxPolicy::Optimistic: return "optimistic";
        case BoxPolicy::Random: return "random";
        }
        return "?";
}

BoxPolicy parse_policy(const std::string &s)
{
        if (s == "pessimistic")
                return BoxPolicy::Pessimistic;
        if (s == "optimistic")
                return BoxPolicy::Optimistic;
        if (s == "random")
                return BoxPolicy::Random;
        throw PreconditionError("unknown box policy '" + s + "'");
}

int box_answer(const Probe &p, const Rational &S, BoxPolicy policy, std::mt19937_64 &rng)
{
        if (!p.member || !*p.member)
                return -1;
        if (p.size && Rational(*p.size) <= S)
                return 1;
        switch (policy) {
        case BoxPolicy::Pessimistic: return -1;
        case BoxPolicy::Optimistic: return 1;
        case BoxPolicy::Random: return (rng() & 1) ? 1 : -1;
        }
        return -1;
}

Integer box_charge(const Rational &S)
{
        Integer c;
        mpz_cdiv_q(c.get_mpz_t(), S.get_num_mpz_t(), S.get_den_mpz_t());
        return c < 1 ? Integer(1) : c;
}

BlackBox BlackBox::for_problem(const Problem &p, BoxPolicy policy, uint64_t seed)
{
        BlackBox b;
        b.name = p.name;
        b.policy = policy;
        b.seed = seed;
        b.probe = [p](const std::vector<Rational> &y) {
                Probe r;
                r.member = p.member(y);
                r.size = input_size(int64_t(y.size()), p.condition(y));
                return r;
        };
        return b;
}

BlackBox BlackBox::always_yes()
{
        BlackBox b;
        b.name = "always-yes";
        b.probe = [](const std::vector<Rational> &) { return Probe{true, 1.0}; };
        return b;
}

namespace {

int64_t clamp_i64(const Integer &v)
{
        static const Integer cap = Integer(INT64_MAX / 4);
        return v > cap ? INT64_MAX / 4 : v.get_si();
}

std::string join(const std::vector<Rational> &v)
{
        std::string s;
        for (size_t i = 0; i < v.size(); ++i)
                s += (i ? " " : "") + to_string(v[i]);
        return s;
}

using Answerer = std::function<std::pair<int, Integer>(const Rational &, const std::vector<Rational> &,
                                                       const EvalMode &, QueryRecord &)>;

ReductionRun run_recorded(const Machine &m, const std::vector<Rational> &input, const Answerer &ans,
                          const EvalMode &mode, int64_t budget)
{
        ReductionRun rr;
        RunOptions opts;
        opts.oracle = [&](const Rational &S, const std::vector<Rational> &y, const EvalMode &md) {
                QueryRecord q;
                q.S = S;
                q.y = y;
                auto [a, cost] = ans(S, y, md, q);
                q.answer = a;
                q.charged = cost;
                rr.queries.push_back(q);
                return std::pair<Rational, int64_t>(Rational(a), clamp_i64(cost));
        };
        rr.trace = run(m, input, mode, budget, opts);
        rr.machine_steps = Integer(int64_t(rr.trace.steps.size()) - int64_t(rr.queries.size()));
        rr.charged = rr.machine_steps;
        for (const auto &q : rr.queries)
                rr.charged += q.charged;
        if (!rr.trace.terminated)
                rr.outcome = Outcome::Timeout;
        else
                rr.outcome = rr.trace.accepted ? Outcome::Accept : Outcome::Reject;
        return rr;
}

} // namespace

std::string ReductionRun::log() const
{
        std::ostringstream os;
        os << "outcome " << outcome_name(outcome) << "\n";
        os << "machine_steps " << machine_steps << "\n";
        os << "charged " << charged << "\n";
        for (size_t i = 0; i < queries.size(); ++i) {
                const auto &q = queries[i];
                os << "query " << i << " S " << to_string(q.S) << " y [" << join(q.y) << "] size ";
                if (q.size)
                        os << *q.size;
                else
                        os << "inf";
                os << " answer " << q.answer << " charged " << q.charged << "\n";
        }
        return os.str();
}

ReductionRun run_with_oracle(const Machine &m, const std::vector<Rational> &input, const BlackBox &box,
                             const EvalMode &mode, int64_t budget)
{
        if (!box.probe)
                throw PreconditionError("black box without a backing problem");
        std::mt19937_64 rng(box.seed);
        Answerer ans = [&](const Rational &S, const std::vector<Rational> &y, const EvalMode &, QueryRecord &q) {
                Probe p = box.probe(y);
                q.what = box.name;
                q.size = p.size;
                return std::pair<int, Integer>(box_answer(p, S, box.policy, rng), box_charge(S));
        };
        return run_recorded(m, input, ans, mode, budget);
}

ReductionRun run_with_oracle_fn(const Machine &m, const std::vector<Rational> &input, const OracleFn &oracle,
                                const EvalMode &mode, int64_t budget)
{
        Answerer ans = [&](const Rational &S, const std::vector<Rational> &y, const EvalMode &md, QueryRecord &q) {
                auto [v, cost] = oracle(S, y, md);
                q.what = "oracle";
                return std::pair<int, Integer>(sgn(v) > 0 ? 1 : -1, Integer(std::max<int64_t>(cost, 1)));
        };
        return run_recorded(m, input, ans, mode, budget);
}

OracleFn machine_oracle(const Machine &decider, std::function<int64_t(const Rational &)> q, const EvalMode &inner)
{
        return [decider, q, inner](const Rational &S, const std::vector<Rational> &y, const EvalMode &) {
                Trace tr = run_timed_universal(decider, y, q(S), inner, RunOptions{false, {}});
                return std::pair<Rational, int64_t>(Rational(tr.accepted ? 1 : -1), std::max<int64_t>(tr.T, 1));
        };
}

Machine doubling_driver(int len)
{
        ProgramBuilder b(len, len + 2);
        const int S = len, ans = len + 1;
        auto loop = b.label(), acc = b.label(), dbl = b.label();
        b.load(S, 1);
        b.bind(loop);
        b.oracle(ans, S, len);
        b.branch_pos(ans, acc, dbl);
        b.bind(dbl);
        b.add(S, S, S);
        b.jump(loop);
        b.bind(acc);
        b.halt_with(1);
        return b.finish();
}

/* ---- sparse polynomial algebra ---- */

namespace {

using Key = std::vector<std::pair<int, int>>;

struct P {
        std::map<Key, Rational> t;

        P() = default;
        P(const Rational &c)
        {
                if (sgn(c))
                        t[{}] = c;
        }
        static P var(int v)
        {
                P p;
                p.t[{{v, 1}}] = 1;
                return p;
        }
        bool zero() const { return t.empty(); }
};

void add_into(P &a, const Key &k, const Rational &c)
{
        auto it = a.t.find(k);
        if (it == a.t.end()) {
                if (sgn(c))
                        a.t.emplace(k, c);
                return;
        }
        it->second += c;
        if (sgn(it->second) == 0)
                a.t.erase(it);
}

P operator+(P a, const P &b)
{
        for (const auto &[k, c] : b.t)
                add_into(a, k, c);
        return a;
}

P operator-(P a, const P &b)
{
        for (const auto &[k, c] : b.t)
                add_into(a, k, -c);
        return a;
}

Key merge(const Key &a, const Key &b)
{
        Key out;
        size_t i = 0, j = 0;
        while (i < a.size() || j < b.size()) {
                if (j == b.size() || (i < a.size() && a[i].first < b[j].first))
                        out.push_back(a[i++]);
                else if (i == a.size() || b[j].first < a[i].first)
                        out.push_back(b[j++]);
                else {
                        out.emplace_back(a[i].first, a[i].second + b[j].second);
                        ++i;
                        ++j;
                }
        }
        return out;
}

P operator*(const P &a, const P &b)
{
        P r;
        for (const auto &[ka, ca] : a.t)
                for (const auto &[kb, cb] : b.t)
                        add_into(r, merge(ka, kb), ca * cb);
        return r;
}

Polynomial to_poly(const P &p, Rel rel)
{
        Polynomial out;
        out.rel = rel;
        for (const auto &[k, c] : p.t)
                out.terms.push_back({c, k});
        return out;
}

int64_t bits(const Integer &z) { return int64_t(mpz_sizeinbase(z.get_mpz_t(), 2)); }

} // namespace

int64_t system_length(const PolySystem &f)
{
        int64_t len = 0;
        for (const auto &p : f.polys)
                for (const auto &m : p.terms)
                        len += 1 + bits(m.coef.get_num()) + bits(m.coef.get_den()) + int64_t(m.powers.size());
        return len;
}

/* ---- register equations ---- */

int RegisterSystem::var_s(int64_t t, int64_t i) const
{
        return int(n_guess + (t - 1) * (cells() + N) + (i - lo));
}

int RegisterSystem::var_b(int64_t t, int nu) const
{
        return int(n_guess + (t - 1) * (cells() + N) + cells() + (nu - 1));
}

namespace {

int64_t aux_per_step(const RegisterSystem &rs) { return (rs.branches ? 5 : 0) + (rs.divisions ? 1 : 0); }

int64_t aux_base(const RegisterSystem &rs) { return rs.n_guess + rs.T * (rs.cells() + rs.N); }

} // namespace

int RegisterSystem::var_sigma(int64_t t) const
{
        if (!branches)
                throw PreconditionError("no branch variables");
        return int(aux_base(*this) + t * aux_per_step(*this));
}

int RegisterSystem::var_u(int64_t t, int k) const
{
        return var_sigma(t) + 1 + k;
}

int RegisterSystem::var_zeta(int64_t t) const
{
        if (!divisions)
                throw PreconditionError("no division variables");
        return int(aux_base(*this) + t * aux_per_step(*this) + (branches ? 5 : 0));
}

RegisterSystem register_equations(const Machine &m, int64_t T, const std::vector<Rational> &x, int n_guess)
{
        if (T < 0 || n_guess < 0)
                throw PreconditionError("negative time bound or certificate length");
        m.validate();
        RegisterSystem rs;
        rs.T = T;
        rs.n_guess = n_guess;
        rs.N = m.size();
        const int N = rs.N;
        int64_t maxref = 0;
        for (const auto &nd : m.nodes()) {
                if (nd.kind == NodeKind::Oracle)
                        throw PreconditionError("register equations of a machine with a black box");
                if (nd.kind == NodeKind::Compute && nd.real)
                        throw PreconditionError("register equations need rational constants");
                if (nd.kind == NodeKind::Compute)
                        maxref = std::max({maxref, std::abs(nd.j), std::abs(nd.k)});
                rs.branches |= nd.kind == NodeKind::Branch;
                rs.divisions |= nd.kind == NodeKind::Compute && nd.op == OpCode::Div;
        }
        const int64_t n = int64_t(x.size()) + n_guess;
        const int64_t L = n + T + maxref + 1;
        rs.lo = -L;
        rs.hi = L;
        rs.phi.n = int(aux_base(rs) + T * aux_per_step(rs));

        auto S = [&](int64_t t, int64_t i) -> P {
                if (i < rs.lo || i > rs.hi)
                        return P();
                if (t > 0)
                        return P::var(rs.var_s(t, i));
                if (i < 0)
                        return i >= -n ? P(Rational(1)) : P();
                if (i == 0 || i > n)
                        return P();
                if (i <= int64_t(x.size()))
                        return P(x[i - 1]);
                return P::var(int(i - int64_t(x.size()) - 1));
        };
        auto B = [&](int64_t t, int nu) -> P {
                if (t == 0)
                        return P(Rational(nu == 1 ? 1 : 0));
                return P::var(rs.var_b(t, nu));
        };
        auto push = [&](const P &p, Rel rel) {
                if (!p.zero() || rel == Rel::Gt)
                        rs.phi.polys.push_back(to_poly(p, rel));
        };

        for (int64_t t = 0; t < T; ++t) {
                P sigma = rs.branches ? P::var(rs.var_sigma(t)) : P();
                /* registers */
                for (int64_t i = rs.lo; i <= rs.hi; ++i) {
                        P eq;
                        for (int nu = 1; nu <= N; ++nu) {
                                const Node &nd = m.node(nu);
                                P rhs = S(t, i);
                                P lhs = S(t + 1, i);
                                if (nd.kind == NodeKind::ShiftLeft)
                                        rhs = S(t, i + 1);
                                else if (nd.kind == NodeKind::ShiftRight)
                                        rhs = S(t, i - 1);
                                else if (nd.kind == NodeKind::Compute && i == 0) {
                                        switch (nd.op) {
                                        case OpCode::Load: rhs = P(nd.c); break;
                                        case OpCode::Copy: rhs = S(t, nd.j); break;
                                        case OpCode::Add: rhs = S(t, nd.j) + S(t, nd.k); break;
                                        case OpCode::Sub: rhs = S(t, nd.j) - S(t, nd.k); break;
                                        case OpCode::Mul: rhs = S(t, nd.j) * S(t, nd.k); break;
                                        case OpCode::Div:
                                                lhs = S(t + 1, 0) * S(t, 0);
                                                rhs = S(t, nd.j);
                                                break;
                                        }
                                }
                                eq = eq + B(t, nu) * (lhs - rhs);
                        }
                        push(eq, Rel::Eq);
                }
                /* control */
                for (int target = 1; target <= N; ++target) {
                        P eq = B(t + 1, target);
                        for (int nu = 1; nu <= N; ++nu) {
                                const Node &nd = m.node(nu);
                                if (nd.kind == NodeKind::Output) {
                                        if (nu == target)
                                                eq = eq - B(t, nu);
                                } else if (nd.kind == NodeKind::Branch && nd.beta_plus != nd.beta_minus) {
                                        if (nd.beta_plus == target)
                                                eq = eq - B(t, nu) * sigma;
                                        if (nd.beta_minus == target)
                                                eq = eq - B(t, nu) * (P(Rational(1)) - sigma);
                                } else if (nd.beta_plus == target) {
                                        eq = eq - B(t, nu);
                                }
                        }
                        push(eq, Rel::Eq);
                }
                if (rs.branches) {
                        P at;
                        for (int nu = 1; nu <= N; ++nu)
                                if (m.node(nu).kind == NodeKind::Branch)
                                        at = at + B(t, nu);
                        push(sigma * sigma - sigma, Rel::Eq);
                        /* at a branch with sigma = 1: s_0 > 0 */
                        push(at * sigma * S(t, 0) - at * sigma + P(Rational(1)), Rel::Gt);
                        /* at a branch with sigma = 0: -s_0 is a sum of four squares */
                        P sq = S(t, 0);
                        for (int k = 0; k < 4; ++k)
                                sq = sq + P::var(rs.var_u(t, k)) * P::var(rs.var_u(t, k));
                        push(at * (P(Rational(1)) - sigma) * sq, Rel::Eq);
                }
                if (rs.divisions) {
                        P at;
                        for (int nu = 1; nu <= N; ++nu) {
                                const Node &nd = m.node(nu);
                                if (nd.kind == NodeKind::Compute && nd.op == OpCode::Div)
                                        at = at + B(t, nu);
                        }
                        push(at * P::var(rs.var_zeta(t)) * S(t, 0) - at, Rel::Eq);
                }
        }
        push(B(T, N) - P(Rational(1)), Rel::Eq);
        push(S(T, 0), Rel::Gt);
        return rs;
}

std::optional<std::array<Rational, 4>> four_squares(const Rational &c)
{
        std::array<Rational, 4> out{0, 0, 0, 0};
        if (sgn(c) < 0)
                return std::nullopt;
        if (sgn(c) == 0)
                return out;
        const Integer den = c.get_den();
        const Integer n = c.get_num() * den;
        Integer x1 = sqrt(n);
        for (int i1 = 0; i1 < 64 && x1 >= 0; ++i1, --x1) {
                Integer r1 = n - x1 * x1;
                Integer x2 = sqrt(r1);
                for (int i2 = 0; i2 < 64 && x2 >= 0; ++i2, --x2) {
                        Integer r2 = r1 - x2 * x2;
                        Integer x3 = sqrt(r2);
                        for (int i3 = 0; i3 < 4096 && x3 >= 0 && 2 * x3 * x3 >= r2; ++i3, --x3) {
                                Integer r3 = r2 - x3 * x3;
                                if (mpz_perfect_square_p(r3.get_mpz_t())) {
                                        Integer x4 = sqrt(r3);
                                        out = {Rational(x1, den), Rational(x2, den), Rational(x3, den), Rational(x4, den)};
                                        for (auto &v : out)
                                                v.canonicalize();
                                        return out;
                                }
                        }
                }
        }
        return std::nullopt;
}

std::optional<std::vector<Rational>> register_witness(const RegisterSystem &rs, const Machine &m,
                                                      const std::vector<Rational> &x, const std::vector<Rational> &g)
{
        if (int(g.size()) != rs.n_guess)
                throw PreconditionError("certificate length mismatch");
        std::vector<Rational> in = x;
        in.insert(in.end(), g.begin(), g.end());
        std::vector<Rational> val(size_t(rs.phi.n), Rational(0));
        for (int k = 0; k < rs.n_guess; ++k)
                val[k] = g[k];
        for (int64_t t = 0; t <= rs.T; ++t) {
                Trace tr = run(m, in, EvalMode::exact(), t, RunOptions{false, {}});
                const MachineState &st = tr.final_state;
                if (t == rs.T && !tr.accepted)
                        return std::nullopt;
                if (t > 0) {
                        for (int64_t i = rs.lo; i <= rs.hi; ++i)
                                val[rs.var_s(t, i)] = st.get(i);
                        val[rs.var_b(t, st.node)] = 1;
                }
                if (t == rs.T)
                        break;
                const Node &nd = m.node(st.node);
                const Rational &s0 = st.get(0);
                if (nd.kind == NodeKind::Branch) {
                        if (sgn(s0) > 0) {
                                val[rs.var_sigma(t)] = 1;
                        } else {
                                auto sq = four_squares(-s0);
                                if (!sq)
                                        return std::nullopt;
                                for (int k = 0; k < 4; ++k)
                                        val[rs.var_u(t, k)] = (*sq)[k];
                        }
                }
                if (nd.kind == NodeKind::Compute && nd.op == OpCode::Div && sgn(s0) != 0)
                        val[rs.var_zeta(t)] = 1 / s0;
        }
        return val;
}

std::vector<Rational> rational_grid(int h)
{
        std::vector<Rational> out;
        for (long qd = 1; qd <= h; ++qd)
                for (long p = 1; p <= h; ++p)
                        if (std::gcd(p, qd) == 1)
                                out.push_back(Rational(p, qd));
        std::stable_sort(out.begin(), out.end(), [](const Rational &a, const Rational &b) {
                auto ha = std::max(a.get_num(), a.get_den()), hb = std::max(b.get_num(), b.get_den());
                if (ha != hb)
                        return ha < hb;
                return a.get_den() < b.get_den();
        });
        std::vector<Rational> grid = {0};
        for (const auto &v : out) {
                grid.push_back(v);
                grid.push_back(-v);
        }
        return grid;
}

/* ---- witness search ---- */

namespace {

class Solver {
public:
        Solver(const PolySystem &f, const WitnessSearch &s)
                : f_(f), s_(s), val_(size_t(f.n)), known_(size_t(f.n), false), occ_(size_t(f.n))
        {
                for (size_t p = 0; p < f.polys.size(); ++p) {
                        std::set<int> vs;
                        for (const auto &m : f.polys[p].terms)
                                for (const auto &[v, e] : m.powers)
                                        vs.insert(v);
                        for (int v : vs)
                                occ_.at(size_t(v)).push_back(int(p));
                }
        }

        std::optional<std::vector<Rational>> solve()
        {
                std::deque<int> q;
                for (size_t p = 0; p < f_.polys.size(); ++p)
                        q.push_back(int(p));
                if (!propagate(q) || !dfs())
                        return std::nullopt;
                return val_;
        }

private:
        struct Red {
                Rational c0;
                std::map<Key, Rational> u;
        };

        Red reduce(int p) const
        {
                Red r;
                for (const auto &m : f_.polys[size_t(p)].terms) {
                        Rational c = m.coef;
                        Key k;
                        for (const auto &[v, e] : m.powers) {
                                if (known_[size_t(v)]) {
                                        const Rational &x = val_[size_t(v)];
                                        if (sgn(x) == 0) {
                                                c = 0;
                                                break;
                                        }
                                        for (int i = 0; i < e; ++i)
                                                c *= x;
                                } else {
                                        k.emplace_back(v, e);
                                }
                        }
                        if (sgn(c) == 0)
                                continue;
                        if (k.empty()) {
                                r.c0 += c;
                        } else {
                                auto &d = r.u[k];
                                d += c;
                                if (sgn(d) == 0)
                                        r.u.erase(k);
                        }
                }
                return r;
        }

        /* Roots of a univariate quadratic or linear residue; empty when irrational or none. */
        static bool univariate(const Red &r, int &v, Rational &a, Rational &b)
        {
                v = -1;
                a = 0;
                b = 0;
                for (const auto &[k, c] : r.u) {
                        if (k.size() != 1 || k[0].second > 2 || (v >= 0 && k[0].first != v))
                                return false;
                        v = k[0].first;
                        (k[0].second == 2 ? a : b) = c;
                }
                return v >= 0;
        }

        static std::vector<Rational> roots(const Rational &a, const Rational &b, const Rational &c)
        {
                if (sgn(a) == 0)
                        return {-c / b};
                Rational disc = b * b - 4 * a * c;
                if (sgn(disc) < 0)
                        return {};
                if (!mpz_perfect_square_p(disc.get_num_mpz_t()) || !mpz_perfect_square_p(disc.get_den_mpz_t()))
                        return {};
                Rational d(Integer(sqrt(disc.get_num())), Integer(sqrt(disc.get_den())));
                d.canonicalize();
                Rational r1 = (-b + d) / (2 * a), r2 = (-b - d) / (2 * a);
                if (r1 == r2)
                        return {r1};
                return r1 > r2 ? std::vector<Rational>{r1, r2} : std::vector<Rational>{r2, r1};
        }

        void assign(int v, const Rational &x, std::deque<int> &q)
        {
                val_[size_t(v)] = x;
                known_[size_t(v)] = true;
                trail_.push_back(v);
                for (int p : occ_[size_t(v)])
                        q.push_back(p);
        }

        void undo(size_t mark)
        {
                while (trail_.size() > mark) {
                        known_[size_t(trail_.back())] = false;
                        trail_.pop_back();
                }
        }

        bool propagate(std::deque<int> &q)
        {
                while (!q.empty()) {
                        int p = q.front();
                        q.pop_front();
                        const Polynomial &poly = f_.polys[size_t(p)];
                        Red r = reduce(p);
                        if (r.u.empty()) {
                                if (poly.rel == Rel::Eq ? sgn(r.c0) != 0 : sgn(r.c0) <= 0)
                                        return false;
                                continue;
                        }
                        if (poly.rel != Rel::Eq)
                                continue;
                        int v;
                        Rational a, b;
                        if (univariate(r, v, a, b)) {
                                auto rt = roots(a, b, r.c0);
                                if (rt.empty())
                                        return false;
                                if (rt.size() == 1)
                                        assign(v, rt[0], q);
                                else
                                        pending_.insert(p);
                                continue;
                        }
                        /* alpha (u_1^2 + ... + u_k^2) + c0 = 0 */
                        Rational alpha;
                        bool sos = r.u.size() >= 4;
                        std::vector<int> us;
                        for (const auto &[k, c] : r.u) {
                                if (!sos)
                                        break;
                                if (k.size() != 1 || k[0].second != 2 || (sgn(alpha) && c != alpha))
                                        sos = false;
                                alpha = c;
                                us.push_back(k[0].first);
                        }
                        if (sos) {
                                auto sq = four_squares(-r.c0 / alpha);
                                if (sgn(-r.c0 / alpha) < 0)
                                        return false;
                                if (!sq)
                                        continue;
                                for (size_t i = 0; i < us.size(); ++i)
                                        assign(us[i], i < 4 ? (*sq)[i] : Rational(0), q);
                        }
                }
                return true;
        }

        /* A pending variable matters when another residue still depends on it. */
        bool relevant(int v, int p) const
        {
                for (int o : occ_[size_t(v)]) {
                        if (o == p)
                                continue;
                        Red r = reduce(o);
                        for (const auto &[k, c] : r.u)
                                for (const auto &pe : k)
                                        if (pe.first == v)
                                                return true;
                }
                return false;
        }

        bool branch(int v, const std::vector<Rational> &choices)
        {
                for (const auto &x : choices) {
                        size_t mark = trail_.size();
                        std::deque<int> q;
                        assign(v, x, q);
                        if (propagate(q) && dfs())
                                return true;
                        undo(mark);
                        if (gave_up_)
                                return false;
                }
                return false;
        }

        bool dfs()
        {
                if (++nodes_ > s_.max_nodes) {
                        gave_up_ = true;
                        return false;
                }
                for (int v = 0; v < std::min(s_.grid_vars, f_.n); ++v)
                        if (!known_[size_t(v)])
                                return branch(v, s_.grid);
                const size_t entry = trail_.size();
                while (true) {
                        bool progressed = false;
                        for (auto it = pending_.begin(); it != pending_.end(); ++it) {
                                int p = *it;
                                Red r = reduce(p);
                                int v;
                                Rational a, b;
                                if (r.u.empty() || !univariate(r, v, a, b))
                                        continue;
                                auto rt = roots(a, b, r.c0);
                                if (rt.empty()) {
                                        undo(entry);
                                        return false;
                                }
                                if (rt.size() == 2 && relevant(v, p)) {
                                        if (branch(v, rt))
                                                return true;
                                        undo(entry);
                                        return false;
                                }
                                std::deque<int> q;
                                assign(v, rt[0], q);
                                if (!propagate(q)) {
                                        undo(entry);
                                        return false;
                                }
                                progressed = true;
                                break;
                        }
                        if (progressed)
                                continue;
                        int free = -1;
                        for (int v = 0; v < f_.n && free < 0; ++v)
                                if (!known_[size_t(v)])
                                        free = v;
                        if (free < 0)
                                break;
                        std::deque<int> q;
                        assign(free, 0, q);
                        if (!propagate(q)) {
                                undo(entry);
                                return false;
                        }
                }
                if (check_safeas_witness(f_, val_))
                        return true;
                undo(entry);
                return false;
        }

        const PolySystem &f_;
        const WitnessSearch &s_;
        std::vector<Rational> val_;
        std::vector<bool> known_;
        std::vector<std::vector<int>> occ_;
        std::vector<int> trail_;
        std::set<int> pending_;
        int64_t nodes_ = 0;
        bool gave_up_ = false;
};

} // namespace

std::optional<std::vector<Rational>> search_safeas_witness(const PolySystem &f, const WitnessSearch &s)
{
        Solver solver(f, s);
        auto w = solver.solve();
        if (w && !check_safeas_witness(f, *w))
                return std::nullopt;
        return w;
}

PhiConstants measure_phi_constants(const Machine &m, const std::vector<Rational> &x, int n_guess,
                                   const std::vector<int64_t> &Ts)
{
        PhiConstants pc;
        pc.Ts = Ts;
        for (int64_t T : Ts) {
                if (T < 1)
                        throw PreconditionError("constants are measured for T >= 1");
                auto rs = register_equations(m, T, x, n_guess);
                int eq = rs.phi.equations(), vars = rs.phi.n;
                pc.equations.push_back(eq);
                pc.variables.push_back(vars);
                pc.degree = std::max(pc.degree, rs.phi.degree());
                double T2 = double(T) * double(T);
                pc.c = std::max({pc.c, double(eq) / T2, std::max(0.0, double(vars - 2 * T)) / T2, double(rs.phi.degree())});
        }
        return pc;
}

int safeas_exponent(const Machine &m, const std::vector<Rational> &x, int n_guess, int64_t first, int64_t T_max)
{
        if (first < 2)
                throw PreconditionError("exponent calibration starts at T >= 2");
        int r = 1;
        for (int64_t T = first; T <= T_max; T *= 2) {
                Integer len = system_length(register_equations(m, T, x, n_guess).phi);
                Integer p;
                mpz_ui_pow_ui(p.get_mpz_t(), (unsigned long)T, (unsigned long)r);
                while (p < len) {
                        ++r;
                        p *= T;
                }
        }
        return r;
}

std::string SafeasRun::log() const
{
        std::ostringstream os;
        os << "outcome " << outcome_name(outcome) << "\nr " << r << "\ncharged " << charged << "\n";
        for (const auto &q : queries)
                os << "query T " << q.T << " S " << to_string(q.S) << " length " << q.length << " equations "
                   << q.equations << " variables " << q.variables << " degree " << q.degree << " witness "
                   << (q.witness_found ? "yes" : "no") << " answer " << q.answer << "\n";
        return os.str();
}

SafeasRun reduce_to_safeas(const std::vector<Rational> &x, const Machine &m, int n_guess, const Integer &budget,
                           const SafeasOptions &opt)
{
        SafeasRun out;
        int64_t T = std::max<int64_t>(1, int64_t(x.size()));
        out.r = opt.r > 0 ? opt.r : safeas_exponent(m, x, n_guess, 2 * T, std::max(opt.calibrate_to, 2 * T));
        std::mt19937_64 rng(opt.seed);
        while (out.charged < budget) {
                T *= 2;
                out.T = T;
                auto rs = register_equations(m, T, x, n_guess);
                SafeasQuery q;
                q.T = T;
                Integer Sz;
                mpz_ui_pow_ui(Sz.get_mpz_t(), (unsigned long)T, (unsigned long)out.r);
                q.S = Rational(Sz);
                q.length = system_length(rs.phi);
                q.equations = rs.phi.equations();
                q.variables = rs.phi.n;
                q.degree = rs.phi.degree();
                out.charged += q.length;
                Probe p;
                p.size = double(q.length);
                std::optional<std::vector<Rational>> w;
                if (Rational(q.length) <= q.S || opt.policy != BoxPolicy::Pessimistic) {
                        WitnessSearch s = opt.search;
                        s.grid_vars = n_guess;
                        w = search_safeas_witness(rs.phi, s);
                }
                if (w)
                        p.member = true;
                q.witness_found = w.has_value();
                q.answer = box_answer(p, q.S, opt.policy, rng);
                out.charged += box_charge(q.S);
                out.queries.push_back(q);
                if (q.answer > 0) {
                        out.outcome = Outcome::Accept;
                        if (w)
                                out.witness = *w;
                        return out;
                }
        }
        out.outcome = Outcome::Timeout;
        return out;
}

/* ---- circuit pseudo-feasibility ---- */

CpfProbe cpf_probe(const Circuit &c, const CpfSearch &s)
{
        CpfProbe out;
        out.length = c.length();
        const int ny = c.inputs() - 1;
        if (ny < 0)
                throw PreconditionError("pseudo-feasibility circuits read delta last");
        if (ny > 2)
                throw PreconditionError("grid search limited to two free inputs");
        std::vector<std::vector<Rational>> ys;
        if (ny == 0)
                ys.push_back({});
        for (const auto &a : s.grid) {
                if (ny == 1)
                        ys.push_back({a});
                else if (ny == 2)
                        for (const auto &b : s.grid)
                                ys.push_back({a, b});
        }
        for (int t : s.ladder) {
                if (t < 5)
                        continue;
                const Rational eps = pow2(-t), delta = 2 * eps;
                const Rational eps_v = pow2(-t - 6);
                for (const auto &y : ys) {
                        auto ev = eval_circuit(c, circuit_input(c, y, delta), EvalMode::strong(eps));
                        if (!ev.ok || !ev.accepted)
                                continue;
                        WeakWitness wit = witness_from_eval(y, delta, ev);
                        if (!check_weak_witness(c, wit, delta / 2))
                                continue;
                        if (!verify(c, wit, eps_v, EvalMode::strong(eps_v)).accepted)
                                continue;
                        out.found = true;
                        out.rho = eps;
                        out.y = y;
                        out.witness = wit;
                        out.size = double(out.length) * (1.0 + double(t));
                        return out;
                }
        }
        return out;
}

Rational LengthFit::operator()(int64_t T) const
{
        double v = std::ceil(alpha * std::pow(double(T), double(k)));
        Rational r(v);
        return r;
}

LengthFit fit_circuit_length(const Machine &m, const std::vector<Rational> &x, int n_free,
                             const std::vector<int64_t> &Ts, Backend b)
{
        LengthFit fit;
        std::vector<std::pair<double, double>> pts;
        for (int64_t T : Ts) {
                int64_t len = compile(m, T, x, n_free, b).circuit.length();
                fit.points.emplace_back(T, len);
                pts.emplace_back(double(T), double(len));
        }
        fit.k = pts.size() >= 2 ? std::max(1, int(std::ceil(fit_exponent(pts) - 1e-9))) : 1;
        for (const auto &[T, len] : fit.points)
                fit.alpha = std::max(fit.alpha, double(len) / std::pow(double(T), double(fit.k)));
        return fit;
}

std::string CpfRun::log() const
{
        std::ostringstream os;
        os << "outcome " << outcome_name(outcome) << "\nr(T) " << r.alpha << " T^" << r.k << "\ncharged " << charged
           << "\n";
        for (const auto &q : queries) {
                os << "query T " << q.T << " S " << to_string(q.S) << " tau " << q.tau << " length " << q.length
                   << " rho ";
                if (q.rho)
                        os << to_string(*q.rho);
                else
                        os << "none";
                os << " size ";
                if (q.size)
                        os << *q.size;
                else
                        os << "inf";
                os << " answer " << q.answer << "\n";
        }
        return os.str();
}

CpfRun reduce_to_circ_pseudo_feas(const std::vector<Rational> &x, const Machine &m, const Rational &delta,
                                  const Integer &budget, const CpfOptions &opt)
{
        if (!(sgn(delta) > 0 && delta < Rational(1, 4)))
                throw PreconditionError("delta must lie in (0, 1/4)");
        CpfRun out;
        int64_t T = std::max<int64_t>(1, int64_t(x.size()));
        std::vector<int64_t> Ts;
        for (int64_t t = 2 * T; t <= std::max(opt.calibrate_to, 2 * T); t *= 2)
                Ts.push_back(t);
        out.r = fit_circuit_length(m, x, opt.n_free, Ts, opt.backend);
        std::mt19937_64 rng(opt.seed);
        while (out.charged < budget) {
                T *= 2;
                out.T = T;
                auto cc = compile(m, T, x, opt.n_free, opt.backend);
                CpfQuery q;
                q.T = T;
                q.S = 1 + (T + 2) * out.r(T);
                q.tau = cc.circuit.size();
                q.length = cc.circuit.length();
                out.charged += q.tau;
                auto pr = cpf_probe(cc.circuit, opt.search);
                Probe p;
                if (pr.found) {
                        p.member = true;
                        p.size = pr.size;
                        q.rho = pr.rho;
                        q.size = pr.size;
                }
                q.answer = box_answer(p, q.S, opt.policy, rng);
                out.charged += box_charge(q.S);
                out.queries.push_back(q);
                if (q.answer > 0) {
                        out.outcome = Outcome::Accept;
                        if (pr.found)
                                out.witness = pr.witness;
                        return out;
                }
        }
        out.outcome = Outcome::Timeout;
        return out;
}

} // namespace bssfp
