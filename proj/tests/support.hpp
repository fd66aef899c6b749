#pragma once

/* Shared helpers for tests and the acceptance binary. */

#include <algorithm>
#include <optional>
#include <random>
#include <vector>

#include "bssfp/circuit.hpp"
#include "bssfp/fpnum.hpp"
#include "bssfp/machine.hpp"

namespace support {

using bssfp::Float;
using bssfp::Integer;
using bssfp::Rational;

/* Every element of F_{2,t} with exponent in [elo, ehi], both signs, and zero. */
inline std::vector<Rational> enumerate_floats(int t, int elo, int ehi, bool with_negative = true)
{
        std::vector<Rational> out;
        out.push_back(0);
        for (int e = elo; e <= ehi; ++e)
                for (long m = 1L << t; m < (2L << t); ++m) {
                        Rational v = Rational(m) * bssfp::pow2(e);
                        out.push_back(v);
                        if (with_negative)
                                out.push_back(-v);
                }
        std::sort(out.begin(), out.end());
        return out;
}

/* Nearest element of a sorted list, ties to the even mantissa. */
inline Rational nearest_even(const std::vector<Rational> &sorted, const Rational &x, int t)
{
        auto it = std::lower_bound(sorted.begin(), sorted.end(), x);
        if (it != sorted.end() && *it == x)
                return x;
        const Rational &hi = *it;
        const Rational &lo = *(it - 1);
        Rational dl = x - lo, dh = hi - x;
        if (dl < dh)
                return lo;
        if (dh < dl)
                return hi;
        auto even = [t](const Rational &v) {
                if (sgn(v) == 0)
                        return true;
                Rational a = abs(v);
                int64_t e = bssfp::floor_log2(a) - t;
                Rational m = a / bssfp::pow2(e);
                return mpz_even_p(m.get_num().get_mpz_t()) != 0;
        };
        return even(lo) ? lo : hi;
}

/* Random element of F_{2,t} with exponent in [elo, ehi]. */
template <class Rng>
Float random_float(Rng &rng, int t, int elo, int ehi, bool allow_negative = true)
{
        Integer m = 1;
        for (int left = t; left > 0; left -= 32) {
                int k = std::min(left, 32);
                m = (m << k) + Integer((unsigned long)(rng() & ((1ULL << k) - 1)));
        }
        std::uniform_int_distribution<int> ed(elo, ehi);
        Rational v = Rational(m) * bssfp::pow2(ed(rng));
        if (allow_negative && (rng() & 1))
                v = -v;
        return Float::from_rational(v, t);
}

/* Random valid canonical-form machine with n_nodes nodes (>= 3). */
template <class Rng>
bssfp::Machine random_machine(Rng &rng, int n_nodes, int reach = 3)
{
        using namespace bssfp;
        std::vector<Node> nodes(n_nodes);
        nodes[0].kind = NodeKind::Input;
        nodes[n_nodes - 1].kind = NodeKind::Output;
        auto pick = [&](int lo, int hi) { return int(lo + int64_t(rng() % uint64_t(hi - lo + 1))); };
        for (int id = 1; id <= n_nodes; ++id) {
                Node &n = nodes[id - 1];
                if (id > 1 && id < n_nodes) {
                        int r = pick(0, 9);
                        if (r <= 5) {
                                n.kind = NodeKind::Compute;
                                n.op = OpCode(pick(0, 5));
                                n.j = pick(-reach, reach);
                                n.k = n.op == OpCode::Div ? 0 : pick(-reach, reach);
                                n.c = Rational(pick(-7, 7), pick(1, 4));
                                n.c.canonicalize();
                        } else if (r <= 7) {
                                n.kind = NodeKind::Branch;
                        } else {
                                n.kind = r == 8 ? NodeKind::ShiftLeft : NodeKind::ShiftRight;
                        }
                }
                if (n.kind == NodeKind::Output)
                        continue;
                n.beta_plus = pick(2, n_nodes);
                n.beta_minus = n.kind == NodeKind::Branch ? pick(2, n_nodes) : n.beta_plus;
        }
        Machine m(nodes);
        m.validate();
        return m;
}

inline Rational q(long a, long b)
{
        Rational r(a, b);
        r.canonicalize();
        return r;
}

/* Random circuit with n_in inputs, one positive constant, then random operations and selectors. */
template <class Rng>
bssfp::Circuit random_circuit(Rng &rng, int n_in, int n_nodes)
{
        using namespace bssfp;
        Circuit c;
        for (int i = 0; i < n_in; ++i)
                c.add_input();
        c.add_const(q(long(rng() % 7) + 1, long(rng() % 3) + 1));
        while (c.size() < n_nodes) {
                int s = c.size();
                int j = 1 + int(rng() % s), k = 1 + int(rng() % s), l = 1 + int(rng() % s);
                switch (rng() % 5) {
                case 0: c.add_op(Op::Add, j, k); break;
                case 1: c.add_op(Op::Sub, j, k); break;
                case 2: c.add_op(Op::Mul, j, k); break;
                case 3: c.add_op(Op::Div, j, k); break;
                default: c.add_sel(j, k, l); break;
                }
        }
        return c;
}

/* Uniform rational in [-r, r] on a 2^-20 lattice. */
template <class Rng>
Rational random_error(Rng &rng, const Rational &r)
{
        long k = long(rng() % (2u << 20)) - (1L << 20);
        Rational e = Rational(k) * bssfp::pow2(-20) * r;
        e.canonicalize();
        return e;
}

/*
 * Runs c on (x, delta) with relative errors drawn from [-rel, rel] and every
 * value rounded into F_eps afterwards. Empty on division by zero.
 */
template <class Rng>
std::optional<bssfp::WeakWitness> perturbed_witness(Rng &rng, const bssfp::Circuit &c,
                                                    const std::vector<Rational> &x, const Rational &delta,
                                                    const Rational &eps, const Rational &rel)
{
        using namespace bssfp;
        Precision p(eps);
        auto in = circuit_input(c, x, delta);
        WeakWitness wit;
        wit.x = x;
        wit.delta = delta;
        size_t next = 0;
        for (int id = 1; id <= c.size(); ++id) {
                const CNode &n = c.node(id);
                const auto val = [&](int j) { return wit.w[j - 1].value(); };
                Rational v;
                if (n.kind == CKind::Sel) {
                        wit.w.push_back(sgn(val(n.l)) > 0 ? wit.w[n.j - 1] : wit.w[n.k - 1]);
                        continue;
                }
                if (n.kind == CKind::In) {
                        v = in[next++];
                } else if (n.kind == CKind::Const) {
                        v = n.c;
                } else {
                        if (n.op == Op::Div && sgn(val(n.k)) == 0)
                                return std::nullopt;
                        v = exact_op(n.op, val(n.j), val(n.k));
                }
                wit.w.push_back(round(v * (1 + random_error(rng, rel)), p));
        }
        return wit;
}

} // namespace support
