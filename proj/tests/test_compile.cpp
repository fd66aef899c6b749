#include "doctest.h"

#include <random>

#include "bssfp/compile.hpp"
#include "support.hpp"

using namespace bssfp;
using support::q;

namespace {

Machine countdown()
{
        /* s_0 = y; while s_0 > 0: s_0 -= 1; then s_0 += 1 and halt */
        return Machine::parse_string("1 input 2\n"
                                     "2 copy 1 3\n"
                                     "3 branch 4 5\n"
                                     "4 sub 0 -1 3\n"
                                     "5 add 0 -1 6\n"
                                     "6 output\n");
}

std::vector<Rational> concat(std::vector<Rational> a, const std::vector<Rational> &b)
{
        a.insert(a.end(), b.begin(), b.end());
        return a;
}

int arith_nodes(const Machine &m)
{
        int n = 0;
        for (const auto &nd : m.nodes())
                n += nd.kind == NodeKind::Compute && nd.op != OpCode::Load && nd.op != OpCode::Copy;
        return n;
}

} // namespace

TEST_CASE("load-one machine accepts every input")
{
        Machine m = Machine::parse_string("1 input 2\n2 load 1 3\n3 output\n");
        std::mt19937_64 rng(3);
        for (Backend b : {Backend::SelectorTree, Backend::Lagrange}) {
                auto cc = compile(m, 2, {}, 2, b);
                for (int i = 0; i < 100; ++i) {
                        std::vector<Rational> in = {q(long(rng() % 41) - 20, long(rng() % 7) + 1), q(1, 16)};
                        CHECK(eval_circuit(cc.circuit, in, EvalMode::exact()).accepted);
                }
                CHECK_FALSE(eval_circuit(compile(m, 1, {}, 2, b).circuit, {Rational(1), q(1, 16)},
                                         EvalMode::exact())
                                    .accepted);
        }
}

TEST_CASE("countdown loop with T = 30")
{
        Machine m = countdown();
        for (Backend b : {Backend::SelectorTree, Backend::Lagrange}) {
                auto cc = compile(m, 30, {}, 2, b);
                for (long k = -2; k <= 16; ++k)
                        for (Rational y : {Rational(k), q(2 * k + 1, 2)}) {
                                std::vector<Rational> in = {y, q(1, 16)};
                                auto tr = run_timed_universal(m, in, 30, EvalMode::exact());
                                auto ev = eval_circuit(cc.circuit, in, EvalMode::exact());
                                REQUIRE(ev.ok);
                                CHECK(ev.accepted == tr.accepted);
                                if (tr.accepted)
                                        CHECK(ev.output() == tr.output());
                        }
        }
        /* 0.5 halts within 30 steps, 14 does not */
        auto cc = compile(m, 30, {}, 2);
        CHECK(eval_circuit(cc.circuit, {q(1, 2), q(1, 16)}, EvalMode::exact()).accepted);
        CHECK_FALSE(eval_circuit(cc.circuit, {Rational(14), q(1, 16)}, EvalMode::exact()).accepted);
}

TEST_CASE("node bits: three bits for five nodes")
{
        Machine m = Machine::parse_string("1 input 2\n2 load 1 3\n3 branch 4 5\n4 load -1 5\n5 output\n");
        auto cc = compile_selector_tree(m, 4, {}, 1);
        for (const auto &bits : cc.nu_nodes)
                CHECK(bits.size() == 3);
        CHECK(cc.nu_nodes.size() == 5);
        CHECK(cc.layer_map.size() == 4);
        auto lg = compile_lagrange(m, 4, {}, 1);
        CHECK(lg.nu_nodes[0].size() == 1);
}

TEST_CASE("random machines: exact and strong runs agree with the circuit")
{
        std::mt19937_64 rng(11);
        Rational eps = pow2(-10);
        int accepted = 0, total = 0;
        for (int it = 0; it < 200; ++it) {
                Machine m = support::random_machine(rng, 3 + int(rng() % 6));
                int64_t T = int64_t(rng() % 26);
                std::vector<Rational> x = {q(long(rng() % 9) - 4, long(rng() % 3) + 1)};
                std::vector<Rational> yd = {q(long(rng() % 9) - 4, long(rng() % 4) + 1), q(1, 8)};
                auto in = concat(x, yd);
                auto sel = compile_selector_tree(m, T, x, 2);
                auto lag = compile_lagrange(m, T, x, 2);
                for (const EvalMode &mode : {EvalMode::exact(), EvalMode::strong(eps)}) {
                        auto tr = run_timed_universal(m, in, T, mode);
                        for (const auto *cc : {&sel, &lag}) {
                                auto ev = eval_circuit(cc->circuit, yd, mode);
                                REQUIRE(ev.ok);
                                CHECK(ev.accepted == tr.accepted);
                                if (tr.accepted)
                                        CHECK(ev.output() == tr.output());
                                /* the decoded node path follows the trace */
                                for (const auto &s : tr.steps)
                                        if (s.t < T)
                                                CHECK(cc->nu_at(ev, s.t) == s.node);
                        }
                        accepted += tr.accepted;
                        ++total;
                }
        }
        MESSAGE("accepted " << accepted << " of " << total);
        CHECK(accepted > 0);
        CHECK(accepted < total);
}

TEST_CASE("weak traces map onto the circuit")
{
        std::mt19937_64 rng(17);
        Rational eps = pow2(-6);
        for (int it = 0; it < 150; ++it) {
                Machine m = support::random_machine(rng, 3 + int(rng() % 6));
                int64_t T = 1 + int64_t(rng() % 20);
                std::vector<Rational> x = {q(long(rng() % 9) - 4, 2)};
                std::vector<Rational> yd = {q(long(rng() % 9) - 4, 3), q(1, 8)};
                auto in = concat(x, yd);
                auto tr = run_timed_universal(m, in, T, EvalMode::weak(eps, ErrorSource::seeded_random(it)));
                for (Backend b : {Backend::SelectorTree, Backend::Lagrange}) {
                        auto cc = compile(m, T, x, 2, b);
                        auto script = circuit_script_from_trace(cc, tr);
                        auto ev = eval_circuit(cc.circuit, yd, EvalMode::weak(eps, ErrorSource::scripted(script)));
                        REQUIRE(ev.ok);
                        CHECK(ev.accepted == tr.accepted);
                        if (tr.accepted)
                                CHECK(ev.output() == tr.output());
                }
        }
}

TEST_CASE("weak circuit evaluations map back onto machine traces")
{
        std::mt19937_64 rng(23);
        Rational eps = pow2(-5);
        int checked = 0;
        for (int it = 0; it < 150; ++it) {
                Machine m = support::random_machine(rng, 3 + int(rng() % 6));
                int64_t T = 1 + int64_t(rng() % 20);
                std::vector<Rational> x = {q(long(rng() % 9) - 4, 2)};
                std::vector<Rational> yd = {q(long(rng() % 9) - 4, 3), q(1, 8)};
                auto in = concat(x, yd);
                auto cc = compile_selector_tree(m, T, x, 2);
                auto ev = eval_circuit(cc.circuit, yd, EvalMode::weak(eps, ErrorSource::seeded_random(100 + it)));
                REQUIRE(ev.ok);
                auto script = trace_script_from_circuit(cc, in, ev);
                auto tr = run_timed_universal(m, in, T, EvalMode::weak(eps, ErrorSource::scripted(script)));
                CHECK(ev.accepted == tr.accepted);
                if (tr.accepted)
                        CHECK(ev.output() == tr.output());
                CHECK(validate_weak_trace(m, tr, eps));
                ++checked;
        }
        CHECK(checked == 150);
}

TEST_CASE("discrete nodes carry only the two perturbed constants")
{
        std::mt19937_64 rng(29);
        Rational eps = pow2(-4);
        for (int it = 0; it < 100; ++it) {
                Machine m = support::random_machine(rng, 3 + int(rng() % 6));
                int64_t T = 1 + int64_t(rng() % 15);
                std::vector<Rational> yd = {q(long(rng() % 9) - 4, 3), q(1, 8)};
                auto cc = compile_selector_tree(m, T, {}, 2);
                const int zero = *cc.discrete_nodes.begin();
                const int one = *std::next(cc.discrete_nodes.begin());
                for (const EvalMode &mode : {EvalMode::exact(), EvalMode::strong(eps),
                                             EvalMode::weak(eps, ErrorSource::seeded_random(it))}) {
                        auto ev = eval_circuit(cc.circuit, yd, mode);
                        REQUIRE(ev.ok);
                        CHECK(ev.w[zero - 1] == 0);
                        CHECK(sgn(ev.w[one - 1]) > 0);
                        if (mode.semantics != Semantics::Weak)
                                CHECK(ev.w[one - 1] == 1);
                        for (int id : cc.discrete_nodes) {
                                const Rational &v = ev.w[id - 1];
                                CHECK((v == ev.w[zero - 1] || v == ev.w[one - 1]));
                        }
                }
        }
}

TEST_CASE("backends agree and acceptance is monotone in T")
{
        std::mt19937_64 rng(31);
        for (int it = 0; it < 60; ++it) {
                Machine m = support::random_machine(rng, 3 + int(rng() % 5));
                std::vector<Rational> yd = {q(long(rng() % 9) - 4, 2), q(1, 8)};
                bool prev = false;
                for (int64_t T = 0; T <= 12; ++T) {
                        bool a = eval_circuit(compile_selector_tree(m, T, {}, 2).circuit, yd, EvalMode::exact()).accepted;
                        bool b = eval_circuit(compile_lagrange(m, T, {}, 2).circuit, yd, EvalMode::exact()).accepted;
                        CHECK(a == b);
                        if (prev)
                                CHECK(a);
                        prev = a;
                }
        }
}

TEST_CASE("numeric operations: one per arithmetic node per step")
{
        std::mt19937_64 rng(37);
        for (int it = 0; it < 40; ++it) {
                Machine m = support::random_machine(rng, 3 + int(rng() % 6));
                int64_t T = int64_t(rng() % 12);
                for (Backend b : {Backend::SelectorTree, Backend::Lagrange}) {
                        auto cc = compile(m, T, {Rational(1)}, 2, b);
                        CHECK(count_numeric_ops(cc) == T * arith_nodes(m));
                }
        }
}

TEST_CASE("circuit size grows polynomially in T")
{
        Machine m = Machine::parse_string("1 input 2\n"
                                          "2 shl 3\n"
                                          "3 branch 4 5\n"
                                          "4 mul 0 1 2\n"
                                          "5 shr 6\n"
                                          "6 div 1 0 7\n"
                                          "7 output\n");
        for (Backend b : {Backend::SelectorTree, Backend::Lagrange}) {
                std::vector<std::pair<double, double>> pts;
                for (int64_t T : {8, 16, 32, 64}) {
                        auto cc = compile(m, T, {Rational(2)}, 2, b);
                        pts.emplace_back(double(T), double(cc.size_point.second));
                }
                double k = fit_exponent(pts);
                MESSAGE(std::string(backend_name(b)) << " exponent " << k);
                CHECK(k <= 3.0);
                CHECK(k >= 1.0);
        }
        CHECK(fit_exponent({{1, 3}, {2, 12}, {4, 48}}) == doctest::Approx(2.0));
}

TEST_CASE("layer map and preconditions")
{
        Machine m = countdown();
        auto cc = compile(m, 5, {}, 2);
        for (size_t t = 1; t < cc.layer_map.size(); ++t)
                CHECK(cc.layer_map[t].first == cc.layer_map[t - 1].second + 1);
        CHECK(cc.layer_map_str().find("layer 4") != std::string::npos);
        CHECK_THROWS_AS(compile(m, -1, {}, 2), PreconditionError);
        Machine orc = Machine::parse_string("1 input 2\n2 oracle 1 3\n3 output\n");
        CHECK_THROWS_AS(compile(orc, 3, {}, 1), PreconditionError);
}

TEST_CASE("discrete nodes are integers, unchanged by rounding")
{
        std::mt19937_64 rng(41);
        Rational eps = pow2(-10);
        int compared = 0;
        for (int it = 0; it < 120; ++it) {
                Machine m = support::random_machine(rng, 3 + int(rng() % 6));
                int64_t T = 1 + int64_t(rng() % 20);
                std::vector<Rational> x = {q(long(rng() % 9) - 4, 3)};
                std::vector<Rational> yd = {q(long(rng() % 9) - 4, 2), q(1, 8)};
                auto in = concat(x, yd);
                auto t0 = run_timed_universal(m, in, T, EvalMode::exact());
                auto t1 = run_timed_universal(m, in, T, EvalMode::strong(eps));
                bool same = t0.steps.size() == t1.steps.size();
                for (size_t i = 0; same && i < t0.steps.size(); ++i)
                        same = t0.steps[i].node == t1.steps[i].node;
                if (!same)
                        continue;
                for (Backend b : {Backend::SelectorTree, Backend::Lagrange}) {
                        auto cc = compile(m, T, x, 2, b);
                        auto e0 = eval_circuit(cc.circuit, yd, EvalMode::exact());
                        auto e1 = eval_circuit(cc.circuit, yd, EvalMode::strong(eps));
                        for (int id : cc.discrete_nodes) {
                                CHECK(e0.w[id - 1] == e1.w[id - 1]);
                                const Rational &v = e0.w[id - 1];
                                CHECK(v.get_den() == 1);
                        }
                        for (int id : cc.factor_nodes)
                                CHECK(cc.discrete_nodes.count(id) == 0);
                        if (b == Backend::SelectorTree)
                                CHECK(cc.factor_nodes.empty());
                        ++compared;
                }
        }
        CHECK(compared > 100);
}
