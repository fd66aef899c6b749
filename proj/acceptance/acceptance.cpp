/*
 * Acceptance run: one PASS/FAIL line per criterion, details underneath.
 * Exit status is the number of failed criteria.
 */
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <mpfr.h>
#include <random>
#include <sstream>

#include "bssfp/compile.hpp"
#include "bssfp/harness.hpp"
#include "bssfp/props.hpp"
#include "bssfp/verifier.hpp"

#include "../tests/support.hpp"

using namespace bssfp;
using support::q;

namespace {

struct Verdict {
        bool pass = true;
        std::ostringstream detail;

        void require(bool ok, const std::string &what)
        {
                if (!ok) {
                        pass = false;
                        detail << "  violated: " << what << "\n";
                }
        }
};

double seconds_since(std::chrono::steady_clock::time_point t0)
{
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void absorb(Verdict &v, const std::string &label, const std::vector<PropResult> &rs)
{
        int64_t checks = 0, failures = 0;
        for (const auto &r : rs) {
                checks += r.checks;
                failures += r.failures;
                if (!r.ok())
                        v.require(false, label + " " + r.name + ": " + std::to_string(r.failures) + " of " +
                                                 std::to_string(r.checks) + ", first " + r.first_failure);
        }
        v.detail << "  " << label << ": " << checks << " checks, " << failures << " failures\n";
}

/* ---- 1: floating-point laws ---- */

void floating_point_laws(Verdict &v)
{
        auto t0 = std::chrono::steady_clock::now();
        for (int t = 1; t <= 4; ++t)
                absorb(v, "exhaustive t=" + std::to_string(t) + " e in [-6,6]", props_fpnum(t, -6, 6));
        for (int t : {10, 53})
                absorb(v, "random t=" + std::to_string(t), props_fpnum_random(t, 100000, uint64_t(t)));
        double s = seconds_since(t0);
        v.detail << "  runtime " << s << " s\n";
        v.require(s < 60, "runtime under 60 s");
}

/* ---- 2: Fast2Sum and sign-compare ---- */

void fast_two_sum_exactness(Verdict &v)
{
        for (int t = 1; t <= 4; ++t)
                absorb(v, "exhaustive t=" + std::to_string(t) + " pairs e in [-6,6], triples e in [-3,3]",
                       props_fast2sum(t, -6, 6, -3, 3));
        absorb(v, "random t=53", props_fast2sum_random(53, 100000, 53));
}

/* ---- 3: verifier lemmas ---- */

void lemma_suite(Verdict &v)
{
        LemmaOptions o;
        o.eps3 = 0.003970515;
        o.eps3_tol = 1e-9;
        o.grid = 10000;
        o.pairs = 1000;
        o.seed = 3;
        auto rs = props_lemmas(o);
        absorb(v, "lemmas", rs);
        auto b = check_lemma_epsilon_bounds(0, 0);
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.12f", to_double(b.eps3));
        v.detail << "  eps_3 from the iteration: " << buf << "\n";
}

/* ---- 4: verifier completeness and soundness ---- */

void verifier_properties(Verdict &v)
{
        std::mt19937_64 rng(404);
        int generated = 0, accepted = 0;
        for (int iter = 0; generated < 1000 && iter < 100000; ++iter) {
                Circuit c = support::random_circuit(rng, 2, 3 + int(rng() % 9));
                Rational delta = q(long(rng() % 120) + 1, 1000);
                int t = 1 + int(floor_log2(Rational(32) / delta)) + int(rng() % 6);
                Rational eps = pow2(-t);
                std::vector<Rational> x = {q(long(rng() % 41) - 20, long(rng() % 6) + 1)};
                auto wit = support::perturbed_witness(rng, c, x, delta, eps, delta / 4);
                if (!wit || sgn(wit->w.back().value()) <= 0 || !check_weak_witness(c, *wit, delta / 2))
                        continue;
                ++generated;
                accepted += verify(c, *wit, eps, EvalMode::strong(eps)).accepted;
        }
        v.detail << "  strong: " << accepted << " of " << generated << " generated pairs accepted\n";
        v.require(generated >= 1000, "at least 1000 generated pairs");
        v.require(accepted == generated, "every generated pair accepted under strong eps-mode");

        int trials = 0, weak_acc = 0, bad = 0;
        for (int iter = 0; trials < 1000; ++iter) {
                Circuit c = support::random_circuit(rng, 2, 3 + int(rng() % 7));
                Rational delta = q(long(rng() % 150) + 1, 1000);
                Rational eps = delta / 32 * q(long(rng() % 5) + 8, 10);
                std::vector<Rational> x = {q(long(rng() % 21) - 10, long(rng() % 4) + 1)};
                Rational rel = delta * q(long(rng() % 9) + 4, 8);
                auto wit = support::perturbed_witness(rng, c, x, delta, pow2(-40), rel);
                if (!wit)
                        continue;
                ErrorSource src = iter % 4 == 0   ? ErrorSource::adversarial(iter, +1)
                                  : iter % 4 == 1 ? ErrorSource::adversarial(iter, -1)
                                  : iter % 4 == 2 ? ErrorSource::adversarial(iter)
                                                  : ErrorSource::seeded_random(iter);
                ++trials;
                auto r = verify(c, *wit, eps, EvalMode::weak(eps, src));
                if (!r.accepted)
                        continue;
                ++weak_acc;
                auto back = reconstruct_witness(r, x, delta);
                if (!(delta < Rational(1, 7)) || !check_weak_witness(c, back))
                        ++bad;
        }
        v.detail << "  weak: " << weak_acc << " acceptances in " << trials << " trials, " << bad
                 << " without a valid weak witness\n";
        v.require(bad == 0, "every weak acceptance replays to a weak witness with delta < 1/7");
}

/* ---- 5: compiler equivalence ---- */

void compiler_equivalence(Verdict &v)
{
        std::mt19937_64 rng(505);
        const Rational eps = pow2(-10);
        int runs = 0, mismatched = 0, scripted = 0, scripted_bad = 0, discrete_bad = 0;
        for (int it = 0; it < 200; ++it) {
                Machine m = support::random_machine(rng, 3 + int(rng() % 6));
                int64_t T = int64_t(rng() % 26);
                std::vector<Rational> x = {q(long(rng() % 9) - 4, long(rng() % 3) + 1)};
                std::vector<Rational> yd = {q(long(rng() % 9) - 4, long(rng() % 4) + 1), q(1, 8)};
                std::vector<Rational> in = x;
                in.insert(in.end(), yd.begin(), yd.end());
                for (Backend b : {Backend::SelectorTree, Backend::Lagrange}) {
                        auto cc = compile(m, T, x, 2, b);
                        std::vector<CircuitEval> evs;
                        std::vector<Trace> trs;
                        for (const EvalMode &mode : {EvalMode::exact(), EvalMode::strong(eps)}) {
                                auto tr = run_timed_universal(m, in, T, mode);
                                auto ev = eval_circuit(cc.circuit, yd, mode);
                                ++runs;
                                if (!ev.ok || ev.accepted != tr.accepted || (tr.accepted && ev.output() != tr.output()))
                                        ++mismatched;
                                /* shared scripted errors: the strong run's errors replayed on the circuit */
                                auto script = circuit_script_from_trace(cc, tr);
                                auto sev = eval_circuit(cc.circuit, yd, EvalMode::weak(eps, ErrorSource::scripted(script)));
                                ++scripted;
                                if (!sev.ok || sev.accepted != tr.accepted)
                                        ++scripted_bad;
                                evs.push_back(ev);
                                trs.push_back(tr);
                        }
                        /* same node path: same discrete values */
                        bool same_path = trs[0].steps.size() == trs[1].steps.size();
                        for (size_t i = 0; same_path && i < trs[0].steps.size(); ++i)
                                same_path = trs[0].steps[i].node == trs[1].steps[i].node;
                        if (same_path && evs[0].ok && evs[1].ok)
                                for (int id : cc.discrete_nodes)
                                        if (evs[0].w[id - 1] != evs[1].w[id - 1])
                                                ++discrete_bad;
                }
        }
        v.detail << "  " << runs << " machine/circuit runs, " << mismatched << " disagreements; " << scripted
                 << " scripted replays, " << scripted_bad << " disagreements; " << discrete_bad
                 << " discrete values that changed with the mode\n";
        v.require(mismatched == 0, "circuit acceptance equals machine acceptance");
        v.require(scripted_bad == 0, "scripted replays agree");
        v.require(discrete_bad == 0, "discrete-node values are mode-invariant");

        Machine m = Machine::parse_string("1 input 2\n2 shl 3\n3 branch 4 5\n4 mul 0 1 2\n5 shr 6\n6 div 1 0 7\n7 output\n");
        for (Backend b : {Backend::SelectorTree, Backend::Lagrange}) {
                std::vector<std::pair<double, double>> pts;
                for (int64_t T : {8, 16, 32, 64})
                        pts.emplace_back(double(T), double(compile(m, T, {Rational(2)}, 2, b).size_point.second));
                double k = fit_exponent(pts);
                v.detail << "  tau(T) exponent, " << backend_name(b) << ": " << k << "\n";
                v.require(k <= 3.0, std::string("tau(T) of degree at most 3 for ") + backend_name(b));
        }
}

/* ---- 6: Cantor decider ---- */

void cantor_decider(Verdict &v)
{
        int64_t strong_runs = 0, strong_bad = 0, weak_runs = 0, weak_timeout = 0, weak_reject = 0, weak_late = 0;
        std::string first_timeout;
        for (long den = 1; den <= 729; ++den)
                for (long num = 0; num <= den; ++num) {
                        Rational x(num, den);
                        x.canonicalize();
                        if (x.get_den() != den)
                                continue;
                        auto mu = cantor_condition(x);
                        if (!mu)
                                continue;
                        /* eps the largest power of two below 1/(6 mu) */
                        int t = 1;
                        while (pow2(-t) * 6 * *mu >= 1)
                                ++t;
                        Rational eps = pow2(-t);
                        /* smallest k with mu < 2 3^(k+1) */
                        int k = 0;
                        for (Rational bound = 6; *mu >= bound; bound *= 3)
                                ++k;
                        auto s = cantor_decide(x, eps, EvalMode::strong(eps), k + 3);
                        ++strong_runs;
                        if (s.outcome != Outcome::Accept || s.iterations > k)
                                ++strong_bad;
                        auto w = cantor_decide(x, eps, EvalMode::weak(eps, ErrorSource::seeded_random(uint64_t(num * 1000 + den))),
                                               k + 3);
                        ++weak_runs;
                        if (w.outcome == Outcome::Timeout) {
                                if (!weak_timeout++)
                                        first_timeout = x.get_str() + " eps " + eps.get_str() + " k " + std::to_string(k);
                        }
                        else if (w.outcome == Outcome::Reject)
                                ++weak_reject;
                        else if (w.iterations > k)
                                ++weak_late;
                }
        v.detail << "  strong: " << strong_bad << " failures in " << strong_runs << " non-members\n";
        v.detail << "  weak (seeded random): " << weak_timeout << " timeouts, " << weak_reject << " rejections, "
                 << weak_late << " late acceptances in " << weak_runs << " runs\n";
        if (weak_timeout)
                v.detail << "  first weak timeout: x = " << first_timeout << "\n";
        v.require(strong_bad == 0, "strong runs accept within k iterations");
        v.require(weak_timeout + weak_reject + weak_late == 0, "weak runs accept within k iterations");

        std::vector<Rational> members = {0,        1,         q(1, 4),  q(3, 4),   q(1, 3),   q(2, 3),  q(1, 10),
                                         q(2, 9),  q(7, 9),   q(1, 40), q(3, 10),  q(1, 12),  q(1, 9),  q(8, 9),
                                         q(3, 4),  q(9, 10),  q(2, 27), q(25, 27), q(1, 28),  q(3, 28)};
        std::vector<Rational> epss = {q(255, 1024), q(1, 5), q(1, 8), q(1, 9), q(1, 16), q(1, 47), q(1, 48), q(1, 64), q(1, 256), pow2(-10)};
        int64_t trials = 0, accepts = 0;
        for (const auto &x : members) {
                if (!cantor_distance(x).member) {
                        v.require(false, "member list contains a non-member " + to_string(x));
                        continue;
                }
                for (const auto &eps : epss)
                        for (uint64_t s = 0; s < 50; ++s) {
                                int sign = int(s % 3) - 1;
                                ErrorSource src = s % 4 == 3 ? ErrorSource::seeded_random(s) : ErrorSource::adversarial(s, sign);
                                ++trials;
                                accepts += cantor_decide(x, eps, EvalMode::weak(eps, src), 25).outcome == Outcome::Accept;
                        }
        }
        /* the machine itself under the generic search */
        int64_t machine_trials = 0;
        for (const auto &x : {q(1, 4), q(3, 4), Rational(1)})
                for (const auto &eps : {q(255, 1024), q(1, 8), q(1, 64)}) {
                        machine_trials += 10;
                        if (adversarial_search(cantor_machine(), {x, eps}, eps, 10, 4000, 17).has_value())
                                ++accepts;
                }
        v.detail << "  adversarial: " << accepts << " acceptances of members in " << trials + machine_trials
                 << " trials (eps up to 1/4)\n";
        v.require(trials + machine_trials >= 10000, "10^4 adversarial trials");
        v.require(accepts == 0, "no member accepted");
}

/* ---- 7: reduction drivers ---- */

void reduction_drivers(Verdict &v)
{
        Machine m = toy_root_machine();
        struct Member {
                Rational x, y;
        };
        const Rational delta(1, 8);
        for (const auto &mb : std::vector<Member>{{4, 2}, {9, 3}, {q(1, 4), q(1, 2)}, {q(16, 9), q(4, 3)}}) {
                auto tr = run(m, {mb.x, mb.y, delta}, EvalMode::exact(), 1000);
                if (!tr.accepted) {
                        v.require(false, "certificate run on " + to_string(mb.x));
                        continue;
                }
                const int64_t need = tr.T;
                auto r = reduce_to_circ_pseudo_feas({mb.x}, m, delta, Integer("1000000000000"));
                bool ok = r.outcome == Outcome::Accept && r.T <= 2 * need && r.queries.back().size &&
                          Rational(*r.queries.back().size) <= r.queries.back().S;
                for (const auto &qr : r.queries)
                        ok = ok && qr.S == 1 + (qr.T + 2) * r.r(qr.T);
                v.detail << "  cpf x=" << to_string(mb.x) << ": " << outcome_name(r.outcome) << " at T=" << r.T
                         << " (needed " << need << "), r(T) = " << r.r.alpha << " T^" << r.r.k;
                if (!r.queries.empty() && r.queries.back().size)
                        v.detail << ", size " << *r.queries.back().size << " <= S " << to_string(r.queries.back().S);
                v.detail << "\n";
                v.require(ok, "cpf accepts " + to_string(mb.x) + " with T <= 2 T_needed and size <= S");
        }

        auto pc = measure_phi_constants(m, {4}, 2, {2, 4, 8, 16, 32});
        v.detail << "  Phi_T constants: c = " << pc.c << ", degree " << pc.degree << "; equations";
        for (size_t i = 0; i < pc.Ts.size(); ++i)
                v.detail << " T=" << pc.Ts[i] << ":" << pc.equations[i];
        v.detail << "\n";
        for (int64_t T : {48, 64}) {
                auto rs = register_equations(m, T, {4}, 2);
                v.require(rs.phi.equations() + rs.phi.inequalities() <= pc.c * double(T * T) && rs.phi.degree() <= pc.c,
                          "Phi_" + std::to_string(T) + " within c T^2 equations of degree <= c");
        }
        auto sr = reduce_to_safeas({4}, m, 2, Integer("1000000000000000"));
        v.detail << "  safeas x=4: " << outcome_name(sr.outcome) << " at T=" << sr.T << ", S = T^" << sr.r << "\n";
        v.require(sr.outcome == Outcome::Accept, "safeas accepts x = 4");

        int64_t non = 0, wrongly = 0;
        for (Rational x : {Rational(-4), Rational(-1), q(-1, 4)})
                for (auto policy : {BoxPolicy::Pessimistic, BoxPolicy::Optimistic, BoxPolicy::Random}) {
                        CpfOptions co;
                        co.policy = policy;
                        co.seed = 7;
                        auto c = reduce_to_circ_pseudo_feas({x}, m, delta, Integer(300000), co);
                        SafeasOptions so;
                        so.policy = policy;
                        so.seed = 7;
                        auto s = reduce_to_safeas({x}, m, 2, Integer(100000000), so);
                        non += 2;
                        wrongly += (c.outcome == Outcome::Accept) + (s.outcome == Outcome::Accept);
                }
        v.detail << "  non-members: " << wrongly << " acceptances in " << non << " full-budget runs\n";
        v.require(wrongly == 0, "non-members never accepted");
}

/* ---- 8: geodesic certificates ---- */

/* 2 atan |t| with 256 bits */
void arc_length(mpfr_t out, const Rational &t)
{
        mpq_t a;
        mpq_init(a);
        mpq_abs(a, t.get_mpq_t());
        mpfr_set_q(out, a, MPFR_RNDN);
        mpfr_atan(out, out, MPFR_RNDN);
        mpfr_mul_ui(out, out, 2, MPFR_RNDN);
        mpq_clear(a);
}

void geodesic(Verdict &v)
{
        std::mt19937_64 rng(808);
        int bad_lower = 0, bad_upper = 0, rejected = 0;
        mpfr_t d, gap, tmp;
        mpfr_inits2(256, d, gap, tmp, (mpfr_ptr)0);
        for (int it = 0; it < 1000; ++it) {
                Rational t = q(long(rng() % 8001) - 4000, 400);
                arc_length(d, t);
                Rational r = Rational(mpfr_get_d(d, MPFR_RNDU)) + q(long(rng() % 300) + 5, 100);
                auto cert = geodesic_certificate(t, r);
                auto chk = check_geodesic_certificate(circle_point(t), cert.waypoints, cert.delta, r);
                if (!chk.accepted) {
                        ++rejected;
                        continue;
                }
                mpfr_set_q(gap, r.get_mpq_t(), MPFR_RNDN);
                mpfr_sub(gap, gap, d, MPFR_RNDN);
                mpfr_set_q(tmp, chk.m_lo.get_mpq_t(), MPFR_RNDN);
                if (!(mpfr_sgn(gap) > 0 && mpfr_cmp(tmp, gap) >= 0))
                        ++bad_lower;
                mpfr_set_q(tmp, chk.m_hi.get_mpq_t(), MPFR_RNDN);
                mpfr_mul_ui(gap, gap, 2, MPFR_RNDN);
                if (mpfr_cmp(tmp, gap) > 0)
                        ++bad_upper;
        }
        mpfr_clears(d, gap, tmp, (mpfr_ptr)0);
        v.detail << "  1000 (y, r): " << rejected << " rejected, " << bad_lower << " below r - d, " << bad_upper
                 << " above 2 (r - d)\n";
        v.require(rejected == 0, "certificates accepted");
        v.require(bad_lower == 0 && bad_upper == 0, "0 < r - d <= m <= 2 (r - d)");
}

} // namespace

int main()
{
        const std::vector<std::pair<std::string, std::function<void(Verdict &)>>> criteria = {
                {"floating-point law suite", floating_point_laws},
                {"Fast2Sum exactness and sign-compare", fast_two_sum_exactness},
                {"verifier lemma suite", lemma_suite},
                {"verifier completeness and soundness", verifier_properties},
                {"compiler equivalence", compiler_equivalence},
                {"Cantor decider", cantor_decider},
                {"reduction drivers", reduction_drivers},
                {"geodesic certificates", geodesic},
        };
        int failed = 0;
        auto start = std::chrono::steady_clock::now();
        for (size_t i = 0; i < criteria.size(); ++i) {
                Verdict v;
                auto t0 = std::chrono::steady_clock::now();
                criteria[i].second(v);
                char buf[32];
                std::snprintf(buf, sizeof buf, "%.1f s", seconds_since(t0));
                std::cout << "criterion " << i + 1 << ": " << (v.pass ? "PASS" : "FAIL") << "  " << criteria[i].first
                          << " (" << buf << ")\n"
                          << v.detail.str() << std::flush;
                failed += !v.pass;
        }
        std::cout << "total " << seconds_since(start) << " s, " << failed << " of " << criteria.size() << " failed\n";
        return failed;
}
