#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "bssfp/compile.hpp"
#include "bssfp/harness.hpp"
#include "bssfp/props.hpp"
#include "bssfp/verifier.hpp"

using namespace bssfp;

namespace {

enum Exit { Accept = 0, Reject = 1, Timeout = 2, Error = 3 };

int exit_of(Outcome o)
{
        switch (o) {
        case Outcome::Accept: return Accept;
        case Outcome::Reject: return Reject;
        case Outcome::Timeout: return Timeout;
        }
        return Error;
}

std::vector<Rational> parse_values(const std::vector<std::string> &v)
{
        std::vector<Rational> out;
        for (const auto &s : v)
                out.push_back(parse_rational(s));
        return out;
}

/* exact | strong | weak[:nearest|random|adversarial|adversarial+|adversarial-] */
EvalMode parse_mode(const std::string &s, const std::string &eps, uint64_t seed)
{
        if (s == "exact")
                return EvalMode::exact();
        std::string kind = s.substr(0, 4), strat = s.size() > 5 ? s.substr(5) : "random";
        if (s != "strong" && (kind != "weak" || (s.size() > 4 && s[4] != ':')))
                throw ParseError("unknown mode '" + s + "'");
        if (eps.empty())
                throw PreconditionError("mode '" + s + "' needs --eps");
        Rational e = parse_rational(eps);
        if (s == "strong")
                return EvalMode::strong(e);
        ErrorSource src;
        if (strat == "nearest")
                src = ErrorSource::round_nearest();
        else if (strat == "random")
                src = ErrorSource::seeded_random(seed);
        else if (strat == "adversarial")
                src = ErrorSource::adversarial(seed);
        else if (strat == "adversarial+")
                src = ErrorSource::adversarial(seed, 1);
        else if (strat == "adversarial-")
                src = ErrorSource::adversarial(seed, -1);
        else
                throw ParseError("unknown weak strategy '" + strat + "'");
        return EvalMode::weak(e, src);
}

Backend parse_backend(const std::string &s)
{
        if (s == "selector" || s == "selector-tree")
                return Backend::SelectorTree;
        if (s == "lagrange")
                return Backend::Lagrange;
        throw ParseError("unknown backend '" + s + "'");
}

void write_file(const std::string &path, const std::string &text)
{
        std::ofstream out(path);
        if (!out)
                throw ParseError("cannot write " + path);
        out << text;
}

Machine load_machine(const std::string &file, const std::string &problem)
{
        if (!file.empty())
                return Machine::load_file(file);
        if (!problem.empty())
                return find_problem(problem).machine();
        throw PreconditionError("give --machine or --problem");
}

struct Common {
        std::string machine, problem, circuit, mode = "exact", eps, trace, out;
        std::vector<std::string> input, x;
        int64_t budget = 1000000;
        uint64_t seed = 1;
};

} // namespace

int main(int argc, char **argv)
{
        CLI::App app{"Real-number machines under floating-point semantics"};
        app.require_subcommand(1);
        app.fallthrough();
        Common o;
        app.add_option("--seed", o.seed, "seed for weak errors and box policies")->envname("BSSFP_SEED");

        auto add_mode = [&](CLI::App *c) {
                c->add_option("--mode", o.mode, "exact | strong | weak[:strategy]");
                c->add_option("--eps,--epsilon", o.eps, "machine precision (rational)");
        };
        auto add_input = [&](CLI::App *c) { c->add_option("--input", o.input, "input values")->delimiter(','); };

        /* run */
        auto *run_c = app.add_subcommand("run", "run a machine");
        run_c->add_option("--machine", o.machine, "machine file");
        run_c->add_option("--problem", o.problem, "registry problem");
        add_input(run_c);
        add_mode(run_c);
        run_c->add_option("--budget", o.budget, "step budget");
        run_c->add_option("--trace", o.trace, "write the trace here");
        std::string emit;
        run_c->add_option("--emit-machine", emit, "write the machine description here");

        /* compile */
        auto *comp_c = app.add_subcommand("compile", "compile a machine into its time-T circuit");
        int64_t T = 10;
        int n_free = 1;
        std::string backend = "selector", layers;
        comp_c->add_option("--machine", o.machine, "machine file");
        comp_c->add_option("--problem", o.problem, "registry problem");
        comp_c->add_option("--T", T, "time bound")->required();
        comp_c->add_option("--backend", backend, "selector | lagrange");
        comp_c->add_option("--x", o.x, "fixed inputs")->delimiter(',');
        comp_c->add_option("--free", n_free, "free inputs besides delta");
        comp_c->add_option("--out", o.out, "circuit file (default stdout)");
        comp_c->add_option("--layers", layers, "write the layer map here");

        /* eval */
        auto *eval_c = app.add_subcommand("eval", "evaluate a circuit");
        std::string delta;
        eval_c->add_option("--circuit", o.circuit, "circuit file")->required();
        add_input(eval_c);
        eval_c->add_option("--delta", delta, "delta, appended when the circuit reads it");
        add_mode(eval_c);

        /* verify */
        auto *ver_c = app.add_subcommand("verify", "run the certificate verifier");
        std::string witness;
        ver_c->add_option("circuit", o.circuit, "circuit file")->required();
        ver_c->add_option("witness", witness, "witness file")->required();
        ver_c->add_option("--delta", delta, "delta (default: the witness's)");
        add_mode(ver_c);

        /* rho */
        auto *rho_c = app.add_subcommand("rho", "lower bound on rho of a circuit");
        RhoSearch rs;
        rho_c->add_option("--circuit", o.circuit, "circuit file")->required();
        rho_c->add_option("--t-min", rs.t_min, "fewest digits");
        rho_c->add_option("--t-max", rs.t_max, "most digits");

        /* condition */
        auto *cond_c = app.add_subcommand("condition", "membership, condition and size of an input");
        int64_t steps = 0;
        double cc = 1, dd = 1;
        cond_c->add_option("--problem", o.problem, "registry problem")->required();
        add_input(cond_c);
        cond_c->add_option("--steps", steps, "running time, for the estimate of log2 mu");
        cond_c->add_option("--c", cc, "constant of the time bound");
        cond_c->add_option("--d", dd, "exponent of the time bound");

        /* reduce */
        auto *red_c = app.add_subcommand("reduce", "run a reduction driver");
        std::string target, policy = "pessimistic", budget_s = "1000000000000", log_file;
        int n_guess = -1;
        red_c->add_option("--target", target, "safeas | cpf")->required();
        red_c->add_option("--machine", o.machine, "machine file");
        red_c->add_option("--problem", o.problem, "registry problem");
        add_input(red_c);
        red_c->add_option("--budget", budget_s, "charged-step budget");
        red_c->add_option("--guess", n_guess, "certificate length (safeas; default arity - input)");
        red_c->add_option("--free", n_free, "free circuit inputs besides delta (cpf)");
        red_c->add_option("--delta", delta, "delta (cpf)");
        red_c->add_option("--policy", policy, "pessimistic | optimistic | random");
        red_c->add_option("--log", log_file, "write the query log here");

        /* props */
        auto *props_c = app.add_subcommand("props", "property suites");
        std::string suite = "all";
        int t = 4, elo = -6, ehi = 6;
        int64_t count = 100000;
        bool exhaustive = false;
        props_c->add_option("--suite", suite, "fpnum | fast2sum | lemmas | all");
        props_c->add_option("--t", t, "digits");
        props_c->add_option("--elo", elo, "smallest exponent");
        props_c->add_option("--ehi", ehi, "largest exponent");
        props_c->add_flag("--exhaustive", exhaustive, "every float in the exponent window");
        props_c->add_option("--count", count, "random cases");

        try {
                app.parse(argc, argv);
        } catch (const CLI::ParseError &e) {
                int rc = app.exit(e);
                return rc == 0 ? 0 : Error;
        }

        try {
                if (run_c->parsed()) {
                        Machine m = load_machine(o.machine, o.problem);
                        if (!emit.empty())
                                write_file(emit, m.str());
                        EvalMode mode = parse_mode(o.mode, o.eps, o.seed);
                        Trace tr = run(m, parse_values(o.input), mode, o.budget);
                        Outcome out = !tr.terminated ? Outcome::Timeout : tr.accepted ? Outcome::Accept : Outcome::Reject;
                        std::cout << "outcome " << outcome_name(out) << "\nsteps " << tr.T << "\noutput "
                                  << to_string(tr.output()) << "\nmode " << mode.str() << "\n";
                        if (!o.trace.empty())
                                write_file(o.trace, tr.dump());
                        return exit_of(out);
                }
                if (comp_c->parsed()) {
                        Machine m = load_machine(o.machine, o.problem);
                        auto cc_ = compile(m, T, parse_values(o.x), n_free, parse_backend(backend));
                        if (o.out.empty())
                                std::cout << cc_.circuit.str();
                        else
                                write_file(o.out, cc_.circuit.str());
                        if (!layers.empty())
                                write_file(layers, cc_.layer_map_str());
                        std::cerr << "tau " << cc_.circuit.size() << " length " << cc_.circuit.length() << "\n";
                        return Accept;
                }
                if (eval_c->parsed()) {
                        Circuit c = Circuit::load_file(o.circuit);
                        auto in = parse_values(o.input);
                        if (!delta.empty())
                                in = circuit_input(c, in, parse_rational(delta));
                        auto ev = eval_circuit(c, in, parse_mode(o.mode, o.eps, o.seed));
                        if (!ev.ok) {
                                std::cout << "outcome reject\nzero-division at node " << ev.failed_node << "\n";
                                return Reject;
                        }
                        std::cout << "outcome " << (ev.accepted ? "accept" : "reject") << "\noutput "
                                  << to_string(ev.output()) << "\n";
                        return ev.accepted ? Accept : Reject;
                }
                if (ver_c->parsed()) {
                        Circuit c = Circuit::load_file(o.circuit);
                        WeakWitness w = WeakWitness::load_file(witness);
                        if (!delta.empty())
                                w.delta = parse_rational(delta);
                        EvalMode mode = parse_mode(o.mode, o.eps, o.seed);
                        Rational eps = o.eps.empty() ? Rational(0) : parse_rational(o.eps);
                        auto r = verify(c, w, eps, mode);
                        std::cout << r.str();
                        return r.accepted ? Accept : Reject;
                }
                if (rho_c->parsed()) {
                        Circuit c = Circuit::load_file(o.circuit);
                        auto r = estimate_rho(c, rs);
                        std::cout << "rho " << to_string(r.rho) << "\neps " << to_string(r.eps) << "\nleaves " << r.leaves
                                  << "\n";
                        if (r.witness)
                                std::cout << r.witness->str();
                        return r.witness ? Accept : Reject;
                }
                if (cond_c->parsed()) {
                        const Problem &p = find_problem(o.problem);
                        auto y = parse_values(o.input);
                        auto mem = p.member(y);
                        auto mu = p.condition(y);
                        auto size = input_size(int64_t(y.size()), mu);
                        std::cout << "member " << (mem ? (*mem ? "yes" : "no") : "undecided") << "\nmu "
                                  << (mu ? to_string(*mu) : "inf") << "\nsize ";
                        if (size)
                                std::cout << *size << "\n";
                        else
                                std::cout << "inf\n";
                        if (steps > 0)
                                std::cout << "log2_mu_estimate " << log2_mu_prime(steps, int64_t(y.size()), cc, dd) << "\n";
                        return !mem ? Timeout : *mem ? Accept : Reject;
                }
                if (red_c->parsed()) {
                        Machine m = load_machine(o.machine, o.problem);
                        auto x = parse_values(o.input);
                        Integer budget(budget_s);
                        std::string text;
                        Outcome out;
                        if (target == "safeas") {
                                int g = n_guess;
                                if (g < 0) {
                                        if (o.problem.empty())
                                                throw PreconditionError("give --guess with --machine");
                                        g = find_problem(o.problem).arity - int(x.size());
                                }
                                SafeasOptions opt;
                                opt.policy = parse_policy(policy);
                                opt.seed = o.seed;
                                auto r = reduce_to_safeas(x, m, g, budget, opt);
                                text = r.log();
                                out = r.outcome;
                        } else if (target == "cpf") {
                                CpfOptions opt;
                                opt.policy = parse_policy(policy);
                                opt.seed = o.seed;
                                opt.n_free = red_c->count("--free") ? n_free : 2;
                                auto r = reduce_to_circ_pseudo_feas(x, m, delta.empty() ? Rational(1, 8) : parse_rational(delta),
                                                                    budget, opt);
                                text = r.log();
                                out = r.outcome;
                        } else {
                                throw ParseError("unknown target '" + target + "'");
                        }
                        std::cout << text;
                        if (!log_file.empty())
                                write_file(log_file, text);
                        return exit_of(out);
                }
                if (props_c->parsed()) {
                        std::vector<PropResult> all;
                        auto add = [&](std::vector<PropResult> r) { all.insert(all.end(), r.begin(), r.end()); };
                        bool known = false;
                        if (suite == "fpnum" || suite == "all") {
                                known = true;
                                add(exhaustive ? props_fpnum(t, elo, ehi) : props_fpnum_random(t, count, o.seed));
                        }
                        if (suite == "fast2sum" || suite == "all") {
                                known = true;
                                add(exhaustive ? props_fast2sum(t, elo, ehi, std::max(elo, -3), std::min(ehi, 3))
                                               : props_fast2sum_random(t, count, o.seed));
                        }
                        if (suite == "lemmas" || suite == "all") {
                                known = true;
                                LemmaOptions lo;
                                lo.seed = o.seed;
                                add(props_lemmas(lo));
                        }
                        if (!known)
                                throw ParseError("unknown suite '" + suite + "'");
                        std::cout << props_report(all);
                        for (const auto &r : all)
                                if (!r.ok())
                                        return Reject;
                        return Accept;
                }
        } catch (const std::exception &e) {
                std::cerr << "error: " << e.what() << "\n";
                return Error;
        }
        return Error;
}
