#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "bssfp/compile.hpp"
#include "bssfp/machine.hpp"
#include "bssfp/problems.hpp"
#include "bssfp/verifier.hpp"

namespace bssfp {

/* ---- black boxes ---- */

/* Answer in the cases the tables leave open (member, but Size(y) > S). */
enum class BoxPolicy { Pessimistic, Optimistic, Random };
const char *policy_name(BoxPolicy p);
BoxPolicy parse_policy(const std::string &s);

/* What the box knows about one query: membership (nullopt: undecided) and Size (nullopt: infinite). */
struct Probe {
        std::optional<bool> member;
        std::optional<double> size;
};

/*
 * +1 on members with Size <= S, -1 outside Y and on undecided queries, the
 * policy otherwise. No mode ever gets +1 outside Y, so the strong and weak
 * tables coincide.
 */
int box_answer(const Probe &p, const Rational &S, BoxPolicy policy, std::mt19937_64 &rng);
/* Steps the box holds the machine: max(1, ceil S). */
Integer box_charge(const Rational &S);

struct BlackBox {
        std::string name;
        std::function<Probe(const std::vector<Rational> &)> probe;
        BoxPolicy policy = BoxPolicy::Pessimistic;
        uint64_t seed = 0;

        /* Backed by a registry problem; Size = arity (1 + log2 mu). */
        static BlackBox for_problem(const Problem &p, BoxPolicy policy = BoxPolicy::Pessimistic, uint64_t seed = 0);
        /* Every query is a member of size 1. */
        static BlackBox always_yes();
};

struct QueryRecord {
        Rational S;
        std::vector<Rational> y;
        std::string what;
        std::optional<double> size;
        int answer = -1;
        Integer charged;
};

struct ReductionRun {
        Outcome outcome = Outcome::Timeout;
        std::vector<QueryRecord> queries;
        /* Steps outside the box, and those plus every charged box stall. */
        Integer machine_steps, charged;
        Trace trace;

        std::string log() const;
};

/* Runs a machine whose oracle nodes query the box. Budget exhaustion is a timeout. */
ReductionRun run_with_oracle(const Machine &m, const std::vector<Rational> &input, const BlackBox &box,
                             const EvalMode &mode, int64_t budget);
/* Same with any oracle function, e.g. machine_oracle. */
ReductionRun run_with_oracle_fn(const Machine &m, const std::vector<Rational> &input, const OracleFn &oracle,
                                const EvalMode &mode, int64_t budget);
/* The box replaced by the timed simulation of a decider for q(S) steps. */
OracleFn machine_oracle(const Machine &decider, std::function<int64_t(const Rational &)> q, const EvalMode &inner);
/* Input y (len reals). S = 1; until the box accepts (S, y): S = 2S. Then outputs 1. */
Machine doubling_driver(int len);

/* ---- register equations ---- */

/*
 * Time-T register equations of m on input (x, g) with unknown certificate
 * g, plus nu(T) = N and s_0(T) > 0. Variables: g first, then per step the
 * cells of a window wide enough for T shifts, one-hot node indicators, a
 * branch sign bit with four slack squares, and a division inverse.
 */
struct RegisterSystem {
        PolySystem phi;
        int64_t T = 0;
        int n_guess = 0;
        int N = 0;
        int64_t lo = 0, hi = 0;
        bool branches = false, divisions = false;

        int var_s(int64_t t, int64_t i) const;
        int var_b(int64_t t, int nu) const;
        int var_sigma(int64_t t) const;
        int var_zeta(int64_t t) const;
        int var_u(int64_t t, int k) const;
        int64_t cells() const { return hi - lo + 1; }
};

RegisterSystem register_equations(const Machine &m, int64_t T, const std::vector<Rational> &x, int n_guess);
/* Assignment read off the exact run on (x, g); nullopt when that run is not accepted at time T. */
std::optional<std::vector<Rational>> register_witness(const RegisterSystem &rs, const Machine &m,
                                                      const std::vector<Rational> &x, const std::vector<Rational> &g);

/* Monomial count, coefficient bits and exponent entries. */
int64_t system_length(const PolySystem &f);

/* Rational c with c = sum of four rational squares; nullopt for c < 0 or when the search gives up. */
std::optional<std::array<Rational, 4>> four_squares(const Rational &c);

/* Rationals p/q with |p|, q <= h, simplest first. */
std::vector<Rational> rational_grid(int h);

struct WitnessSearch {
        std::vector<Rational> grid = rational_grid(3);
        /* Leading variables tried from the grid; the rest by propagation. */
        int grid_vars = 0;
        int64_t max_nodes = 200000;
};

/* Grid plus propagation; finds nothing on most systems. Results pass check_safeas_witness. */
std::optional<std::vector<Rational>> search_safeas_witness(const PolySystem &f, const WitnessSearch &s);

struct PhiConstants {
        std::vector<int64_t> Ts;
        std::vector<int> equations, variables;
        int degree = 0;
        /* Smallest c with #eq <= c T^2, #vars <= 2T + c T^2, degree <= c on the measured Ts. */
        double c = 0;
};
PhiConstants measure_phi_constants(const Machine &m, const std::vector<Rational> &x, int n_guess,
                                   const std::vector<int64_t> &Ts);

/* Smallest r with system_length(Phi_T) <= T^r for T = first, 2 first, ..., up to T_max. */
int safeas_exponent(const Machine &m, const std::vector<Rational> &x, int n_guess, int64_t first, int64_t T_max);

struct SafeasOptions {
        /* 0: measured by safeas_exponent. */
        int r = 0;
        int64_t calibrate_to = 32;
        BoxPolicy policy = BoxPolicy::Pessimistic;
        uint64_t seed = 0;
        WitnessSearch search;
};

struct SafeasQuery {
        int64_t T = 0;
        Rational S;
        int64_t length = 0;
        int equations = 0, variables = 0, degree = 0;
        bool witness_found = false;
        int answer = -1;
};

struct SafeasRun {
        Outcome outcome = Outcome::Timeout;
        int64_t T = 0;
        int r = 0;
        std::vector<SafeasQuery> queries;
        Integer charged;
        std::vector<Rational> witness;
        std::string log() const;
};

/* T = Length(x); repeat T = 2T, query (T^r, Phi_T) until the box accepts. Never rejects. */
SafeasRun reduce_to_safeas(const std::vector<Rational> &x, const Machine &m, int n_guess, const Integer &budget,
                           const SafeasOptions &opt = {});

/* ---- circuit pseudo-feasibility ---- */

struct CpfSearch {
        std::vector<Rational> grid = rational_grid(4);
        /* eps = 2^-t; the witness runs at delta = 2 eps. */
        std::vector<int> ladder = {5, 6, 8, 12, 16, 24, 32};
};

struct CpfProbe {
        bool found = false;
        Rational rho;
        std::vector<Rational> y;
        WeakWitness witness;
        int64_t length = 0;
        /* Length (1 + log2 1/rho) */
        std::optional<double> size;
};

/* Witness search: strong eps-evaluation on grid inputs, accepted only if the verifier U passes it. */
CpfProbe cpf_probe(const Circuit &c, const CpfSearch &s = {});

/* r(T) = alpha T^k bounding Length(C_{M,T,x}) on the calibration points. */
struct LengthFit {
        double alpha = 0;
        int k = 0;
        std::vector<std::pair<int64_t, int64_t>> points;
        Rational operator()(int64_t T) const;
};
LengthFit fit_circuit_length(const Machine &m, const std::vector<Rational> &x, int n_free,
                             const std::vector<int64_t> &Ts, Backend b = Backend::SelectorTree);

struct CpfOptions {
        Backend backend = Backend::SelectorTree;
        int n_free = 2;
        int64_t calibrate_to = 32;
        BoxPolicy policy = BoxPolicy::Pessimistic;
        uint64_t seed = 0;
        CpfSearch search;
};

struct CpfQuery {
        int64_t T = 0;
        Rational S;
        int tau = 0;
        int64_t length = 0;
        std::optional<Rational> rho;
        std::optional<double> size;
        int answer = -1;
};

struct CpfRun {
        Outcome outcome = Outcome::Timeout;
        int64_t T = 0;
        LengthFit r;
        std::vector<CpfQuery> queries;
        Integer charged;
        std::optional<WeakWitness> witness;
        std::string log() const;
};

/* T = Length(x); repeat T = 2T, query (1 + (T+2) r(T), (C_{M,T,x}, delta)) until the box accepts. */
CpfRun reduce_to_circ_pseudo_feas(const std::vector<Rational> &x, const Machine &m, const Rational &delta,
                                  const Integer &budget, const CpfOptions &opt = {});

} // namespace bssfp
