#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "bssfp/fpnum.hpp"
#include "bssfp/mode.hpp"

namespace bssfp {

struct CircuitError : std::runtime_error {
        using std::runtime_error::runtime_error;
};

enum class CKind { In, Const, Op, Sel };

struct CNode {
        CKind kind = CKind::In;
        Op op = Op::Add;
        int j = 0, k = 0, l = 0;
        Rational c;
};

/*
 * Algebraic decision circuit. Nodes are numbered 1..tau, predecessors are
 * strictly smaller, node tau is the output. Input nodes read the input list
 * in the order they appear. Circuits built for pseudo-feasibility read
 * x_1..x_n and then delta as their last input.
 */
class Circuit {
public:
        int add_input();
        int add_const(const Rational &c);
        int add_op(Op op, int j, int k);
        int add_sel(int j, int k, int l);

        int size() const { return int(nodes_.size()); }
        int inputs() const;
        const CNode &node(int id) const { return nodes_.at(id - 1); }
        const std::vector<CNode> &nodes() const { return nodes_; }
        /* Node count plus the bit length of every constant. */
        int64_t length() const;

        void validate() const;
        static Circuit parse(std::istream &in);
        static Circuit parse_string(const std::string &text);
        static Circuit load_file(const std::string &path);
        std::string str() const;

private:
        std::vector<CNode> nodes_;
};

/* x followed by delta when the circuit has one input more than x. */
std::vector<Rational> circuit_input(const Circuit &c, const std::vector<Rational> &x, const Rational &delta);

struct CircuitEval {
        /* False when some division hit a zero divisor. */
        bool ok = true;
        bool accepted = false;
        std::vector<Rational> w;
        /* Relative error applied at each node (zero for selectors). */
        std::vector<Rational> errors;
        int failed_node = 0;
        Rational output() const { return w.empty() ? Rational(0) : w.back(); }
};

CircuitEval eval_circuit(const Circuit &c, const std::vector<Rational> &input, const EvalMode &mode);

struct WeakWitness {
        std::vector<Rational> x;
        std::vector<Float> w;
        Rational delta;

        static WeakWitness parse(std::istream &in);
        static WeakWitness parse_string(const std::string &text);
        static WeakWitness load_file(const std::string &path);
        std::string str() const;
};

/* Wraps an evaluation as a witness; values are kept exact. */
WeakWitness witness_from_eval(const std::vector<Rational> &x, const Rational &delta, const CircuitEval &ev);

struct WitnessCheck {
        bool ok = false;
        int failed_node = 0;
        std::string reason;
};

/*
 * Exact check that w is an accepting weak computation on (x, delta) with
 * relative error at most bound; the bound defaults to delta.
 */
WitnessCheck check_weak_witness_detail(const Circuit &c, const WeakWitness &wit);
WitnessCheck check_weak_witness_detail(const Circuit &c, const WeakWitness &wit, const Rational &bound);
bool check_weak_witness(const Circuit &c, const WeakWitness &wit);
bool check_weak_witness(const Circuit &c, const WeakWitness &wit, const Rational &bound);

struct RhoSearch {
        /* Largest and smallest digit counts tried; eps = 2^-t. */
        int t_min = 4;
        int t_max = 24;
        int max_nodes = 10;
        int64_t max_leaves = 200000;
        /* Candidate inputs x (without delta); empty means a small default grid. */
        std::vector<std::vector<Rational>> inputs;
};

struct RhoEstimate {
        /* Lower bound on rho(C); zero when nothing was found. */
        Rational rho;
        std::optional<WeakWitness> witness;
        Rational eps;
        int64_t leaves = 0;
};

/* Throws PreconditionError when the circuit exceeds the search limits. */
RhoEstimate estimate_rho(const Circuit &c, const RhoSearch &s = {});

} // namespace bssfp
