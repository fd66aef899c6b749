#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bssfp/fpnum.hpp"
#include "bssfp/mode.hpp"

namespace bssfp {

struct MachineError : std::runtime_error {
        using std::runtime_error::runtime_error;
};

enum class NodeKind { Input, Compute, Branch, Output, ShiftLeft, ShiftRight, Oracle };
enum class OpCode { Load, Add, Sub, Mul, Div, Copy };

const char *kind_name(NodeKind k);
const char *op_name(OpCode op);

struct Node {
        NodeKind kind = NodeKind::Output;
        OpCode op = OpCode::Load;
        int64_t j = 0, k = 0;
        Rational c;
        /* Oracle nodes: number of query cells s_1..s_len. */
        int64_t len = 0;
        int beta_plus = 0, beta_minus = 0;
        /* Optional real constant for load nodes: value at a given precision. */
        std::function<Rational(const Precision &)> real;
};

/*
 * Canonical-form machine: node 1 is the input node, node N the output node,
 * each computation writes s_0, every branch tests s_0 > 0. Division nodes
 * must divide by s_0; when s_0 = 0 the node loops on itself.
 */
class Machine {
public:
        Machine() = default;
        explicit Machine(std::vector<Node> nodes) : nodes_(std::move(nodes)) {}

        int size() const { return int(nodes_.size()); }
        const Node &node(int id) const { return nodes_.at(id - 1); }
        Node &node(int id) { return nodes_.at(id - 1); }
        const std::vector<Node> &nodes() const { return nodes_; }

        /* Throws MachineError on a malformed description. */
        void validate() const;

        static Machine parse(std::istream &in);
        static Machine parse_string(const std::string &text);
        static Machine load_file(const std::string &path);
        std::string str() const;

private:
        std::vector<Node> nodes_;
};

class MachineState {
public:
        int node = 1;

        const Rational &get(int64_t i) const;
        void set(int64_t i, const Rational &v);
        void shift_left() { ++offset_; }
        void shift_right() { --offset_; }
        /* Nonzero cells by logical index. */
        std::map<int64_t, Rational> cells() const;
        bool operator==(const MachineState &o) const { return node == o.node && cells() == o.cells(); }

private:
        std::map<int64_t, Rational> store_;
        int64_t offset_ = 0;
};

/* One executed node. */
struct Step {
        int64_t t = 0;
        int node = 0;
        std::string op;
        bool wrote = false;
        int64_t index = 0;
        Rational value;
        Rational error;
        /* +1 shift-left, -1 shift-right, 0 none. */
        int shift = 0;
        /* Steps charged by an oracle call beyond this one. */
        int64_t extra = 0;
};

struct Trace {
        std::vector<Rational> input;
        EvalMode mode;
        /* Cells after the input map, and the error applied to each nonzero one. */
        std::map<int64_t, Rational> initial;
        std::vector<std::pair<int64_t, Rational>> initial_errors;
        std::vector<Step> steps;
        bool terminated = false;
        bool accepted = false;
        int64_t T = 0;
        MachineState final_state;

        /* Every injected error in consumption order. */
        std::vector<Rational> errors() const;
        Rational output() const { return final_state.get(0); }
        /* Re-applies the recorded writes and shifts. */
        MachineState replay() const;
        std::string dump() const;
};

/* Answer and cost of an oracle query: (S, query) -> (value, steps). */
using OracleFn = std::function<std::pair<Rational, int64_t>(const Rational &S, const std::vector<Rational> &query,
                                                            const EvalMode &mode)>;

struct RunOptions {
        bool record = true;
        OracleFn oracle;
};

MachineState input_state(const std::vector<Rational> &x);
Trace run(const Machine &m, const std::vector<Rational> &input, const EvalMode &mode, int64_t step_budget,
          const RunOptions &opts = {});
/* Like run, but a run that has not halted within T steps rejects. */
Trace run_timed_universal(const Machine &m, const std::vector<Rational> &input, int64_t T, const EvalMode &mode,
                          const RunOptions &opts = {});
/* Searches for an accepting weak epsilon-computation; absence proves nothing. */
std::optional<Trace> adversarial_search(const Machine &m, const std::vector<Rational> &input, const Rational &eps,
                                        int64_t trials, int64_t step_budget, uint64_t seed = 1,
                                        const RunOptions &opts = {});
/* Checks that a trace is a weak epsilon-computation of m and replays exactly. */
bool validate_weak_trace(const Machine &m, const Trace &tr, const Rational &eps);

struct BitExpansion {
        bool is_zero = false;
        bool rejected = false;
        bool terminated = true;
        int s = 1;
        int64_t e = 0;
        std::vector<int> bits;
        int64_t steps = 0;
        int64_t d() const { return int64_t(bits.size()); }
        /* s 2^e sum f_i 2^-i */
        Rational value() const;
};

BitExpansion bit_expansion(const Rational &x, const EvalMode &mode, int64_t max_steps = 100000);
/* s 2^e sum f_i 2^-i evaluated by Horner's rule under A's mode. */
Rational horner_bits(const BitExpansion &b, Arith &A);

} // namespace bssfp
