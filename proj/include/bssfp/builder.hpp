#pragma once

#include <vector>

#include "bssfp/machine.hpp"

namespace bssfp {

/*
 * Assembler for canonical-form machines over a register file.
 *
 * Variable v lives in cell v + 1. The inputs start in variables 0..n-1, the
 * remaining variables start at zero. s_0 is scratch. An assignment computes
 * into s_0 and then rebuilds the register file by a sweep of copies and
 * right shifts, so every node stays in canonical form.
 */
class ProgramBuilder {
public:
        struct Label {
                int id = -1;
        };

        ProgramBuilder(int n_inputs, int n_vars);

        int vars() const { return K_; }

        void load(int dst, const Rational &c);
        void add(int dst, int a, int b);
        void sub(int dst, int a, int b);
        void mul(int dst, int a, int b);
        /* dst = a / b; loops forever when b = 0. */
        void div(int dst, int a, int b);
        void copy(int dst, int src);
        /* dst = box answer on the query (variables 0..len-1) with size bound s. */
        void oracle(int dst, int s, int len);

        Label label();
        void bind(Label l);
        void jump(Label l);
        /* Branch on v > 0. */
        void branch_pos(int v, Label pos, Label neg);
        /* Branch on a - b > 0; the subtraction keeps the sign in every mode. */
        void branch_diff(int a, int b, Label pos, Label neg);
        /* Output v: accepts iff v > 0. */
        void accept_if_positive(int v);
        void halt_with(const Rational &c);
        /* Loops forever. */
        void diverge();

        /* Id the next emitted node will get. */
        int here() const { return int(nodes_.size()) + 1; }
        Machine finish();

private:
        int emit(Node n);
        void assign_from_s0(int dst);
        void compute(OpCode op, int dst, int a, int b);
        void patch_fallthrough(Label l);

        struct Fixup {
                int node;
                bool plus;
                int label;
        };

        int n_, K_;
        std::vector<Node> nodes_;
        std::vector<int> bound_;
        std::vector<Fixup> fixups_;
        Label end_;
        bool finished_ = false;
        int patched_ = 0;
};

} // namespace bssfp
