#include "bssfp/builder.hpp"

namespace bssfp {

ProgramBuilder::ProgramBuilder(int n_inputs, int n_vars)
        : n_(n_inputs), K_(n_vars)
{
        if (n_inputs < 0 || n_vars < n_inputs || n_vars < 1)
                throw PreconditionError("builder needs n_vars >= n_inputs and at least one variable");
        Node in;
        in.kind = NodeKind::Input;
        emit(in);
        end_ = label();
}

int ProgramBuilder::emit(Node n)
{
        if (finished_)
                throw PreconditionError("builder already finished");
        int id = here();
        if (n.kind != NodeKind::Branch && n.kind != NodeKind::Output) {
                n.beta_plus = id + 1;
                n.beta_minus = id + 1;
        }
        nodes_.push_back(std::move(n));
        return id;
}

ProgramBuilder::Label ProgramBuilder::label()
{
        bound_.push_back(-1);
        return Label{int(bound_.size()) - 1};
}

void ProgramBuilder::bind(Label l)
{
        if (bound_.at(l.id) >= 0)
                throw PreconditionError("label bound twice");
        bound_[l.id] = here();
}

void ProgramBuilder::assign_from_s0(int dst)
{
        Node shr;
        shr.kind = NodeKind::ShiftRight;
        emit(shr);
        /* stash at cell 1 + sh, old variable i at cell i + 2 + sh */
        int sh = 0;
        for (int i = K_ - 1; i >= 0; --i) {
                Node c;
                c.kind = NodeKind::Compute;
                c.op = OpCode::Copy;
                c.j = i == dst ? 1 + sh : i + 2 + sh;
                emit(c);
                emit(shr);
                ++sh;
        }
}

void ProgramBuilder::compute(OpCode op, int dst, int a, int b)
{
        Node c;
        c.kind = NodeKind::Compute;
        c.op = op;
        c.j = a + 1;
        c.k = b + 1;
        emit(c);
        assign_from_s0(dst);
}

void ProgramBuilder::load(int dst, const Rational &c)
{
        Node n;
        n.kind = NodeKind::Compute;
        n.op = OpCode::Load;
        n.c = c;
        emit(n);
        assign_from_s0(dst);
}

void ProgramBuilder::add(int dst, int a, int b) { compute(OpCode::Add, dst, a, b); }
void ProgramBuilder::sub(int dst, int a, int b) { compute(OpCode::Sub, dst, a, b); }
void ProgramBuilder::mul(int dst, int a, int b) { compute(OpCode::Mul, dst, a, b); }
void ProgramBuilder::copy(int dst, int src) { compute(OpCode::Copy, dst, src, 0); }

void ProgramBuilder::div(int dst, int a, int b)
{
        Node c;
        c.kind = NodeKind::Compute;
        c.op = OpCode::Copy;
        c.j = b + 1;
        emit(c);
        Node d;
        d.kind = NodeKind::Compute;
        d.op = OpCode::Div;
        d.j = a + 1;
        d.k = 0;
        emit(d);
        assign_from_s0(dst);
}

void ProgramBuilder::oracle(int dst, int s, int len)
{
        if (len < 0 || len > K_)
                throw PreconditionError("query longer than the register file");
        Node c;
        c.kind = NodeKind::Compute;
        c.op = OpCode::Copy;
        c.j = s + 1;
        emit(c);
        Node o;
        o.kind = NodeKind::Oracle;
        o.len = len;
        emit(o);
        assign_from_s0(dst);
}

void ProgramBuilder::patch_fallthrough(Label l)
{
        int prev = here() - 1;
        bool target_here = false;
        for (int b : bound_)
                target_here |= b == here();
        const Node &p = nodes_.at(prev - 1);
        if (!target_here && p.kind != NodeKind::Branch && prev != patched_) {
                patched_ = prev;
                fixups_.push_back({prev, true, l.id});
                fixups_.push_back({prev, false, l.id});
                return;
        }
        Node br;
        br.kind = NodeKind::Branch;
        int id = emit(br);
        fixups_.push_back({id, true, l.id});
        fixups_.push_back({id, false, l.id});
}

void ProgramBuilder::jump(Label l)
{
        patch_fallthrough(l);
}

void ProgramBuilder::branch_pos(int v, Label pos, Label neg)
{
        Node c;
        c.kind = NodeKind::Compute;
        c.op = OpCode::Copy;
        c.j = v + 1;
        emit(c);
        Node br;
        br.kind = NodeKind::Branch;
        int id = emit(br);
        fixups_.push_back({id, true, pos.id});
        fixups_.push_back({id, false, neg.id});
}

void ProgramBuilder::branch_diff(int a, int b, Label pos, Label neg)
{
        Node c;
        c.kind = NodeKind::Compute;
        c.op = OpCode::Sub;
        c.j = a + 1;
        c.k = b + 1;
        emit(c);
        Node br;
        br.kind = NodeKind::Branch;
        int id = emit(br);
        fixups_.push_back({id, true, pos.id});
        fixups_.push_back({id, false, neg.id});
}

void ProgramBuilder::accept_if_positive(int v)
{
        Node c;
        c.kind = NodeKind::Compute;
        c.op = OpCode::Copy;
        c.j = v + 1;
        emit(c);
        jump(end_);
}

void ProgramBuilder::halt_with(const Rational &c)
{
        Node n;
        n.kind = NodeKind::Compute;
        n.op = OpCode::Load;
        n.c = c;
        emit(n);
        jump(end_);
}

void ProgramBuilder::diverge()
{
        Node br;
        br.kind = NodeKind::Branch;
        int id = here();
        br.beta_plus = br.beta_minus = id;
        emit(br);
}

Machine ProgramBuilder::finish()
{
        bind(end_);
        Node out;
        out.kind = NodeKind::Output;
        int N = emit(out);
        finished_ = true;
        for (const auto &f : fixups_) {
                int target = bound_.at(f.label);
                if (target < 0)
                        throw PreconditionError("jump to unbound label");
                Node &n = nodes_.at(f.node - 1);
                (f.plus ? n.beta_plus : n.beta_minus) = target;
        }
        for (auto &n : nodes_)
                if (n.kind != NodeKind::Output && n.beta_plus > N)
                        n.beta_plus = n.beta_minus = N;
        Machine m(nodes_);
        m.validate();
        return m;
}

} // namespace bssfp
