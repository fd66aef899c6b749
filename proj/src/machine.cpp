#include "bssfp/machine.hpp"

#include <fstream>
#include <sstream>

namespace bssfp {

const char *kind_name(NodeKind k)
{
        switch (k) {
        case NodeKind::Input: return "input";
        case NodeKind::Compute: return "compute";
        case NodeKind::Branch: return "branch";
        case NodeKind::Output: return "output";
        case NodeKind::ShiftLeft: return "shl";
        case NodeKind::ShiftRight: return "shr";
        case NodeKind::Oracle: return "oracle";
        }
        return "?";
}

const char *op_name(OpCode op)
{
        switch (op) {
        case OpCode::Load: return "load";
        case OpCode::Add: return "add";
        case OpCode::Sub: return "sub";
        case OpCode::Mul: return "mul";
        case OpCode::Div: return "div";
        case OpCode::Copy: return "copy";
        }
        return "?";
}

void Machine::validate() const
{
        int N = size();
        if (N < 2)
                throw MachineError("machine needs at least an input and an output node");
        if (node(1).kind != NodeKind::Input)
                throw MachineError("node 1 must be the input node");
        if (node(N).kind != NodeKind::Output)
                throw MachineError("node N must be the output node");
        for (int id = 1; id <= N; ++id) {
                const Node &n = node(id);
                std::string where = "node " + std::to_string(id) + ": ";
                if (id != 1 && n.kind == NodeKind::Input)
                        throw MachineError(where + "second input node");
                if (id != N && n.kind == NodeKind::Output)
                        throw MachineError(where + "second output node");
                if (n.kind == NodeKind::Output)
                        continue;
                for (int b : {n.beta_plus, n.beta_minus})
                        if (b < 2 || b > N)
                                throw MachineError(where + "successor " + std::to_string(b) + " out of range");
                if (n.kind != NodeKind::Branch && n.beta_plus != n.beta_minus)
                        throw MachineError(where + "only branch nodes may have two successors");
                if (n.kind == NodeKind::Compute && n.op == OpCode::Div && n.k != 0)
                        throw MachineError(where + "division must be guarded: divisor has to be s_0");
                if (n.kind == NodeKind::Oracle && n.len < 0)
                        throw MachineError(where + "negative oracle query length");
        }
}

static int64_t to_i64(const std::string &tok, int line)
{
        try {
                size_t pos;
                long long v = std::stoll(tok, &pos);
                if (pos != tok.size())
                        throw std::invalid_argument(tok);
                return v;
        } catch (const std::exception &) {
                throw ParseError("line " + std::to_string(line) + ": expected integer, got '" + tok + "'");
        }
}

Machine Machine::parse(std::istream &in)
{
        std::map<int, Node> byid;
        std::string text;
        int line = 0;
        while (std::getline(in, text)) {
                ++line;
                auto h = text.find('#');
                if (h != std::string::npos)
                        text.erase(h);
                std::istringstream ls(text);
                std::vector<std::string> tok;
                for (std::string w; ls >> w;)
                        tok.push_back(w);
                if (tok.empty())
                        continue;
                if (tok.size() < 2)
                        throw ParseError("line " + std::to_string(line) + ": missing node kind");
                int id = int(to_i64(tok[0], line));
                const std::string &kind = tok[1];
                Node n;
                size_t nargs = 0;
                if (kind == "input") {
                        n.kind = NodeKind::Input;
                } else if (kind == "output") {
                        n.kind = NodeKind::Output;
                } else if (kind == "branch") {
                        n.kind = NodeKind::Branch;
                } else if (kind == "shl") {
                        n.kind = NodeKind::ShiftLeft;
                } else if (kind == "shr") {
                        n.kind = NodeKind::ShiftRight;
                } else if (kind == "oracle") {
                        n.kind = NodeKind::Oracle;
                        nargs = 1;
                } else if (kind == "load") {
                        n.kind = NodeKind::Compute;
                        n.op = OpCode::Load;
                        nargs = 1;
                } else if (kind == "copy") {
                        n.kind = NodeKind::Compute;
                        n.op = OpCode::Copy;
                        nargs = 1;
                } else if (kind == "add" || kind == "sub" || kind == "mul" || kind == "div") {
                        n.kind = NodeKind::Compute;
                        n.op = kind == "add" ? OpCode::Add : kind == "sub" ? OpCode::Sub
                                : kind == "mul" ? OpCode::Mul : OpCode::Div;
                        nargs = 2;
                } else {
                        throw ParseError("line " + std::to_string(line) + ": unknown node kind '" + kind + "'");
                }
                if (tok.size() < 2 + nargs)
                        throw ParseError("line " + std::to_string(line) + ": missing arguments");
                if (nargs >= 1) {
                        if (n.kind == NodeKind::Compute && n.op == OpCode::Load)
                                n.c = parse_rational(tok[2]);
                        else if (n.kind == NodeKind::Oracle)
                                n.len = to_i64(tok[2], line);
                        else
                                n.j = to_i64(tok[2], line);
                }
                if (nargs == 2)
                        n.k = to_i64(tok[3], line);
                size_t nsucc = tok.size() - 2 - nargs;
                if (n.kind == NodeKind::Output) {
                        if (nsucc != 0)
                                throw ParseError("line " + std::to_string(line) + ": output node has no successors");
                } else if (n.kind == NodeKind::Branch) {
                        if (nsucc != 2)
                                throw ParseError("line " + std::to_string(line) + ": branch needs beta+ and beta-");
                        n.beta_plus = int(to_i64(tok[2 + nargs], line));
                        n.beta_minus = int(to_i64(tok[3 + nargs], line));
                } else {
                        if (nsucc < 1 || nsucc > 2)
                                throw ParseError("line " + std::to_string(line) + ": bad successor list");
                        n.beta_plus = int(to_i64(tok[2 + nargs], line));
                        n.beta_minus = nsucc == 2 ? int(to_i64(tok[3 + nargs], line)) : n.beta_plus;
                }
                if (!byid.emplace(id, n).second)
                        throw ParseError("line " + std::to_string(line) + ": duplicate node id " + std::to_string(id));
        }
        std::vector<Node> nodes;
        int expect = 1;
        for (auto &[id, n] : byid) {
                if (id != expect)
                        throw ParseError("node ids must be 1..N without gaps (missing " + std::to_string(expect) + ")");
                nodes.push_back(n);
                ++expect;
        }
        Machine m(std::move(nodes));
        m.validate();
        return m;
}

Machine Machine::parse_string(const std::string &text)
{
        std::istringstream in(text);
        return parse(in);
}

Machine Machine::load_file(const std::string &path)
{
        std::ifstream in(path);
        if (!in)
                throw ParseError("cannot open " + path);
        return parse(in);
}

std::string Machine::str() const
{
        std::ostringstream os;
        for (int id = 1; id <= size(); ++id) {
                const Node &n = node(id);
                os << id << ' ';
                switch (n.kind) {
                case NodeKind::Input: os << "input"; break;
                case NodeKind::Output: os << "output\n"; continue;
                case NodeKind::Branch: os << "branch"; break;
                case NodeKind::ShiftLeft: os << "shl"; break;
                case NodeKind::ShiftRight: os << "shr"; break;
                case NodeKind::Oracle: os << "oracle " << n.len; break;
                case NodeKind::Compute:
                        os << op_name(n.op);
                        if (n.op == OpCode::Load)
                                os << ' ' << to_string(n.c);
                        else if (n.op == OpCode::Copy)
                                os << ' ' << n.j;
                        else
                                os << ' ' << n.j << ' ' << n.k;
                        break;
                }
                os << ' ' << n.beta_plus;
                if (n.kind == NodeKind::Branch)
                        os << ' ' << n.beta_minus;
                os << '\n';
        }
        return os.str();
}

static const Rational ZERO(0);

const Rational &MachineState::get(int64_t i) const
{
        auto it = store_.find(i + offset_);
        return it == store_.end() ? ZERO : it->second;
}

void MachineState::set(int64_t i, const Rational &v)
{
        if (sgn(v) == 0)
                store_.erase(i + offset_);
        else
                store_[i + offset_] = v;
}

std::map<int64_t, Rational> MachineState::cells() const
{
        std::map<int64_t, Rational> out;
        for (const auto &[k, v] : store_)
                out.emplace(k - offset_, v);
        return out;
}

MachineState input_state(const std::vector<Rational> &x)
{
        MachineState s;
        int64_t n = int64_t(x.size());
        for (int64_t i = 1; i <= n; ++i) {
                s.set(-i, 1);
                s.set(i, x[i - 1]);
        }
        return s;
}

std::vector<Rational> Trace::errors() const
{
        std::vector<Rational> out;
        for (const auto &[i, e] : initial_errors)
                out.push_back(e);
        for (const auto &s : steps)
                if (s.op == "load" || s.op == "add" || s.op == "sub" || s.op == "mul" || s.op == "div")
                        if (s.wrote)
                                out.push_back(s.error);
        return out;
}

MachineState Trace::replay() const
{
        MachineState st;
        for (const auto &[i, v] : initial)
                st.set(i, v);
        for (const auto &s : steps) {
                if (s.shift > 0)
                        st.shift_left();
                else if (s.shift < 0)
                        st.shift_right();
                if (s.wrote)
                        st.set(s.index, s.value);
        }
        st.node = final_state.node;
        return st;
}

std::string Trace::dump() const
{
        std::ostringstream os;
        for (const auto &s : steps) {
                os << s.t << ' ' << s.node << ' ' << s.op << ' ';
                if (s.wrote)
                        os << s.index << ' ' << to_string(s.value) << ' ' << to_string(s.error);
                else
                        os << "- - -";
                os << '\n';
        }
        return os.str();
}

Trace run(const Machine &m, const std::vector<Rational> &input, const EvalMode &mode, int64_t step_budget,
          const RunOptions &opts)
{
        if (step_budget < 0)
                throw PreconditionError("negative step budget");
        Trace tr;
        tr.input = input;
        tr.mode = mode;
        ErrorStream stream(mode.errors, mode.epsilon());
        MachineState st;
        for (const auto &[i, v] : input_state(input).cells()) {
                Rational err;
                Rational w = mode_apply(mode, stream, v, err);
                st.set(i, w);
                tr.initial_errors.emplace_back(i, err);
        }
        tr.initial = st.cells();
        st.node = 1;
        const int N = m.size();
        int64_t t = 0;
        while (true) {
                if (st.node == N) {
                        tr.terminated = true;
                        break;
                }
                if (t >= step_budget)
                        break;
                const Node &nd = m.node(st.node);
                Step s;
                s.t = t;
                s.node = st.node;
                int next = nd.beta_plus;
                bool stuck = false;
                switch (nd.kind) {
                case NodeKind::Input:
                        s.op = "input";
                        break;
                case NodeKind::Output:
                        break;
                case NodeKind::Branch:
                        s.op = "branch";
                        next = sgn(st.get(0)) > 0 ? nd.beta_plus : nd.beta_minus;
                        stuck = next == st.node;
                        break;
                case NodeKind::ShiftLeft:
                        s.op = "shl";
                        s.shift = 1;
                        st.shift_left();
                        break;
                case NodeKind::ShiftRight:
                        s.op = "shr";
                        s.shift = -1;
                        st.shift_right();
                        break;
                case NodeKind::Oracle: {
                        s.op = "oracle";
                        if (!opts.oracle)
                                throw MachineError("oracle node without an oracle");
                        std::vector<Rational> q;
                        for (int64_t i = 1; i <= nd.len; ++i)
                                q.push_back(st.get(i));
                        auto [ans, cost] = opts.oracle(st.get(0), q, mode);
                        s.wrote = true;
                        s.index = 0;
                        s.value = ans;
                        s.extra = std::max<int64_t>(cost, 1) - 1;
                        st.set(0, ans);
                        break;
                }
                case NodeKind::Compute: {
                        s.op = op_name(nd.op);
                        const Rational &a = st.get(nd.j);
                        const Rational &b = st.get(nd.k);
                        Rational v;
                        switch (nd.op) {
                        case OpCode::Load:
                                v = nd.real ? nd.real(mode.precision) : nd.c;
                                break;
                        case OpCode::Add: v = a + b; break;
                        case OpCode::Sub: v = a - b; break;
                        case OpCode::Mul: v = a * b; break;
                        case OpCode::Copy: v = a; break;
                        case OpCode::Div:
                                if (sgn(b) == 0) {
                                        stuck = true;
                                        next = st.node;
                                } else {
                                        v = a / b;
                                }
                                break;
                        }
                        if (stuck)
                                break;
                        Rational err;
                        if (nd.op != OpCode::Copy)
                                v = mode_apply(mode, stream, v, err);
                        s.wrote = true;
                        s.index = 0;
                        s.value = v;
                        s.error = err;
                        st.set(0, v);
                        break;
                }
                }
                if (opts.record)
                        tr.steps.push_back(s);
                if (stuck) {
                        /* A node that maps to itself without changing the state never leaves. */
                        t = step_budget;
                        break;
                }
                t += 1 + s.extra;
                st.node = next;
        }
        tr.T = std::min(t, step_budget);
        tr.final_state = st;
        tr.accepted = tr.terminated && sgn(st.get(0)) > 0;
        return tr;
}

Trace run_timed_universal(const Machine &m, const std::vector<Rational> &input, int64_t T, const EvalMode &mode,
                          const RunOptions &opts)
{
        if (T < 0)
                throw PreconditionError("negative time bound");
        Trace tr = run(m, input, mode, T, opts);
        if (!tr.terminated)
                tr.accepted = false;
        return tr;
}

bool validate_weak_trace(const Machine &m, const Trace &tr, const Rational &eps)
{
        auto errs = tr.errors();
        for (const auto &e : errs)
                if (abs(e) > eps)
                        return false;
        if (!(tr.replay() == tr.final_state))
                return false;
        Trace again = run(m, tr.input, EvalMode::weak(eps, ErrorSource::scripted(errs)), tr.T);
        return again.final_state == tr.final_state && again.accepted == tr.accepted &&
               again.terminated == tr.terminated;
}

std::optional<Trace> adversarial_search(const Machine &m, const std::vector<Rational> &input, const Rational &eps,
                                        int64_t trials, int64_t step_budget, uint64_t seed, const RunOptions &opts)
{
        if (sgn(eps) <= 0 || eps >= Rational(1, 4))
                throw PreconditionError("adversarial search needs 0 < eps < 1/4");
        for (int64_t i = 0; i < trials; ++i) {
                int fixed = i == 0 ? 1 : i == 1 ? -1 : 0;
                EvalMode mode = EvalMode::weak(eps, ErrorSource::adversarial(seed + uint64_t(i), fixed));
                RunOptions o = opts;
                o.record = true;
                Trace tr = run(m, input, mode, step_budget, o);
                if (tr.accepted)
                        return tr;
        }
        return std::nullopt;
}

Rational BitExpansion::value() const
{
        Rational acc = 0;
        for (size_t i = 0; i < bits.size(); ++i)
                if (bits[i])
                        acc += pow2(-int64_t(i));
        return Rational(s) * pow2(e) * acc;
}

Rational horner_bits(const BitExpansion &b, Arith &A)
{
        Rational one = A.load(1), two = A.load(2), half = A.load(Rational(1, 2));
        Rational acc = 0;
        for (size_t i = b.bits.size(); i-- > 0;) {
                acc = A.mul(acc, half);
                if (b.bits[i])
                        acc = A.add(acc, one);
        }
        for (int64_t i = 0; i < b.e; ++i)
                acc = A.mul(acc, two);
        for (int64_t i = 0; i > b.e; --i)
                acc = A.mul(acc, half);
        return A.mul(acc, A.load(b.s));
}

BitExpansion bit_expansion(const Rational &x, const EvalMode &mode, int64_t max_steps)
{
        BitExpansion r;
        Arith A(mode);
        auto out_of_time = [&] { return A.steps() > max_steps; };
        if (sgn(x) == 0) {
                r.is_zero = true;
                return r;
        }
        r.s = A.positive(x) ? 1 : -1;
        Rational one = A.load(1), two = A.load(2);
        Rational y = A.mul(x, A.load(r.s));
        while (A.positive(A.sub(one, y))) {
                r.e -= 1;
                y = A.mul(two, y);
                if (out_of_time())
                        break;
        }
        while (!out_of_time() && !A.positive(A.sub(two, y))) {
                r.e += 1;
                y = A.div(y, two);
        }
        while (!out_of_time() && A.positive(y)) {
                int f = A.positive(A.sub(one, y)) ? 0 : 1;
                r.bits.push_back(f);
                if (f)
                        y = A.sub(y, one);
                y = A.mul(two, y);
        }
        if (out_of_time()) {
                r.terminated = false;
                r.steps = A.steps();
                return r;
        }
        Rational acc = horner_bits(r, A);
        r.rejected = A.sub(x, acc) != 0;
        r.steps = A.steps();
        return r;
}

} // namespace bssfp
