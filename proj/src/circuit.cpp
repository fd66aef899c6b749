#include "bssfp/circuit.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

namespace bssfp {

int Circuit::add_input()
{
        nodes_.push_back(CNode{CKind::In, Op::Add, 0, 0, 0, 0});
        return size();
}

int Circuit::add_const(const Rational &c)
{
        nodes_.push_back(CNode{CKind::Const, Op::Add, 0, 0, 0, c});
        return size();
}

int Circuit::add_op(Op op, int j, int k)
{
        if (j < 1 || k < 1 || j > size() || k > size())
                throw CircuitError("operand refers to a later or missing node");
        nodes_.push_back(CNode{CKind::Op, op, j, k, 0, 0});
        return size();
}

int Circuit::add_sel(int j, int k, int l)
{
        if (std::min({j, k, l}) < 1 || std::max({j, k, l}) > size())
                throw CircuitError("selector refers to a later or missing node");
        nodes_.push_back(CNode{CKind::Sel, Op::Add, j, k, l, 0});
        return size();
}

int Circuit::inputs() const
{
        return int(std::count_if(nodes_.begin(), nodes_.end(), [](const CNode &n) { return n.kind == CKind::In; }));
}

int64_t Circuit::length() const
{
        int64_t len = size();
        for (const auto &n : nodes_)
                if (n.kind == CKind::Const)
                        len += int64_t(mpz_sizeinbase(n.c.get_num_mpz_t(), 2) + mpz_sizeinbase(n.c.get_den_mpz_t(), 2));
        return len;
}

void Circuit::validate() const
{
        if (nodes_.empty())
                throw CircuitError("empty circuit");
        for (int id = 1; id <= size(); ++id) {
                const CNode &n = node(id);
                auto pred_ok = [&](int p) { return p >= 1 && p < id; };
                if (n.kind == CKind::Op && !(pred_ok(n.j) && pred_ok(n.k)))
                        throw CircuitError("node " + std::to_string(id) + ": predecessors must precede the node");
                if (n.kind == CKind::Sel && !(pred_ok(n.j) && pred_ok(n.k) && pred_ok(n.l)))
                        throw CircuitError("node " + std::to_string(id) + ": predecessors must precede the node");
        }
}

static int to_int(const std::string &tok, int line)
{
        try {
                size_t pos;
                int v = std::stoi(tok, &pos);
                if (pos != tok.size())
                        throw std::invalid_argument(tok);
                return v;
        } catch (const std::exception &) {
                throw ParseError("line " + std::to_string(line) + ": expected integer, got '" + tok + "'");
        }
}

static std::vector<std::string> tokens(std::string text)
{
        auto h = text.find('#');
        if (h != std::string::npos)
                text.erase(h);
        std::istringstream ls(text);
        std::vector<std::string> tok;
        for (std::string w; ls >> w;)
                tok.push_back(w);
        return tok;
}

Circuit Circuit::parse(std::istream &in)
{
        Circuit c;
        std::string text;
        int line = 0;
        while (std::getline(in, text)) {
                ++line;
                auto tok = tokens(text);
                if (tok.empty())
                        continue;
                auto fail = [&](const std::string &msg) {
                        throw ParseError("line " + std::to_string(line) + ": " + msg);
                };
                if (tok.size() < 2)
                        fail("missing node kind");
                int id = to_int(tok[0], line);
                if (id != c.size() + 1)
                        fail("expected node id " + std::to_string(c.size() + 1));
                const std::string &kind = tok[1];
                try {
                        if (kind == "in" && tok.size() == 2) {
                                c.add_input();
                        } else if (kind == "const" && tok.size() == 3) {
                                c.add_const(parse_rational(tok[2]));
                        } else if (kind == "op" && tok.size() == 5) {
                                const std::string &o = tok[2];
                                Op op;
                                if (o == "+")
                                        op = Op::Add;
                                else if (o == "-")
                                        op = Op::Sub;
                                else if (o == "*")
                                        op = Op::Mul;
                                else if (o == "/")
                                        op = Op::Div;
                                else
                                        fail("unknown operator '" + o + "'");
                                c.add_op(op, to_int(tok[3], line), to_int(tok[4], line));
                        } else if (kind == "sel" && tok.size() == 5) {
                                c.add_sel(to_int(tok[2], line), to_int(tok[3], line), to_int(tok[4], line));
                        } else {
                                fail("malformed node '" + kind + "'");
                        }
                } catch (const CircuitError &e) {
                        fail(e.what());
                } catch (const ParseError &e) {
                        std::string msg = e.what();
                        if (msg.rfind("line ", 0) == 0)
                                throw;
                        fail(msg);
                }
        }
        c.validate();
        return c;
}

Circuit Circuit::parse_string(const std::string &text)
{
        std::istringstream in(text);
        return parse(in);
}

Circuit Circuit::load_file(const std::string &path)
{
        std::ifstream in(path);
        if (!in)
                throw ParseError("cannot open " + path);
        return parse(in);
}

std::string Circuit::str() const
{
        std::ostringstream os;
        for (int id = 1; id <= size(); ++id) {
                const CNode &n = node(id);
                os << id << ' ';
                switch (n.kind) {
                case CKind::In: os << "in"; break;
                case CKind::Const: os << "const " << to_string(n.c); break;
                case CKind::Op: os << "op " << op_char(n.op) << ' ' << n.j << ' ' << n.k; break;
                case CKind::Sel: os << "sel " << n.j << ' ' << n.k << ' ' << n.l; break;
                }
                os << '\n';
        }
        return os.str();
}

std::vector<Rational> circuit_input(const Circuit &c, const std::vector<Rational> &x, const Rational &delta)
{
        std::vector<Rational> in = x;
        if (c.inputs() == int(x.size()) + 1)
                in.push_back(delta);
        else if (c.inputs() != int(x.size()))
                throw PreconditionError("circuit reads " + std::to_string(c.inputs()) + " inputs, got " +
                                        std::to_string(x.size()));
        return in;
}

CircuitEval eval_circuit(const Circuit &c, const std::vector<Rational> &input, const EvalMode &mode)
{
        if (int(input.size()) != c.inputs())
                throw PreconditionError("circuit reads " + std::to_string(c.inputs()) + " inputs, got " +
                                        std::to_string(input.size()));
        CircuitEval ev;
        ErrorStream stream(mode.errors, mode.epsilon());
        size_t next_in = 0;
        for (int id = 1; id <= c.size(); ++id) {
                const CNode &n = c.node(id);
                Rational v, err;
                switch (n.kind) {
                case CKind::In: {
                        Rational x = input[next_in++];
                        x.canonicalize();
                        v = mode_apply(mode, stream, x, err);
                        break;
                }
                case CKind::Const:
                        v = mode_apply(mode, stream, n.c, err);
                        break;
                case CKind::Op: {
                        const Rational &a = ev.w[n.j - 1], &b = ev.w[n.k - 1];
                        if (n.op == Op::Div && sgn(b) == 0) {
                                ev.ok = false;
                                ev.failed_node = id;
                                return ev;
                        }
                        v = mode_apply(mode, stream, exact_op(n.op, a, b), err);
                        break;
                }
                case CKind::Sel:
                        v = sgn(ev.w[n.l - 1]) > 0 ? ev.w[n.j - 1] : ev.w[n.k - 1];
                        break;
                }
                ev.w.push_back(v);
                ev.errors.push_back(err);
        }
        ev.accepted = sgn(ev.output()) > 0;
        return ev;
}

WeakWitness WeakWitness::parse(std::istream &in)
{
        WeakWitness wit;
        bool have_delta = false;
        std::string text;
        int line = 0;
        while (std::getline(in, text)) {
                ++line;
                auto tok = tokens(text);
                if (tok.empty())
                        continue;
                auto where = "line " + std::to_string(line) + ": ";
                if (tok[0] == "delta") {
                        if (tok.size() != 2)
                                throw ParseError(where + "delta takes one value");
                        wit.delta = parse_rational(tok[1]);
                        have_delta = true;
                } else if (tok[0] == "x") {
                        for (size_t i = 1; i < tok.size(); ++i)
                                wit.x.push_back(parse_rational(tok[i]));
                } else {
                        if (tok.size() != 2)
                                throw ParseError(where + "expected '<node> <value>'");
                        int id = to_int(tok[0], line);
                        if (id != int(wit.w.size()) + 1)
                                throw ParseError(where + "expected node " + std::to_string(wit.w.size() + 1));
                        if (tok[1].find('@') != std::string::npos)
                                wit.w.push_back(Float::parse(tok[1]));
                        else
                                wit.w.push_back(Float::exact(parse_rational(tok[1])));
                }
        }
        if (!have_delta)
                throw ParseError("witness has no delta header");
        return wit;
}

WeakWitness WeakWitness::parse_string(const std::string &text)
{
        std::istringstream in(text);
        return parse(in);
}

WeakWitness WeakWitness::load_file(const std::string &path)
{
        std::ifstream in(path);
        if (!in)
                throw ParseError("cannot open " + path);
        return parse(in);
}

std::string WeakWitness::str() const
{
        std::ostringstream os;
        os << "delta " << to_string(delta) << "\nx";
        for (const auto &v : x)
                os << ' ' << to_string(v);
        os << '\n';
        for (size_t i = 0; i < w.size(); ++i)
                os << i + 1 << ' ' << w[i].str() << '\n';
        return os.str();
}

WeakWitness witness_from_eval(const std::vector<Rational> &x, const Rational &delta, const CircuitEval &ev)
{
        WeakWitness wit;
        wit.x = x;
        wit.delta = delta;
        for (const auto &v : ev.w)
                wit.w.push_back(Float::exact(v));
        return wit;
}

static bool within(const Rational &w, const Rational &v, const Rational &delta)
{
        return abs(w - v) <= delta * abs(v);
}

WitnessCheck check_weak_witness_detail(const Circuit &c, const WeakWitness &wit)
{
        return check_weak_witness_detail(c, wit, wit.delta);
}

WitnessCheck check_weak_witness_detail(const Circuit &c, const WeakWitness &wit, const Rational &bound)
{
        WitnessCheck r;
        if (sgn(wit.delta) < 0 || sgn(bound) < 0) {
                r.reason = "negative delta";
                return r;
        }
        if (int(wit.w.size()) != c.size()) {
                r.reason = "witness has " + std::to_string(wit.w.size()) + " values for " +
                           std::to_string(c.size()) + " nodes";
                return r;
        }
        std::vector<Rational> in;
        try {
                in = circuit_input(c, wit.x, wit.delta);
        } catch (const PreconditionError &e) {
                r.reason = e.what();
                return r;
        }
        size_t next_in = 0;
        for (int id = 1; id <= c.size(); ++id) {
                const CNode &n = c.node(id);
                const Rational &w = wit.w[id - 1].value();
                bool good = true;
                switch (n.kind) {
                case CKind::In:
                        good = within(w, in[next_in++], bound);
                        break;
                case CKind::Const:
                        good = within(w, n.c, bound);
                        break;
                case CKind::Op: {
                        const Rational &a = wit.w[n.j - 1].value(), &b = wit.w[n.k - 1].value();
                        if (n.op == Op::Div && sgn(b) == 0) {
                                r.failed_node = id;
                                r.reason = "division by zero";
                                return r;
                        }
                        good = within(w, exact_op(n.op, a, b), bound);
                        break;
                }
                case CKind::Sel: {
                        const Rational &s = sgn(wit.w[n.l - 1].value()) > 0 ? wit.w[n.j - 1].value()
                                                                            : wit.w[n.k - 1].value();
                        good = w == s;
                        break;
                }
                }
                if (!good) {
                        r.failed_node = id;
                        r.reason = "relative error bound violated";
                        return r;
                }
        }
        if (sgn(wit.w.back().value()) <= 0) {
                r.failed_node = c.size();
                r.reason = "output not positive";
                return r;
        }
        r.ok = true;
        return r;
}

bool check_weak_witness(const Circuit &c, const WeakWitness &wit)
{
        return check_weak_witness_detail(c, wit).ok;
}

bool check_weak_witness(const Circuit &c, const WeakWitness &wit, const Rational &bound)
{
        return check_weak_witness_detail(c, wit, bound).ok;
}

namespace {

Rational grid_down(const Rational &x, const Precision &p)
{
        Float r = round(x, p);
        if (r.value() <= x)
                return r.value();
        return r.value() - neighbor_gap(r).first;
}

Rational grid_up(const Rational &x, const Precision &p)
{
        Float r = round(x, p);
        if (r.value() >= x)
                return r.value();
        return r.value() + neighbor_gap(r).second;
}

/* Depth-first search for a representable accepting weak (delta/2)-computation. */
struct RhoDfs {
        const Circuit &c;
        Precision p;
        Rational half;
        std::vector<Rational> in;
        std::vector<Rational> w;
        int64_t leaves = 0;
        int64_t max_leaves;

        std::vector<Rational> candidates(const Rational &v) const
        {
                if (sgn(v) == 0)
                        return {Rational(0)};
                Rational r = half * abs(v);
                Rational lo = v - r, hi = v + r;
                std::vector<Rational> out;
                for (Rational q : {fl(v, p), grid_up(lo, p), grid_down(hi, p)})
                        if (q >= lo && q <= hi && std::find(out.begin(), out.end(), q) == out.end())
                                out.push_back(q);
                return out;
        }

        bool go(int id, size_t next_in)
        {
                if (leaves >= max_leaves)
                        return false;
                if (id > c.size()) {
                        ++leaves;
                        return sgn(w.back()) > 0;
                }
                const CNode &n = c.node(id);
                Rational v;
                switch (n.kind) {
                case CKind::In: v = in[next_in++]; break;
                case CKind::Const: v = n.c; break;
                case CKind::Op:
                        if (n.op == Op::Div && sgn(w[n.k - 1]) == 0)
                                return false;
                        v = exact_op(n.op, w[n.j - 1], w[n.k - 1]);
                        break;
                case CKind::Sel:
                        w.push_back(sgn(w[n.l - 1]) > 0 ? w[n.j - 1] : w[n.k - 1]);
                        if (go(id + 1, next_in))
                                return true;
                        w.pop_back();
                        return false;
                }
                for (const auto &q : candidates(v)) {
                        w.push_back(q);
                        if (go(id + 1, next_in))
                                return true;
                        w.pop_back();
                }
                return false;
        }
};

std::vector<std::vector<Rational>> default_inputs(int n)
{
        const std::vector<Rational> grid = {1, -1, 0, 2, Rational(1, 2)};
        std::vector<std::vector<Rational>> out = {{}};
        for (int i = 0; i < n; ++i) {
                std::vector<std::vector<Rational>> next;
                for (const auto &pre : out)
                        for (const auto &g : grid) {
                                auto v = pre;
                                v.push_back(g);
                                next.push_back(v);
                        }
                out = std::move(next);
                if (out.size() > 25)
                        out.resize(25);
        }
        return out;
}

/* Deltas in (eps, 1/8), largest first. */
std::vector<Rational> delta_ladder(const Rational &eps)
{
        std::vector<Rational> out = {Rational(7, 64)};
        for (int k = 3; k < 64; ++k) {
                for (Rational d : {Rational(Rational(3) * pow2(-k - 2)), pow2(-k - 1)})
                        if (d > eps && d < Rational(1, 8))
                                out.push_back(d);
                if (pow2(-k - 1) <= eps)
                        break;
        }
        std::sort(out.begin(), out.end(), [](const Rational &a, const Rational &b) { return a > b; });
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
}

} // namespace

RhoEstimate estimate_rho(const Circuit &c, const RhoSearch &s)
{
        if (c.size() > s.max_nodes)
                throw PreconditionError("circuit has " + std::to_string(c.size()) + " nodes, search limit is " +
                                        std::to_string(s.max_nodes));
        int nx = c.inputs() > 0 ? c.inputs() - 1 : 0;
        auto xs = s.inputs.empty() ? default_inputs(nx) : s.inputs;
        RhoEstimate est;
        for (int t = std::max(s.t_min, 4); t <= s.t_max; ++t) {
                Rational eps = pow2(-t);
                for (const auto &delta : delta_ladder(eps)) {
                        for (const auto &x : xs) {
                                RhoDfs dfs{c, Precision::digits(t), delta / 2, circuit_input(c, x, delta), {}, 0,
                                           s.max_leaves - est.leaves};
                                bool found = dfs.go(1, 0);
                                est.leaves += dfs.leaves;
                                if (found) {
                                        WeakWitness wit;
                                        wit.x = x;
                                        wit.delta = delta;
                                        for (const auto &v : dfs.w)
                                                wit.w.push_back(round(v, Precision::digits(t)));
                                        est.rho = eps;
                                        est.eps = eps;
                                        est.witness = wit;
                                        return est;
                                }
                                if (est.leaves >= s.max_leaves)
                                        return est;
                        }
                }
        }
        return est;
}

} // namespace bssfp
