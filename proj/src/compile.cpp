#include "bssfp/compile.hpp"

#include <cmath>
#include <sstream>

namespace bssfp {

const char *backend_name(Backend b)
{
        return b == Backend::Lagrange ? "lagrange" : "selector";
}

namespace {

class Builder {
public:
        Builder(const Machine &m, int64_t T, const std::vector<Rational> &x, int n_free, Backend b)
                : m_(m), N_(m.size()), T_(T)
        {
                if (T < 0)
                        throw PreconditionError("negative time bound");
                if (n_free < 0)
                        throw PreconditionError("negative free input count");
                for (const auto &n : m.nodes()) {
                        if (n.kind == NodeKind::Oracle)
                                throw PreconditionError("oracle nodes cannot be compiled");
                        if (n.kind == NodeKind::Compute && n.op == OpCode::Load && n.real)
                                throw PreconditionError("real constants cannot be compiled");
                        if (n.kind == NodeKind::Compute) {
                                R_ = std::max<int64_t>(R_, std::abs(n.j));
                                R_ = std::max<int64_t>(R_, std::abs(n.k));
                        }
                        has_shift_ |= n.kind == NodeKind::ShiftLeft || n.kind == NodeKind::ShiftRight;
                }
                cc_.backend = b;
                cc_.T = T;
                cc_.N = N_;
                cc_.n_fixed = int(x.size());
                cc_.n_free = n_free;
                d_ = 0;
                while ((1 << d_) < N_)
                        ++d_;
                build(x, n_free);
        }

        CompiledCircuit take() { return std::move(cc_); }

private:
        const Machine &m_;
        int N_;
        int64_t T_;
        int64_t R_ = 0;
        int d_;
        bool has_shift_ = false;
        CompiledCircuit cc_;
        Circuit &c() { return cc_.circuit; }
        int zero_ = 0, one_ = 0;
        std::map<int64_t, int> ints_;
        /* nu(t): bits for the selector tree, one node for Lagrange */
        std::vector<int> nu_;
        /* Lagrange indicators of the current step */
        std::vector<int> ind_;

        int disc(int id)
        {
                cc_.discrete_nodes.insert(id);
                return id;
        }

        int factor(int id)
        {
                cc_.factor_nodes.insert(id);
                return id;
        }

        int int_const(int64_t v)
        {
                auto it = ints_.find(v);
                if (it != ints_.end())
                        return it->second;
                int id = disc(c().add_const(Rational(v)));
                ints_[v] = id;
                return id;
        }

        int sel(int j, int k, int l, bool discrete)
        {
                if (j == k)
                        return j;
                int id = c().add_sel(j, k, l);
                return discrete ? disc(id) : id;
        }

        /* leaves[i - 1] for machine node i; picks the leaf of nu(t). */
        int select(const std::vector<int> &leaves, bool discrete)
        {
                bool same = true;
                for (int v : leaves)
                        same &= v == leaves[0];
                if (same)
                        return leaves[0];
                if (cc_.backend == Backend::SelectorTree) {
                        std::vector<int> level = leaves;
                        level.resize(size_t(1) << d_, leaves.back());
                        for (int b = 0; b < d_; ++b) {
                                std::vector<int> next;
                                for (size_t i = 0; i < level.size(); i += 2)
                                        next.push_back(sel(level[i + 1], level[i], nu_[b], discrete));
                                level = std::move(next);
                        }
                        return level[0];
                }
                int acc = zero_;
                for (int i = 0; i < N_; ++i)
                        acc = sel(leaves[i], acc, ind_[i], discrete);
                return acc;
        }

        /* Lagrange basis values L_i(nu) for i = 1..N. */
        void lagrange_indicators()
        {
                ind_.assign(N_, 0);
                for (int i = 1; i <= N_; ++i) {
                        int acc = 0;
                        for (int j = 1; j <= N_; ++j) {
                                if (j == i)
                                        continue;
                                int diff = factor(c().add_op(Op::Sub, nu_[0], int_const(j)));
                                int f = factor(c().add_op(Op::Div, diff, int_const(i - j)));
                                acc = acc ? factor(c().add_op(Op::Mul, acc, f)) : f;
                        }
                        if (acc) {
                                cc_.factor_nodes.erase(acc);
                                disc(acc);
                        }
                        ind_[i - 1] = acc ? acc : one_;
                }
        }

        /* Discrete encoding of node number v. */
        std::vector<int> encode(int v)
        {
                if (cc_.backend == Backend::Lagrange)
                        return {int_const(v)};
                std::vector<int> bits;
                for (int b = 0; b < d_; ++b)
                        bits.push_back(((v - 1) >> b & 1) ? one_ : zero_);
                return bits;
        }

        void build(const std::vector<Rational> &x, int n_free)
        {
                int64_t n_m = int64_t(x.size()) + n_free;
                std::vector<int> free_in;
                for (int i = 0; i < n_free; ++i)
                        free_in.push_back(c().add_input());
                zero_ = disc(c().add_const(0));
                one_ = disc(c().add_const(1));
                ints_[0] = zero_;
                ints_[1] = one_;

                std::map<int64_t, int> cur;
                int64_t L = R_ + T_;
                for (int64_t i = 1; i <= n_m; ++i) {
                        int mk = c().add_const(1);
                        int v = i <= int64_t(x.size()) ? c().add_const(x[i - 1]) : free_in[i - 1 - x.size()];
                        cc_.initial_nodes[-i] = mk;
                        cc_.initial_nodes[i] = v;
                }
                for (int64_t k = -L; k <= L; ++k) {
                        auto it = cc_.initial_nodes.find(k);
                        cur[k] = it == cc_.initial_nodes.end() ? zero_ : it->second;
                }
                nu_ = encode(1);
                cc_.nu_nodes.push_back(nu_);

                for (int64_t t = 0; t < T_; ++t) {
                        int first = c().size() + 1;
                        if (cc_.backend == Backend::Lagrange)
                                lagrange_indicators();
                        std::vector<int> s0_leaf(N_), ops(N_ + 1, 0);
                        std::vector<std::vector<int>> nu_leaf(N_);
                        for (int i = 1; i <= N_; ++i) {
                                const Node &n = m_.node(i);
                                int leaf = cur[0];
                                std::vector<int> next = encode(n.kind == NodeKind::Output ? N_ : n.beta_plus);
                                switch (n.kind) {
                                case NodeKind::Branch: {
                                        auto minus = encode(n.beta_minus);
                                        for (size_t b = 0; b < next.size(); ++b)
                                                next[b] = sel(next[b], minus[b], cur[0], true);
                                        break;
                                }
                                case NodeKind::ShiftLeft: leaf = cur[1]; break;
                                case NodeKind::ShiftRight: leaf = cur[-1]; break;
                                case NodeKind::Compute:
                                        switch (n.op) {
                                        case OpCode::Load: leaf = ops[i] = c().add_const(n.c); break;
                                        case OpCode::Copy: leaf = cur[n.j]; break;
                                        case OpCode::Add: leaf = ops[i] = c().add_op(Op::Add, cur[n.j], cur[n.k]); break;
                                        case OpCode::Sub: leaf = ops[i] = c().add_op(Op::Sub, cur[n.j], cur[n.k]); break;
                                        case OpCode::Mul: leaf = ops[i] = c().add_op(Op::Mul, cur[n.j], cur[n.k]); break;
                                        case OpCode::Div: {
                                                /* nz > 0 iff s_0 != 0; the node loops on itself otherwise */
                                                int neg = c().add_op(Op::Sub, zero_, cur[0]);
                                                cc_.guard_nodes.insert(neg);
                                                int nz = sel(one_, sel(one_, zero_, neg, true), cur[0], true);
                                                int den = c().add_sel(cur[0], one_, nz);
                                                ops[i] = c().add_op(Op::Div, cur[n.j], den);
                                                leaf = c().add_sel(ops[i], cur[0], nz);
                                                auto self = encode(i);
                                                for (size_t b = 0; b < next.size(); ++b)
                                                        next[b] = sel(next[b], self[b], nz, true);
                                                break;
                                        }
                                        }
                                        break;
                                default: break;
                                }
                                s0_leaf[i - 1] = leaf;
                                nu_leaf[i - 1] = next;
                        }
                        cc_.op_nodes.push_back(ops);

                        std::map<int64_t, int> nxt;
                        nxt[0] = select(s0_leaf, false);
                        int64_t Ln = R_ + T_ - t - 1;
                        int shl = zero_, shr = zero_;
                        if (has_shift_) {
                                std::vector<int> a(N_), b(N_);
                                for (int i = 1; i <= N_; ++i) {
                                        a[i - 1] = m_.node(i).kind == NodeKind::ShiftLeft ? one_ : zero_;
                                        b[i - 1] = m_.node(i).kind == NodeKind::ShiftRight ? one_ : zero_;
                                }
                                shl = select(a, true);
                                shr = select(b, true);
                        }
                        for (int64_t k = -Ln; k <= Ln; ++k) {
                                if (k == 0)
                                        continue;
                                if (!has_shift_) {
                                        nxt[k] = cur[k];
                                        continue;
                                }
                                int inner = shr == zero_ ? cur[k] : sel(cur[k - 1], cur[k], shr, false);
                                nxt[k] = shl == zero_ ? inner : sel(cur[k + 1], inner, shl, false);
                        }
                        std::vector<int> nu_next;
                        for (size_t b = 0; b < nu_.size(); ++b) {
                                std::vector<int> leaves(N_);
                                for (int i = 0; i < N_; ++i)
                                        leaves[i] = nu_leaf[i][b];
                                nu_next.push_back(select(leaves, true));
                        }
                        cur = std::move(nxt);
                        nu_ = nu_next;
                        cc_.nu_nodes.push_back(nu_);
                        cc_.layer_map.push_back({first, c().size()});
                }

                if (cc_.backend == Backend::Lagrange)
                        lagrange_indicators();
                std::vector<int> halted(N_, zero_);
                halted[N_ - 1] = one_;
                int is_n = select(halted, true);
                int out = c().add_sel(cur[0], zero_, is_n);
                (void)out;
                c().validate();
                cc_.size_point = {T_, c().size()};
        }
};

} // namespace

int CompiledCircuit::nu_at(const CircuitEval &ev, int64_t t) const
{
        const auto &nodes = nu_nodes.at(t);
        if (backend == Backend::Lagrange) {
                Rational v = ev.w.at(nodes[0] - 1);
                /* nearest integer */
                Rational h = v + Rational(1, 2);
                Integer f = h.get_num() / h.get_den();
                if (h < 0 && f * h.get_den() != h.get_num())
                        f -= 1;
                return int(f.get_si());
        }
        int v = 0;
        for (size_t b = 0; b < nodes.size(); ++b)
                if (sgn(ev.w.at(nodes[b] - 1)) > 0)
                        v |= 1 << b;
        return v + 1;
}

std::string CompiledCircuit::layer_map_str() const
{
        std::ostringstream os;
        os << "backend " << backend_name(backend) << "\nT " << T << "\nN " << N << "\ntau " << circuit.size() << '\n';
        for (size_t t = 0; t < layer_map.size(); ++t)
                os << "layer " << t << ' ' << layer_map[t].first << ' ' << layer_map[t].second << '\n';
        os << "discrete";
        for (int id : discrete_nodes)
                os << ' ' << id;
        os << "\nguard";
        for (int id : guard_nodes)
                os << ' ' << id;
        os << "\nfactor";
        for (int id : factor_nodes)
                os << ' ' << id;
        os << '\n';
        return os.str();
}

CompiledCircuit compile_lagrange(const Machine &m, int64_t T, const std::vector<Rational> &x, int n_free)
{
        return Builder(m, T, x, n_free, Backend::Lagrange).take();
}

CompiledCircuit compile_selector_tree(const Machine &m, int64_t T, const std::vector<Rational> &x, int n_free)
{
        return Builder(m, T, x, n_free, Backend::SelectorTree).take();
}

CompiledCircuit compile(const Machine &m, int64_t T, const std::vector<Rational> &x, int n_free, Backend b)
{
        return Builder(m, T, x, n_free, b).take();
}

std::vector<Rational> circuit_script_from_trace(const CompiledCircuit &cc, const Trace &tr)
{
        std::map<int, Rational> err;
        for (const auto &[idx, e] : tr.initial_errors) {
                auto it = cc.initial_nodes.find(idx);
                if (it != cc.initial_nodes.end())
                        err[it->second] = e;
        }
        for (const auto &s : tr.steps) {
                if (!s.wrote || s.t >= int64_t(cc.op_nodes.size()))
                        continue;
                int id = cc.op_nodes[s.t][s.node];
                if (id)
                        err[id] = s.error;
        }
        std::vector<Rational> script;
        for (int id = 1; id <= cc.circuit.size(); ++id) {
                if (cc.circuit.node(id).kind == CKind::Sel)
                        continue;
                auto it = err.find(id);
                script.push_back(it == err.end() ? Rational(0) : it->second);
        }
        return script;
}

std::vector<Rational> trace_script_from_circuit(const CompiledCircuit &cc, const std::vector<Rational> &machine_input,
                                                const CircuitEval &ev)
{
        std::vector<Rational> script;
        for (const auto &[idx, v] : input_state(machine_input).cells())
                script.push_back(ev.errors.at(cc.initial_nodes.at(idx) - 1));
        for (int64_t t = 0; t < cc.T; ++t) {
                int nu = cc.nu_at(ev, t);
                if (nu == cc.N)
                        break;
                int id = cc.op_nodes[t][nu];
                if (id)
                        script.push_back(ev.errors.at(id - 1));
        }
        return script;
}

int count_numeric_ops(const CompiledCircuit &cc)
{
        int n = 0;
        for (int id = 1; id <= cc.circuit.size(); ++id)
                if (cc.circuit.node(id).kind == CKind::Op && !cc.discrete_nodes.count(id) && !cc.guard_nodes.count(id) &&
                    !cc.factor_nodes.count(id))
                        ++n;
        return n;
}

double fit_exponent(const std::vector<std::pair<double, double>> &points)
{
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        double n = double(points.size());
        for (auto [x, y] : points) {
                double lx = std::log(x), ly = std::log(y);
                sx += lx;
                sy += ly;
                sxx += lx * lx;
                sxy += lx * ly;
        }
        return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

} // namespace bssfp
