#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "bssfp/circuit.hpp"
#include "bssfp/machine.hpp"

namespace bssfp {

enum class Backend { Lagrange, SelectorTree };

const char *backend_name(Backend b);

/*
 * The time-T circuit of a machine on input (x, y, delta): x and the machine
 * constants become circuit constants, y and delta are the circuit inputs.
 * The circuit accepts iff the machine sits on its output node after T steps
 * with s_0 > 0.
 */
struct CompiledCircuit {
        Circuit circuit;
        Backend backend = Backend::SelectorTree;
        int64_t T = 0;
        int N = 0;
        int n_fixed = 0, n_free = 0;
        /* Node ids [first, last] emitted for step t -> t+1. */
        std::vector<std::pair<int, int>> layer_map;
        /* Nodes carrying node numbers, node bits, indicators and guards. */
        std::set<int> discrete_nodes;
        /* Arithmetic nodes that only feed selector conditions (division guards). */
        std::set<int> guard_nodes;
        /* Lagrange factors (nu - j)/(i - j) and their partial products; only the full product is discrete. */
        std::set<int> factor_nodes;
        /* op_nodes[t][i]: node holding the numerical result of machine node i at step t, 0 if none. */
        std::vector<std::vector<int>> op_nodes;
        /* Initial cell index -> node holding it. */
        std::map<int64_t, int> initial_nodes;
        /* nu_nodes[t]: bits of nu(t) - 1 (low bit first), or the single node holding nu(t). */
        std::vector<std::vector<int>> nu_nodes;
        /* (T, tau) */
        std::pair<int64_t, int> size_point;

        /* Node of the machine at time t in an evaluation. */
        int nu_at(const CircuitEval &ev, int64_t t) const;
        std::string layer_map_str() const;
};

CompiledCircuit compile_lagrange(const Machine &m, int64_t T, const std::vector<Rational> &x, int n_free = 1);
CompiledCircuit compile_selector_tree(const Machine &m, int64_t T, const std::vector<Rational> &x, int n_free = 1);
CompiledCircuit compile(const Machine &m, int64_t T, const std::vector<Rational> &x, int n_free = 1,
                        Backend b = Backend::SelectorTree);

/* Error script for the circuit that reproduces a machine trace. */
std::vector<Rational> circuit_script_from_trace(const CompiledCircuit &cc, const Trace &tr);
/* Error script for the machine that reproduces a circuit evaluation on input (x, y, delta). */
std::vector<Rational> trace_script_from_circuit(const CompiledCircuit &cc, const std::vector<Rational> &machine_input,
                                                const CircuitEval &ev);

/* Arithmetic nodes outside the discrete and guard sets. */
int count_numeric_ops(const CompiledCircuit &cc);

/* Least-squares fit of log y = a + k log x; returns k. */
double fit_exponent(const std::vector<std::pair<double, double>> &points);

} // namespace bssfp
