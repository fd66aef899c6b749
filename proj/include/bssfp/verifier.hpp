#pragma once

#include <array>
#include <string>
#include <vector>

#include "bssfp/circuit.hpp"

namespace bssfp {

struct VerifierReport {
        bool accepted = false;
        /* Pseudo-code line of the first failed check; 0 when accepted. */
        int failing_line = 0;
        int failing_node = 0;
        std::string reason;
        Rational C1, C2;
        EvalMode mode;
        int64_t steps = 0;
        /* Values held in memory after reading the input. */
        Rational delta_hat, eps_hat;
        std::vector<Rational> w_hat;
        std::vector<Rational> errors;

        std::string str() const;
};

/*
 * The certificate verifier U on input (C, x, w, delta, epsilon). Every
 * comparison is the sign of a subtraction evaluated under the mode, and the
 * input itself is read under the mode. Line 15 additionally requires the
 * output value w_tau to be positive.
 */
VerifierReport verify(const Circuit &c, const std::vector<Rational> &x, const std::vector<Float> &w,
                      const Rational &delta, const Rational &eps, const EvalMode &mode);
VerifierReport verify(const Circuit &c, const WeakWitness &wit, const Rational &eps, const EvalMode &mode);

/* The stored values of an accepted run as a witness for (x, delta). */
WeakWitness reconstruct_witness(const VerifierReport &r, const std::vector<Rational> &x, const Rational &delta);

/* C1 and C2 as computed with the given relative errors (load 1, load 3/4, read delta, mul, add/sub). */
Rational c1_with_errors(const Rational &delta, const std::array<Rational, 5> &e);
Rational c2_with_errors(const Rational &delta, const std::array<Rational, 5> &e);

struct C1C2Check {
        /* eps < delta/31 and delta <= 1/7 */
        bool hypotheses = false;
        bool c1_lower = false, c1_upper = false, c2_lower = false, c2_upper = false;
        Rational c1_min, c1_max, c2_min, c2_max;
        Rational c1_lo_bound, c1_hi_bound, c2_lo_bound, c2_hi_bound;
        bool ok() const { return c1_lower && c1_upper && c2_lower && c2_upper; }
};

/* Sandwich bounds against all 32 corner perturbations of C1 and C2. */
C1C2Check check_lemma_c1c2(const Rational &delta, const Rational &eps);

/* Polynomial in delta with ascending coefficients and a required sign. */
struct Poly {
        std::vector<Rational> coef;
        /* -1: must be < 0, +1: must be > 0 */
        int relation = 1;

        Rational eval(const Rational &x) const;
        bool holds(const Rational &x) const { return sgn(eval(x)) == relation; }
};

/* The four inequalities with the printed coefficients. */
std::array<Poly, 4> appendix_polynomials();
/* The same four inequalities recomputed with eps = ratio * delta, divided by delta. */
std::array<Poly, 4> derived_polynomials(const Rational &ratio);

/* (1/256) (1+e)^4 / (1-e)^2 */
Rational lemma_f(const Rational &e);
/* Derivative of lemma_f up to the positive factor 1/(256 (1-e)^3). */
Rational lemma_f_slope(const Rational &e);

struct EpsilonBounds {
        /* eps_0 = 1/4, eps_{i+1} = f(eps_i) */
        std::vector<Rational> iterates;
        Rational eps3;
        bool eps3_below_1_250 = false;
        /* (1/8)(1+eps3)/(1-eps3) */
        Rational delta_bound;
        bool delta_bound_below_1_7 = false;
        /* (1+eps3)^3/(1-eps3), the factor in eps <= factor * delta/32 */
        Rational factor;
        bool factor_below_32_31 = false;

        /* For a given (eps, delta): whether some weak run passes lines 2 and 3, and the conclusions. */
        bool passes_lines = false;
        bool eps_ok = false, delta_ok = false, ratio_ok = false;
};

EpsilonBounds check_lemma_epsilon_bounds(const Rational &eps, const Rational &delta);

} // namespace bssfp
