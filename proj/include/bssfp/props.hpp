#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "bssfp/fpnum.hpp"

namespace bssfp {

/* One named law and how often it was checked and broken. */
struct PropResult {
        std::string name;
        int64_t checks = 0, failures = 0;
        std::string first_failure;
        bool ok() const { return failures == 0; }
};

/*
 * Rounding laws (eps bound, monotonicity, symmetry, idempotence, refinement),
 * neighbor gaps, Sterbenz, A1 and A2 on every float of F_{2,t} with exponent
 * in [elo, ehi] (pairs of them where the law takes two operands).
 */
std::vector<PropResult> props_fpnum(int t, int elo, int ehi);
/* Same laws on count random pairs with exponents in [-40, 40]. */
std::vector<PropResult> props_fpnum_random(int t, int64_t count, uint64_t seed);

/* Fast2Sum exactness on all pairs and sign-compare on all positive triples with b >= c. */
std::vector<PropResult> props_fast2sum(int t, int elo, int ehi, int triple_elo, int triple_ehi);
std::vector<PropResult> props_fast2sum_random(int t, int64_t count, uint64_t seed);

/* Verifier lemmas: the eps iteration, the printed polynomials on a grid of delta, C1/C2 sandwiches. */
struct LemmaOptions {
        /* target for eps_3 and the absolute tolerance */
        double eps3 = 0.003970515;
        double eps3_tol = 1e-9;
        int64_t grid = 10000;
        int64_t pairs = 1000;
        uint64_t seed = 1;
};
std::vector<PropResult> props_lemmas(const LemmaOptions &o);

/* Random element of F_{2,t} with exponent in [elo, ehi]. */
Float random_float(std::mt19937_64 &rng, int t, int elo, int ehi, bool allow_negative = true);
/* Every element of F_{2,t} with exponent in [elo, ehi], zero first. */
std::vector<Rational> all_floats(int t, int elo, int ehi, bool with_negative = true);

std::string props_report(const std::vector<PropResult> &r);

} // namespace bssfp
