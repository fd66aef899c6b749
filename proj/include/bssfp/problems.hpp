#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "bssfp/machine.hpp"
#include "bssfp/mode.hpp"

namespace bssfp {

enum class Outcome { Accept, Reject, Timeout };
const char *outcome_name(Outcome o);

/* Condition value; nullopt stands for infinity. */
using Condition = std::optional<Rational>;

/* Length(x) (1 + log2 mu(x)); infinite when mu is. */
std::optional<double> input_size(int64_t length, const Condition &mu);

/* ---- integers: (Z, 1 + |x|) ---- */

Machine integers_machine();
struct IntegersRun {
        Outcome outcome = Outcome::Timeout;
        int64_t doublings = 0, halvings = 0;
        Trace trace;
};
IntegersRun integers_run(const Rational &x, const EvalMode &mode, int64_t budget = 200000);
Condition integers_condition(const Rational &x);

/* ---- x <= 1 with mu = 1/|x - 1| ---- */

Machine x_le_1_machine();
Condition x_le_1_condition(const Rational &x);

/* ---- Cantor middle thirds ---- */

struct CantorDistance {
        bool member = false;
        Rational distance;
};
/* Exact distance to C by ternary descent. */
CantorDistance cantor_distance(const Rational &x);
/* 1/min(d(x, C), 1). */
Condition cantor_condition(const Rational &x);
/* Decides x outside C on input (x, eps); diverges when eps is above 1/8. */
Machine cantor_machine();
struct CantorRun {
        Outcome outcome = Outcome::Timeout;
        /* Tent map applications before the decision. */
        int64_t iterations = 0;
        int64_t steps = 0;
        std::vector<Rational> orbit;
};
CantorRun cantor_machine_run(const Rational &x, const Rational &eps, const EvalMode &mode, int64_t max_iterations = 40);
/* Same arithmetic as the machine, without the register shuffling; consumes errors in the same order. */
CantorRun cantor_decide(const Rational &x, const Rational &eps, const EvalMode &mode, int64_t max_iterations = 40);
/* Worst-case orbit radius the decider has to clear after l steps under weak eps-arithmetic. */
Rational cantor_required_radius(const Rational &eps, int l);
/* Smallest value the decider's radius can take after l steps under weak eps-arithmetic. */
Rational cantor_min_radius(const Rational &eps, int l, bool large);
/* Range of eps in which a weak run can pick the small (resp. large) margin regime. */
bool cantor_small_regime_possible(const Rational &eps);
bool cantor_large_regime_possible(const Rational &eps);

/* ---- Koch curve region ---- */

/* a + b zeta with zeta = exp(i pi / 3). */
struct Eis {
        Rational a, b;
        double x() const;
        double y() const;
};
Eis eis_from_xy_rational(const Rational &x, const Rational &y_over_sqrt3);
struct KochRun {
        Outcome outcome = Outcome::Timeout;
        int64_t iterations = 0;
        /* Region entered at each step: 1..4 for the sub-triangles. */
        std::vector<int> path;
        /* Rigorous lower bound on d(p, boundary), squared; zero on timeout. */
        Rational distance_lower_sq;
        double distance_lower() const;
};
KochRun koch_membership(const Eis &p, int64_t budget = 64);
/* Distance to the boundary from a depth-n polyline; error at most koch_polyline_error(n). */
double koch_boundary_distance(double x, double y, int depth = 7);
double koch_polyline_error(int depth);

/* ---- epigraph of exp: y > e^x, mu = max(|x|, 1)/|e^x - y| ---- */

struct ExpRun {
        Outcome outcome = Outcome::Timeout;
        int n0 = 0;
        int a = 0;
        int64_t steps = 0;
};
ExpRun exp_epigraph(const Rational &x, const Rational &y, const Rational &eps, const EvalMode &mode,
                    int64_t max_steps = 2000000);
/* Sign of y - e^x by exact interval refinement; 0 only if undecided within max_terms. */
int exp_sign_oracle(const Rational &x, const Rational &y, int max_terms = 4000);
/* Rational bounds lo <= e^x <= hi from the Taylor series with a rigorous tail. */
std::pair<Rational, Rational> exp_bounds(const Rational &x, int terms);

/* ---- sparse polynomial systems ---- */

struct Monomial {
        Rational coef;
        /* (variable, exponent), variables 0-based and increasing */
        std::vector<std::pair<int, int>> powers;
        int degree() const;
};
enum class Rel { Gt, Eq };
struct Polynomial {
        std::vector<Monomial> terms;
        Rel rel = Rel::Gt;
        int degree() const;
        Rational eval(const std::vector<Rational> &y) const;
        Rational norm1() const;
};
struct PolySystem {
        int n = 0;
        std::vector<Polynomial> polys;
        int degree() const;
        int equations() const;
        int inequalities() const;
        static PolySystem parse(std::istream &in);
        static PolySystem parse_string(const std::string &text);
        static PolySystem load_file(const std::string &path);
        std::string str() const;
};
/*
 * f(y) > 0 for every polynomial (and = 0 for equations). Exact mode checks
 * exactly; otherwise g_i(y) is computed under the mode and has to clear the
 * forward-error margin.
 */
bool check_safeas_witness(const PolySystem &f, const std::vector<Rational> &y, const EvalMode &mode = EvalMode::exact());
/* ||f_i||_1 max(1, |y|_inf)^D ((1+eps)^(2D + #A_i) - 1) */
Rational safeas_margin(const Polynomial &p, int D, const std::vector<Rational> &y, const Rational &eps);

/* ---- geodesic certificate on the unit circle, basepoint (1, 0) ---- */

struct Pt {
        Rational x, y;
};
/* ((1 - t^2)/(1 + t^2), 2t/(1 + t^2)) */
Pt circle_point(const Rational &t);
struct GeodesicCheck {
        bool accepted = false;
        std::string reason;
        /* Enclosure of m = r - sum |x_{i+1} - x_i|. */
        Rational m_lo, m_hi;
        double m() const;
};
GeodesicCheck check_geodesic_certificate(const Pt &y, const std::vector<Pt> &waypoints, const Rational &delta,
                                         const Rational &r);
/* N = max(ceil(kappa r^2 log2 mu / 2), ceil(r / delta0)) with kappa = delta0 = 1, log2 mu = 1/|r - d|. */
int64_t geodesic_chain_length(double r, double d);
/* Rational points near the minimizing arc from (1, 0) to y. */
struct GeodesicCertificate {
        std::vector<Pt> waypoints;
        Rational delta;
        int64_t N = 0;
};
GeodesicCertificate geodesic_certificate(const Rational &t_y, const Rational &r);
/* Angle of circle_point(t) from (1, 0), |2 atan t|. */
double circle_arc_length(const Rational &t);

/* ---- real encoding of bit strings ---- */

struct RealEncodingRun {
        Outcome outcome = Outcome::Timeout;
        std::string rejected_at;
        std::vector<int> bits;
        int64_t steps = 0;
};
/* Decodes x = 0.x_1...x_N (base 2) and runs the bit machine exactly on (x_1, ..., x_N). */
RealEncodingRun real_encoding_run(const Rational &x, const Rational &eps, const EvalMode &mode, const Machine &bit_machine,
                                  int64_t budget = 100000);

/* ---- condition estimator ---- */

/* log2 mu'(x) = (T/c)^(1/d) / Length(x) - 1 */
double log2_mu_prime(int64_t T, int64_t length, double c, double d);

/* ---- toy NP problem: x >= 0, certified by a root y of y^2 = x ---- */

/* Input (x, y, delta). Accepts iff |y^2 - x| < x delta^2, checked twice. */
Machine toy_root_machine();
bool toy_root_member(const Rational &x);
Condition toy_root_condition(const Rational &x);

/* ---- registry ---- */

struct Problem {
        std::string name;
        std::string description;
        int arity = 1;
        std::function<std::optional<bool>(const std::vector<Rational> &)> member;
        std::function<Condition(const std::vector<Rational> &)> condition;
        std::function<Machine()> machine;
};
const std::vector<Problem> &problem_registry();
const Problem &find_problem(const std::string &name);

} // namespace bssfp
