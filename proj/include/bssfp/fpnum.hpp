#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>

#include <gmpxx.h>

namespace bssfp {

using Integer = mpz_class;
using Rational = mpq_class;

struct PreconditionError : std::logic_error {
        using std::logic_error::logic_error;
};

struct ParseError : std::runtime_error {
        using std::runtime_error::runtime_error;
};

/* floor(log2 |x|) for x != 0. */
int64_t floor_log2(const Rational &x);
int sign(const Rational &x);
Rational pow2(int64_t e);
Rational parse_rational(const std::string &s);
std::string to_string(const Rational &q);
double to_double(const Rational &q);

/*
 * Rounding precision. epsilon = 0 is exact arithmetic; otherwise digits() is
 * t = 1 + floor(log2(1/(2 epsilon))) and the representable set is F_{2,t}.
 */
class Precision {
public:
        Precision() : Precision(exact()) {}
        explicit Precision(const Rational &eps);
        static Precision exact();
        static Precision digits(int t);

        const Rational &epsilon() const { return eps_; }
        int digits() const { return t_; }
        bool is_exact() const { return t_ < 0; }
        std::string str() const;

        bool operator==(const Precision &o) const { return t_ == o.t_ && eps_ == o.eps_; }

private:
        Precision(Rational eps, int t) : eps_(std::move(eps)), t_(t) {}
        Rational eps_;
        int t_;
};

/*
 * Normalized binary float m * 2^e with 2^t <= m < 2^{t+1}. A Float built at
 * exact precision wraps a rational instead (digits() == -1).
 */
class Float {
public:
        Float() = default;
        static Float zero(int t);
        static Float exact(const Rational &q);
        /* Requires q to be representable with t digits. */
        static Float from_rational(const Rational &q, int t);
        static Float parse(const std::string &s);

        bool is_zero() const { return zero_; }
        bool negative() const { return neg_; }
        bool is_exact() const { return t_ < 0; }
        int digits() const { return t_; }
        const Integer &mantissa() const { return mant_; }
        int64_t exponent() const { return exp_; }
        const Rational &value() const { return val_; }
        int sgn() const { return zero_ ? 0 : (neg_ ? -1 : 1); }

        Float operator-() const;
        bool operator==(const Float &o) const { return val_ == o.val_; }
        auto operator<=>(const Float &o) const { return cmp(val_, o.val_) <=> 0; }

        std::string str() const;

private:
        bool neg_ = false;
        Integer mant_;
        int64_t exp_ = 0;
        int t_ = -1;
        bool zero_ = true;
        Rational val_;

        friend Float round(const Rational &x, const Precision &p);
};

Float round(const Rational &x, const Precision &p);
/* fl(x) as a rational value. */
Rational fl(const Rational &x, const Precision &p);
bool representable(const Rational &x, const Precision &p);

enum class Op { Add, Sub, Mul, Div };
char op_char(Op op);
Rational exact_op(Op op, const Rational &a, const Rational &b);
Float fp_op(Op op, const Float &a, const Float &b, const Precision &p);

/* c = fl(a + b), e = fl(b - fl(c - a)); a + b = c + e exactly when |a| >= |b|. */
std::pair<Float, Float> fast_two_sum(const Float &a, const Float &b, const Precision &p);
/* Sign of a - b - c via fl(fl(a - b) - c), for a, b, c > 0 and b >= c. */
int sign_compare_abc(const Float &a, const Float &b, const Float &c, const Precision &p);
/* Distances from x to the adjacent representables below and above. */
std::pair<Rational, Rational> neighbor_gap(const Float &x);

} // namespace bssfp
