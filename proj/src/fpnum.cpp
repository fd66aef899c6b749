#include "bssfp/fpnum.hpp"

#include <cmath>
#include <sstream>

namespace bssfp {

namespace {

Integer shl(const Integer &a, uint64_t s)
{
        Integer r;
        mpz_mul_2exp(r.get_mpz_t(), a.get_mpz_t(), s);
        return r;
}

int64_t ilog2(const Integer &a)
{
        return int64_t(mpz_sizeinbase(a.get_mpz_t(), 2)) - 1;
}

} // namespace

int sign(const Rational &x)
{
        return sgn(x);
}

int64_t floor_log2(const Rational &x)
{
        if (sgn(x) == 0)
                throw PreconditionError("floor_log2 of zero");
        Integer n = abs(x.get_num());
        const Integer &d = x.get_den();
        int64_t e = ilog2(n) - ilog2(d);
        /* 2^e <= |x| iff n >= d * 2^e */
        bool ge = e >= 0 ? n >= shl(d, e) : shl(n, -e) >= d;
        return ge ? e : e - 1;
}

Rational pow2(int64_t e)
{
        Rational r;
        if (e >= 0)
                r = Rational(shl(Integer(1), e));
        else
                r = Rational(Integer(1), shl(Integer(1), -e));
        r.canonicalize();
        return r;
}

Rational parse_rational(const std::string &s)
{
        std::string t = s;
        if (!t.empty() && t[0] == '+')
                t.erase(0, 1);
        Rational r;
        auto dot = t.find('.');
        auto exp = t.find_first_of("eE");
        try {
                if (dot != std::string::npos || exp != std::string::npos) {
                        /* exact decimal */
                        std::string mant = t.substr(0, exp);
                        int64_t e10 = exp == std::string::npos ? 0 : std::stoll(t.substr(exp + 1));
                        bool neg = !mant.empty() && mant[0] == '-';
                        if (neg)
                                mant.erase(0, 1);
                        auto d = mant.find('.');
                        std::string digits = mant;
                        if (d != std::string::npos) {
                                digits = mant.substr(0, d) + mant.substr(d + 1);
                                e10 -= int64_t(mant.size() - d - 1);
                        }
                        if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos)
                                throw ParseError("bad number: " + s);
                        Integer n(digits, 10), p;
                        mpz_ui_pow_ui(p.get_mpz_t(), 10, uint64_t(std::llabs(e10)));
                        r = e10 >= 0 ? Rational(n * p) : Rational(n, p);
                        if (neg)
                                r = -r;
                } else {
                        if (t.empty() || t.find_first_not_of("-0123456789/") != std::string::npos)
                                throw ParseError("bad number: " + s);
                        r.set_str(t, 10);
                        if (r.get_den() == 0)
                                throw ParseError("zero denominator: " + s);
                }
        } catch (const std::invalid_argument &) {
                throw ParseError("bad number: " + s);
        } catch (const std::out_of_range &) {
                throw ParseError("bad number: " + s);
        }
        r.canonicalize();
        return r;
}

std::string to_string(const Rational &q)
{
        return q.get_str();
}

double to_double(const Rational &q)
{
        return q.get_d();
}

Precision::Precision(const Rational &eps)
        : eps_(eps), t_(-1)
{
        if (sgn(eps) < 0 || eps >= Rational(1, 4))
                throw PreconditionError("precision must satisfy 0 <= eps < 1/4");
        if (sgn(eps) > 0)
                t_ = int(1 + floor_log2(Rational(1) / (2 * eps)));
}

Precision Precision::exact()
{
        return Precision(Rational(0), -1);
}

Precision Precision::digits(int t)
{
        if (t < 1)
                throw PreconditionError("digits must be >= 1");
        return Precision(pow2(-t), t);
}

std::string Precision::str() const
{
        if (is_exact())
                return "exact";
        return "eps=" + to_string(eps_) + ",t=" + std::to_string(t_);
}

Float Float::zero(int t)
{
        Float f;
        f.t_ = t;
        return f;
}

Float Float::exact(const Rational &q)
{
        Float f;
        f.t_ = -1;
        f.val_ = q;
        f.zero_ = ::sgn(q) == 0;
        f.neg_ = ::sgn(q) < 0;
        return f;
}

Float Float::from_rational(const Rational &q, int t)
{
        if (t < 0)
                return exact(q);
        Float f = round(q, Precision::digits(t));
        if (f.val_ != q)
                throw PreconditionError("value " + to_string(q) + " not representable with t=" +
                                        std::to_string(t));
        return f;
}

Float Float::operator-() const
{
        Float f = *this;
        if (!zero_)
                f.neg_ = !neg_;
        f.val_ = -val_;
        return f;
}

std::string Float::str() const
{
        if (t_ < 0)
                return to_string(val_) + "@exact";
        if (zero_)
                return "+0@" + std::to_string(t_);
        std::ostringstream os;
        os << (neg_ ? '-' : '+') << mant_.get_str() << "*2^" << exp_ << '@' << t_;
        return os.str();
}

Float Float::parse(const std::string &s)
{
        auto at = s.rfind('@');
        if (at == std::string::npos)
                throw ParseError("float needs @t or @exact: " + s);
        std::string body = s.substr(0, at), tail = s.substr(at + 1);
        if (tail == "exact")
                return exact(parse_rational(body));
        int t;
        try {
                t = std::stoi(tail);
        } catch (const std::exception &) {
                throw ParseError("bad digits in float: " + s);
        }
        if (t < 1)
                throw ParseError("bad digits in float: " + s);
        auto star = body.find("*2^");
        Rational q;
        if (star == std::string::npos) {
                q = parse_rational(body);
        } else {
                Rational m = parse_rational(body.substr(0, star));
                int64_t e;
                try {
                        e = std::stoll(body.substr(star + 3));
                } catch (const std::exception &) {
                        throw ParseError("bad exponent in float: " + s);
                }
                q = m * pow2(e);
        }
        try {
                return from_rational(q, t);
        } catch (const PreconditionError &e) {
                throw ParseError(e.what());
        }
}

Float round(const Rational &x, const Precision &p)
{
        if (p.is_exact())
                return Float::exact(x);
        int t = p.digits();
        if (sgn(x) == 0)
                return Float::zero(t);
        Rational a = abs(x);
        int64_t e0 = floor_log2(a);
        int64_t s = t - e0;
        /* scaled = a * 2^s lies in [2^t, 2^{t+1}) */
        Integer num = a.get_num(), den = a.get_den();
        if (s >= 0)
                num = shl(num, s);
        else
                den = shl(den, -s);
        Integer q, r;
        mpz_fdiv_qr(q.get_mpz_t(), r.get_mpz_t(), num.get_mpz_t(), den.get_mpz_t());
        int c = cmp(Integer(2 * r), den);
        if (c > 0 || (c == 0 && mpz_odd_p(q.get_mpz_t())))
                q += 1;
        int64_t e = -s;
        if (q == shl(Integer(1), t + 1)) {
                q = shl(Integer(1), t);
                e += 1;
        }
        Float f;
        f.t_ = t;
        f.zero_ = false;
        f.neg_ = sgn(x) < 0;
        f.mant_ = q;
        f.exp_ = e;
        f.val_ = Rational(q) * pow2(e);
        if (f.neg_)
                f.val_ = -f.val_;
        return f;
}

Rational fl(const Rational &x, const Precision &p)
{
        if (p.is_exact())
                return x;
        return round(x, p).value();
}

bool representable(const Rational &x, const Precision &p)
{
        return fl(x, p) == x;
}

char op_char(Op op)
{
        switch (op) {
        case Op::Add: return '+';
        case Op::Sub: return '-';
        case Op::Mul: return '*';
        case Op::Div: return '/';
        }
        return '?';
}

Rational exact_op(Op op, const Rational &a, const Rational &b)
{
        switch (op) {
        case Op::Add: return a + b;
        case Op::Sub: return a - b;
        case Op::Mul: return a * b;
        case Op::Div:
                if (sgn(b) == 0)
                        throw PreconditionError("division by zero");
                return a / b;
        }
        throw PreconditionError("bad op");
}

static void check_member(const Float &a, const Precision &p)
{
        if (!p.is_exact() && !representable(a.value(), p))
                throw PreconditionError("operand " + a.str() + " not in F at " + p.str());
}

Float fp_op(Op op, const Float &a, const Float &b, const Precision &p)
{
        check_member(a, p);
        check_member(b, p);
        return round(exact_op(op, a.value(), b.value()), p);
}

std::pair<Float, Float> fast_two_sum(const Float &a, const Float &b, const Precision &p)
{
        if (abs(a.value()) < abs(b.value()))
                throw PreconditionError("fast_two_sum requires |a| >= |b|");
        Float c = fp_op(Op::Add, a, b, p);
        Float d = fp_op(Op::Sub, c, a, p);
        Float e = fp_op(Op::Sub, b, d, p);
        return {c, e};
}

int sign_compare_abc(const Float &a, const Float &b, const Float &c, const Precision &p)
{
        if (a.sgn() <= 0 || b.sgn() <= 0 || c.sgn() <= 0 || b < c)
                throw PreconditionError("sign_compare_abc requires a, b, c > 0 and b >= c");
        Float d = fp_op(Op::Sub, a, b, p);
        Float e = fp_op(Op::Sub, d, c, p);
        return e.sgn();
}

std::pair<Rational, Rational> neighbor_gap(const Float &x)
{
        if (x.is_zero())
                throw PreconditionError("neighbor_gap of zero");
        if (x.is_exact())
                throw PreconditionError("neighbor_gap needs a finite digit count");
        Rational up = pow2(x.exponent());
        Rational down = x.mantissa() == shl(Integer(1), x.digits()) ? pow2(x.exponent() - 1) : up;
        if (x.negative())
                return {up, down};
        return {down, up};
}

} // namespace bssfp
