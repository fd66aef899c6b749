#include "bssfp/mode.hpp"

namespace bssfp {

std::string ErrorSource::str() const
{
        switch (strategy) {
        case Strategy::None: return "none";
        case Strategy::RoundNearest: return "round_nearest";
        case Strategy::SeededRandom: return "seeded_random(" + std::to_string(seed) + ")";
        case Strategy::Adversarial:
                return "adversarial(" + std::to_string(seed) + "," + std::to_string(fixed_sign) + ")";
        case Strategy::Scripted: return "scripted(" + std::to_string(script.size()) + ")";
        }
        return "?";
}

std::string EvalMode::str() const
{
        switch (semantics) {
        case Semantics::Exact: return "exact";
        case Semantics::Strong: return "strong(" + to_string(epsilon()) + ")";
        case Semantics::Weak: return "weak(" + to_string(epsilon()) + "," + errors.str() + ")";
        }
        return "?";
}

ErrorStream::ErrorStream(const ErrorSource &src, const Rational &eps)
        : src_(src), eps_(eps), prec_(sgn(eps) > 0 && eps < Rational(1, 4) ? Precision(eps) : Precision::exact()),
          rng_(src.seed)
{
        if (src.strategy == ErrorSource::Strategy::Scripted)
                for (const auto &e : src.script)
                        if (abs(e) > eps)
                                throw PreconditionError("scripted error " + to_string(e) + " exceeds epsilon " +
                                                        to_string(eps));
}

Rational ErrorStream::next(const Rational &v)
{
        using S = ErrorSource::Strategy;
        ++pos_;
        switch (src_.strategy) {
        case S::None:
                return 0;
        case S::RoundNearest:
                if (sgn(v) == 0)
                        return 0;
                return fl(v, prec_) / v - 1;
        case S::SeededRandom: {
                constexpr long K = 1L << 20;
                std::uniform_int_distribution<long> d(-K, K);
                return eps_ * Rational(d(rng_), K);
        }
        case S::Adversarial:
                if (src_.fixed_sign != 0)
                        return src_.fixed_sign > 0 ? eps_ : Rational(-eps_);
                return (rng_() & 1) ? eps_ : Rational(-eps_);
        case S::Scripted:
                return pos_ <= src_.script.size() ? src_.script[pos_ - 1] : Rational(0);
        }
        return 0;
}

Rational mode_apply(const EvalMode &mode, ErrorStream &stream, const Rational &v, Rational &err)
{
        switch (mode.semantics) {
        case Semantics::Exact:
                err = 0;
                return v;
        case Semantics::Strong: {
                Rational r = fl(v, mode.precision);
                err = sgn(v) == 0 ? Rational(0) : Rational(r / v - 1);
                return r;
        }
        case Semantics::Weak:
                err = stream.next(v);
                return v * (1 + err);
        }
        return v;
}

Arith::Arith(const EvalMode &mode)
        : mode_(mode), stream_(mode.errors, mode.epsilon())
{
}

Rational Arith::apply(const Rational &v)
{
        Rational err;
        Rational r = mode_apply(mode_, stream_, v, err);
        ++steps_;
        errors_.push_back(err);
        return r;
}

Rational Arith::div(const Rational &a, const Rational &b)
{
        if (sgn(b) == 0)
                throw PreconditionError("division by zero");
        return apply(a / b);
}

} // namespace bssfp
