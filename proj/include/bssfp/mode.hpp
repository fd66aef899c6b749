#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "bssfp/fpnum.hpp"

namespace bssfp {

/* Where the relative errors of a weak computation come from. */
struct ErrorSource {
        enum class Strategy { None, RoundNearest, SeededRandom, Adversarial, Scripted };

        Strategy strategy = Strategy::None;
        uint64_t seed = 0;
        /* Adversarial: +1 or -1 pins every error to that extreme, 0 draws random signs. */
        int fixed_sign = 0;
        std::vector<Rational> script;

        static ErrorSource none() { return {}; }
        static ErrorSource round_nearest() { return {Strategy::RoundNearest, 0, 0, {}}; }
        static ErrorSource seeded_random(uint64_t seed) { return {Strategy::SeededRandom, seed, 0, {}}; }
        static ErrorSource adversarial(uint64_t seed, int fixed_sign = 0)
        {
                return {Strategy::Adversarial, seed, fixed_sign, {}};
        }
        static ErrorSource scripted(std::vector<Rational> errs)
        {
                return {Strategy::Scripted, 0, 0, std::move(errs)};
        }
        std::string str() const;
};

/* Stateful stream of relative errors, each bounded by epsilon. */
class ErrorStream {
public:
        ErrorStream(const ErrorSource &src, const Rational &eps);
        /* Next relative error for an operation whose exact result is v. */
        Rational next(const Rational &v);
        size_t consumed() const { return pos_; }

private:
        ErrorSource src_;
        Rational eps_;
        Precision prec_;
        std::mt19937_64 rng_;
        size_t pos_ = 0;
};

enum class Semantics { Exact, Strong, Weak };

struct EvalMode {
        Semantics semantics = Semantics::Exact;
        Precision precision;
        ErrorSource errors;

        static EvalMode exact() { return {}; }
        static EvalMode strong(const Rational &eps) { return {Semantics::Strong, Precision(eps), {}}; }
        static EvalMode weak(const Rational &eps, ErrorSource src)
        {
                return {Semantics::Weak, Precision(eps), std::move(src)};
        }
        const Rational &epsilon() const { return precision.epsilon(); }
        std::string str() const;
};

/*
 * Arithmetic under a mode: exact, rounded (strong) or perturbed (weak).
 * Used by the routines that are written directly in C++ rather than as
 * machine programs; every call counts as one step and logs its error.
 */
class Arith {
public:
        explicit Arith(const EvalMode &mode);

        Rational input(const Rational &x) { return apply(x); }
        Rational load(const Rational &c) { return apply(c); }
        Rational add(const Rational &a, const Rational &b) { return apply(a + b); }
        Rational sub(const Rational &a, const Rational &b) { return apply(a - b); }
        Rational mul(const Rational &a, const Rational &b) { return apply(a * b); }
        Rational div(const Rational &a, const Rational &b);
        /* Branch tests read stored values and are exact. */
        bool positive(const Rational &a) { ++steps_; return sgn(a) > 0; }

        const EvalMode &mode() const { return mode_; }
        int64_t steps() const { return steps_; }
        const std::vector<Rational> &errors() const { return errors_; }

private:
        Rational apply(const Rational &v);
        EvalMode mode_;
        ErrorStream stream_;
        int64_t steps_ = 0;
        std::vector<Rational> errors_;
};

/* Rounds or perturbs one exact value per the mode, returning the error used. */
Rational mode_apply(const EvalMode &mode, ErrorStream &stream, const Rational &v, Rational &err);

} // namespace bssfp
