#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gbsvie {

/// Thrown on malformed input; `offset` is the byte position of the problem.
struct ParseError : std::runtime_error {
    ParseError(const std::string& what, std::size_t offset)
        : std::runtime_error(what + " (at byte " + std::to_string(offset) + ")"),
          offset(offset) {}
    std::size_t offset;
};

/// Thrown when log/sqrt are evaluated outside their domain.
struct EvalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Evaluation point for the five admitted variables.
struct EvalContext {
    double t = 0.0;
    double s = 0.0;
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
};

// Arithmetic over {t,s,x,y,z} with +,-,*,/,^ and
// exp, log, abs, max, min, sin, cos, sqrt, step, pos, neg.
// step(u) = 1 for u >= 0, else 0; pos(u) = max(u,0); neg(u) = max(-u,0).
//
// Parsed into a flat postfix program; evaluation is a stack walk with no
// allocation, cheap enough for the per-node solver loops.
class Expression {
public:
    Expression();  // the constant 0

    static Expression parse(std::string_view text);  // throws ParseError
    static Expression constant(double value);

    double operator()(const EvalContext& ctx) const;  // throws EvalError

    bool uses(char var) const;  // var in {'t','s','x','y','z'}
    bool is_constant() const;
    double constant_value() const;  // only valid when is_constant()

    /// Round-trips: parse(str()) evaluates identically.
    std::string str() const;

    const std::string& source() const { return text_; }

private:
    enum class Op : std::uint8_t {
        PushConst, PushT, PushS, PushX, PushY, PushZ,
        Add, Sub, Mul, Div, Pow, Negate,
        Exp, Log, Abs, Sin, Cos, Sqrt, Step, Pos, NegPart,
        Max, Min,
    };
    struct Instr {
        Op op;
        double value = 0.0;
    };

    friend class ExprParser;

    std::vector<Instr> code_;
    std::string text_;
    int max_stack_ = 0;
};

}  // namespace gbsvie
