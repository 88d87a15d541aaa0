#include "gbsvie/expression.hpp"

#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>

namespace gbsvie {

namespace {

std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

// Recursive-descent parser with standard precedence:
//   expr   := term { (+|-) term }
//   term   := unary { (*|/) unary }
//   unary  := - unary | power
//   power  := atom [ ^ unary ]          (right associative)
//   atom   := number | var | func(args) | ( expr )
class ExprParser {
public:
    explicit ExprParser(std::string_view text) : text_(text) {}

    Expression run() {
        Expression e;
        parse_expr(e.code_);
        skip_ws();
        if (pos_ != text_.size())
            throw ParseError("unexpected trailing input", pos_);
        if (e.code_.empty())
            throw ParseError("empty expression", 0);
        e.text_ = std::string(text_);
        e.max_stack_ = max_depth(e.code_);
        return e;
    }

    static int max_depth(const std::vector<Expression::Instr>& code);

private:
    using Op = Expression::Op;
    using Instr = Expression::Instr;

    std::string_view text_;
    std::size_t pos_ = 0;

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }
    char peek() {
        skip_ws();
        return pos_ < text_.size() ? text_[pos_] : '\0';
    }
    bool consume(char c) {
        if (peek() == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void parse_expr(std::vector<Instr>& out) {
        parse_term(out);
        while (true) {
            char c = peek();
            if (c == '+' || c == '-') {
                ++pos_;
                parse_term(out);
                emit_binary(out, c == '+' ? Op::Add : Op::Sub);
            } else {
                break;
            }
        }
    }

    void parse_term(std::vector<Instr>& out) {
        parse_unary(out);
        while (true) {
            char c = peek();
            if (c == '*' || c == '/') {
                ++pos_;
                parse_unary(out);
                emit_binary(out, c == '*' ? Op::Mul : Op::Div);
            } else {
                break;
            }
        }
    }

    void parse_unary(std::vector<Instr>& out) {
        if (consume('-')) {
            parse_unary(out);
            emit_unary(out, Op::Negate);
            return;
        }
        parse_power(out);
    }

    void parse_power(std::vector<Instr>& out) {
        parse_atom(out);
        if (consume('^')) {
            parse_unary(out);  // right associative, allows x^-2
            emit_binary(out, Op::Pow);
        }
    }

    void parse_atom(std::vector<Instr>& out) {
        skip_ws();
        if (pos_ >= text_.size()) throw ParseError("unexpected end of input", pos_);
        char c = text_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            parse_number(out);
            return;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            parse_identifier(out);
            return;
        }
        if (c == '(') {
            ++pos_;
            parse_expr(out);
            if (!consume(')')) throw ParseError("expected ')'", pos_);
            return;
        }
        throw ParseError(std::string("unexpected character '") + c + "'", pos_);
    }

    void parse_number(std::vector<Instr>& out) {
        // scan [0-9.]+ with optional exponent; view may not be 0-terminated
        std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.'))
            ++pos_;
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            std::size_t mark = pos_++;
            if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
            if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
                    ++pos_;
            } else {
                pos_ = mark;  // bare 'e' is not an exponent
            }
        }
        std::string buf(text_.substr(start, pos_ - start));
        char* end = nullptr;
        double v = std::strtod(buf.c_str(), &end);
        if (end == buf.c_str() || static_cast<std::size_t>(end - buf.c_str()) != buf.size())
            throw ParseError("malformed number", start);
        out.push_back({Op::PushConst, v});
    }

    void parse_identifier(std::vector<Instr>& out) {
        std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
            ++pos_;
        std::string_view name = text_.substr(start, pos_ - start);

        if (name.size() == 1) {
            switch (name[0]) {
                case 't': out.push_back({Op::PushT}); return;
                case 's': out.push_back({Op::PushS}); return;
                case 'x': out.push_back({Op::PushX}); return;
                case 'y': out.push_back({Op::PushY}); return;
                case 'z': out.push_back({Op::PushZ}); return;
                default: break;
            }
        }
        if (name == "pi") {
            out.push_back({Op::PushConst, 3.14159265358979323846});
            return;
        }

        struct Fn {
            const char* name;
            Op op;
            int arity;
        };
        static constexpr Fn fns[] = {
            {"exp", Op::Exp, 1},  {"log", Op::Log, 1},      {"abs", Op::Abs, 1},
            {"sin", Op::Sin, 1},  {"cos", Op::Cos, 1},      {"sqrt", Op::Sqrt, 1},
            {"step", Op::Step, 1},{"pos", Op::Pos, 1},      {"neg", Op::NegPart, 1},
            {"max", Op::Max, 2},  {"min", Op::Min, 2},
        };
        for (const Fn& f : fns) {
            if (name == f.name) {
                if (!consume('(')) throw ParseError("expected '(' after function name", pos_);
                parse_expr(out);
                for (int i = 1; i < f.arity; ++i) {
                    if (!consume(',')) throw ParseError("expected ','", pos_);
                    parse_expr(out);
                }
                if (!consume(')')) throw ParseError("expected ')'", pos_);
                if (f.arity == 1)
                    emit_unary(out, f.op);
                else
                    emit_binary(out, f.op);
                return;
            }
        }
        throw ParseError("unknown identifier '" + std::string(name) + "'", start);
    }

    // Peephole constant folding on emission.
    void emit_unary(std::vector<Instr>& out, Op op) {
        if (!out.empty() && out.back().op == Op::PushConst) {
            double a = out.back().value;
            double v;
            switch (op) {
                case Op::Negate: v = -a; break;
                case Op::Exp: v = std::exp(a); break;
                case Op::Abs: v = std::abs(a); break;
                case Op::Sin: v = std::sin(a); break;
                case Op::Cos: v = std::cos(a); break;
                case Op::Step: v = a >= 0.0 ? 1.0 : 0.0; break;
                case Op::Pos: v = a > 0.0 ? a : 0.0; break;
                case Op::NegPart: v = a < 0.0 ? -a : 0.0; break;
                // log/sqrt fold only inside their domain; otherwise defer to eval
                case Op::Log:
                    if (a > 0.0) { v = std::log(a); break; }
                    out.push_back({op});
                    return;
                case Op::Sqrt:
                    if (a >= 0.0) { v = std::sqrt(a); break; }
                    out.push_back({op});
                    return;
                default: out.push_back({op}); return;
            }
            out.back().value = v;
            return;
        }
        out.push_back({op});
    }

    void emit_binary(std::vector<Instr>& out, Op op) {
        std::size_t n = out.size();
        if (n >= 2 && out[n - 1].op == Op::PushConst && out[n - 2].op == Op::PushConst) {
            double b = out[n - 1].value, a = out[n - 2].value;
            double v;
            switch (op) {
                case Op::Add: v = a + b; break;
                case Op::Sub: v = a - b; break;
                case Op::Mul: v = a * b; break;
                case Op::Div: v = a / b; break;
                case Op::Pow: v = std::pow(a, b); break;
                case Op::Max: v = a > b ? a : b; break;
                case Op::Min: v = a < b ? a : b; break;
                default: out.push_back({op}); return;
            }
            out.pop_back();
            out.back().value = v;
            return;
        }
        out.push_back({op});
    }
};

int ExprParser::max_depth(const std::vector<Expression::Instr>& code) {
    int depth = 0, peak = 0;
    for (const auto& in : code) {
        switch (in.op) {
            case Op::PushConst:
            case Op::PushT:
            case Op::PushS:
            case Op::PushX:
            case Op::PushY:
            case Op::PushZ:
                ++depth;
                break;
            case Op::Add: case Op::Sub: case Op::Mul: case Op::Div:
            case Op::Pow: case Op::Max: case Op::Min:
                --depth;
                break;
            default:
                break;  // unary: depth unchanged
        }
        peak = depth > peak ? depth : peak;
    }
    return peak;
}

Expression::Expression() {
    code_.push_back({Op::PushConst, 0.0});
    text_ = "0";
    max_stack_ = 1;
}

Expression Expression::parse(std::string_view text) {
    return ExprParser(text).run();
}

Expression Expression::constant(double value) {
    Expression e;
    e.code_[0].value = value;
    e.text_ = format_number(value);
    return e;
}

double Expression::operator()(const EvalContext& ctx) const {
    std::array<double, 64> stack;
    int sp = 0;
    for (const Instr& in : code_) {
        switch (in.op) {
            case Op::PushConst: stack[sp++] = in.value; break;
            case Op::PushT: stack[sp++] = ctx.t; break;
            case Op::PushS: stack[sp++] = ctx.s; break;
            case Op::PushX: stack[sp++] = ctx.x; break;
            case Op::PushY: stack[sp++] = ctx.y; break;
            case Op::PushZ: stack[sp++] = ctx.z; break;
            case Op::Add: --sp; stack[sp - 1] += stack[sp]; break;
            case Op::Sub: --sp; stack[sp - 1] -= stack[sp]; break;
            case Op::Mul: --sp; stack[sp - 1] *= stack[sp]; break;
            case Op::Div: --sp; stack[sp - 1] /= stack[sp]; break;
            case Op::Pow: --sp; stack[sp - 1] = std::pow(stack[sp - 1], stack[sp]); break;
            case Op::Negate: stack[sp - 1] = -stack[sp - 1]; break;
            case Op::Exp: stack[sp - 1] = std::exp(stack[sp - 1]); break;
            case Op::Log:
                if (stack[sp - 1] <= 0.0) throw EvalError("log of non-positive value");
                stack[sp - 1] = std::log(stack[sp - 1]);
                break;
            case Op::Abs: stack[sp - 1] = std::abs(stack[sp - 1]); break;
            case Op::Sin: stack[sp - 1] = std::sin(stack[sp - 1]); break;
            case Op::Cos: stack[sp - 1] = std::cos(stack[sp - 1]); break;
            case Op::Sqrt:
                if (stack[sp - 1] < 0.0) throw EvalError("sqrt of negative value");
                stack[sp - 1] = std::sqrt(stack[sp - 1]);
                break;
            case Op::Step: stack[sp - 1] = stack[sp - 1] >= 0.0 ? 1.0 : 0.0; break;
            case Op::Pos: stack[sp - 1] = stack[sp - 1] > 0.0 ? stack[sp - 1] : 0.0; break;
            case Op::NegPart: stack[sp - 1] = stack[sp - 1] < 0.0 ? -stack[sp - 1] : 0.0; break;
            case Op::Max: --sp; stack[sp - 1] = stack[sp - 1] > stack[sp] ? stack[sp - 1] : stack[sp]; break;
            case Op::Min: --sp; stack[sp - 1] = stack[sp - 1] < stack[sp] ? stack[sp - 1] : stack[sp]; break;
        }
    }
    return stack[0];
}

bool Expression::uses(char var) const {
    Op probe;
    switch (var) {
        case 't': probe = Op::PushT; break;
        case 's': probe = Op::PushS; break;
        case 'x': probe = Op::PushX; break;
        case 'y': probe = Op::PushY; break;
        case 'z': probe = Op::PushZ; break;
        default: return false;
    }
    for (const Instr& in : code_)
        if (in.op == probe) return true;
    return false;
}

bool Expression::is_constant() const {
    return code_.size() == 1 && code_[0].op == Op::PushConst;
}

double Expression::constant_value() const {
    return code_[0].value;
}

// Rebuilds an equivalent string from the postfix program, parenthesizing
// everything below the top level. Not minimal, but stable and reparsable.
std::string Expression::str() const {
    std::vector<std::string> st;
    auto bin = [&st](const char* sym) {
        std::string b = st.back(); st.pop_back();
        std::string a = st.back(); st.pop_back();
        st.push_back("(" + a + sym + b + ")");
    };
    auto fn1 = [&st](const char* name) {
        st.back() = std::string(name) + "(" + st.back() + ")";
    };
    auto fn2 = [&st](const char* name) {
        std::string b = st.back(); st.pop_back();
        st.back() = std::string(name) + "(" + st.back() + "," + b + ")";
    };
    for (const Instr& in : code_) {
        switch (in.op) {
            case Op::PushConst: st.push_back(format_number(in.value)); break;
            case Op::PushT: st.push_back("t"); break;
            case Op::PushS: st.push_back("s"); break;
            case Op::PushX: st.push_back("x"); break;
            case Op::PushY: st.push_back("y"); break;
            case Op::PushZ: st.push_back("z"); break;
            case Op::Add: bin("+"); break;
            case Op::Sub: bin("-"); break;
            case Op::Mul: bin("*"); break;
            case Op::Div: bin("/"); break;
            case Op::Pow: bin("^"); break;
            case Op::Negate: st.back() = "(-" + st.back() + ")"; break;
            case Op::Exp: fn1("exp"); break;
            case Op::Log: fn1("log"); break;
            case Op::Abs: fn1("abs"); break;
            case Op::Sin: fn1("sin"); break;
            case Op::Cos: fn1("cos"); break;
            case Op::Sqrt: fn1("sqrt"); break;
            case Op::Step: fn1("step"); break;
            case Op::Pos: fn1("pos"); break;
            case Op::NegPart: fn1("neg"); break;
            case Op::Max: fn2("max"); break;
            case Op::Min: fn2("min"); break;
        }
    }
    return st.empty() ? "0" : st.back();
}

}  // namespace gbsvie
