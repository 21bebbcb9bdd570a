#include <cctype>
#include <string>

#include "delaycert/polynomial.hpp"

namespace delaycert::poly {

namespace {

class Parser {
public:
    explicit Parser(std::string_view s) : s_(s) {}

    RPoly run() {
        RPoly p = expr();
        skip();
        if (pos_ < s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
        return p;
    }

private:
    std::string_view s_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& what) const {
        throw std::invalid_argument("polynomial parse error at column " + std::to_string(pos_ + 1) + ": " + what);
    }
    void skip() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    bool eat(char c) {
        skip();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    RPoly expr() {
        RPoly p = term();
        for (;;) {
            if (eat('+'))
                p += term();
            else if (eat('-'))
                p -= term();
            else
                return p;
        }
    }

    RPoly term() {
        RPoly p = power();
        for (;;) {
            if (eat('*')) {
                p = p * power();
            } else if (eat('/')) {
                const RPoly d = power();
                if (d.degree() > 0 || d.is_zero()) fail("division only by a nonzero constant");
                Rational inv = Rational(1) / d.coefficient(Monomial());
                inv.canonicalize();
                p = p * RPoly(inv);
            } else {
                return p;
            }
        }
    }

    RPoly power() {
        RPoly b = unary();
        if (!eat('^')) return b;
        skip();
        const std::size_t start = pos_;
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
        if (start == pos_) fail("expected a nonnegative integer exponent");
        const int e = std::stoi(std::string(s_.substr(start, pos_ - start)));
        RPoly out(Rational(1));
        for (int k = 0; k < e; ++k) out = out * b;
        return out;
    }

    RPoly unary() {
        if (eat('-')) return RPoly(Rational(-1)) * unary();
        if (eat('+')) return unary();
        return primary();
    }

    RPoly primary() {
        skip();
        if (pos_ >= s_.size()) fail("unexpected end of input");
        const char c = s_[pos_];
        if (c == '(') {
            ++pos_;
            RPoly p = expr();
            if (!eat(')')) fail("expected ')'");
            return p;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return RPoly(number());
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            const std::size_t start = pos_;
            while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
            return RPoly::variable(var(s_.substr(start, pos_ - start)));
        }
        fail("unexpected '" + std::string(1, c) + "'");
    }

    // digits[.digits][e[+-]digits], converted exactly.
    Rational number() {
        std::string mant;
        long exp10 = 0;
        bool dot = false;
        while (pos_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.')) {
            if (s_[pos_] == '.') {
                if (dot) fail("malformed number");
                dot = true;
            } else {
                mant += s_[pos_];
                if (dot) --exp10;
            }
            ++pos_;
        }
        if (mant.empty()) fail("malformed number");
        if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
            std::size_t q = pos_ + 1;
            if (q < s_.size() && (s_[q] == '+' || s_[q] == '-')) ++q;
            const std::size_t ds = q;
            while (q < s_.size() && std::isdigit(static_cast<unsigned char>(s_[q]))) ++q;
            if (q == ds) fail("malformed exponent");
            exp10 += std::stol(std::string(s_.substr(pos_ + 1, q - pos_ - 1)));
            pos_ = q;
        }
        mpz_class num(mant, 10), ten(10), scale;
        mpz_pow_ui(scale.get_mpz_t(), ten.get_mpz_t(), static_cast<unsigned long>(exp10 < 0 ? -exp10 : exp10));
        Rational r = exp10 < 0 ? Rational(num, scale) : Rational(num * scale);
        r.canonicalize();
        return r;
    }
};

}  // namespace

RPoly parse_polynomial(std::string_view text) { return Parser(text).run(); }

}  // namespace delaycert::poly
