#include "delaycert/polynomial.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <mutex>
#include <sstream>
#include <unordered_map>

namespace delaycert::poly {

Rational to_rational(double v) {
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite coefficient");
    Rational q(v);
    q.canonicalize();
    return q;
}

Rational frac(long a, long b) {
    if (b == 0) throw std::invalid_argument("zero denominator");
    Rational q(a, b);
    q.canonicalize();
    return q;
}

double to_double(const Rational& q) { return q.get_d(); }

std::string to_string(const Rational& q) { return q.get_str(); }

namespace {
struct Registry {
    std::mutex mu;
    std::unordered_map<std::string, int> ids;
    std::deque<std::string> names;  // stable references across growth
};
Registry& registry() {
    static Registry r;
    return r;
}
}  // namespace

int var(std::string_view name) {
    auto& r = registry();
    std::lock_guard lock(r.mu);
    auto it = r.ids.find(std::string(name));
    if (it != r.ids.end()) return it->second;
    int id = static_cast<int>(r.names.size());
    r.names.emplace_back(name);
    r.ids.emplace(std::string(name), id);
    return id;
}

const std::string& var_name(int id) {
    auto& r = registry();
    std::lock_guard lock(r.mu);
    return r.names.at(static_cast<std::size_t>(id));
}

Monomial Monomial::of(int v, int exponent) {
    Monomial m;
    if (exponent > 0) {
        m.terms_.emplace_back(v, exponent);
        m.degree_ = exponent;
    }
    return m;
}

Monomial Monomial::from_terms(std::vector<std::pair<int, int>> terms) {
    std::sort(terms.begin(), terms.end());
    Monomial m;
    for (auto [v, e] : terms) {
        if (e < 0) throw std::invalid_argument("negative exponent");
        if (e == 0) continue;
        if (!m.terms_.empty() && m.terms_.back().first == v)
            m.terms_.back().second += e;
        else
            m.terms_.emplace_back(v, e);
        m.degree_ += e;
    }
    return m;
}

int Monomial::exponent(int v) const {
    for (auto [w, e] : terms_)
        if (w == v) return e;
    return 0;
}

Monomial Monomial::operator*(const Monomial& o) const {
    Monomial r;
    r.terms_.reserve(terms_.size() + o.terms_.size());
    std::size_t i = 0, j = 0;
    while (i < terms_.size() || j < o.terms_.size()) {
        if (j == o.terms_.size() || (i < terms_.size() && terms_[i].first < o.terms_[j].first)) {
            r.terms_.push_back(terms_[i++]);
        } else if (i == terms_.size() || o.terms_[j].first < terms_[i].first) {
            r.terms_.push_back(o.terms_[j++]);
        } else {
            r.terms_.emplace_back(terms_[i].first, terms_[i].second + o.terms_[j].second);
            ++i;
            ++j;
        }
    }
    r.degree_ = degree_ + o.degree_;
    return r;
}

Monomial Monomial::without(int v, int& e) const {
    Monomial r;
    e = 0;
    for (auto [w, k] : terms_) {
        if (w == v) {
            e = k;
            continue;
        }
        r.terms_.emplace_back(w, k);
        r.degree_ += k;
    }
    return r;
}

Monomial Monomial::with_exponent(int v, int e) const {
    int old = 0;
    Monomial r = without(v, old);
    return r * Monomial::of(v, e);
}

std::string Monomial::str() const {
    if (terms_.empty()) return "1";
    std::string s;
    for (auto [v, e] : terms_) {
        if (!s.empty()) s += "*";
        s += var_name(v);
        if (e > 1) s += "^" + std::to_string(e);
    }
    return s;
}

bool MonomialLess::operator()(const Monomial& a, const Monomial& b) const {
    if (a.degree() != b.degree()) return a.degree() < b.degree();
    const auto& ta = a.terms();
    const auto& tb = b.terms();
    std::size_t i = 0, j = 0;
    while (i < ta.size() && j < tb.size()) {
        if (ta[i] == tb[j]) {
            ++i;
            ++j;
            continue;
        }
        if (ta[i].first != tb[j].first) return ta[i].first < tb[j].first;  // a has the lower variable
        return ta[i].second > tb[j].second;
    }
    // Same total degree and equal prefix means the remainders are equal too.
    return false;
}

LinExpr LinExpr::unknown(int id, const Rational& coef) {
    LinExpr e;
    e.add_term(id, coef);
    return e;
}

void LinExpr::add_term(int id, const Rational& c) {
    if (sgn(c) == 0) return;
    auto [it, inserted] = terms_.emplace(id, c);
    if (!inserted) {
        it->second += c;
        if (sgn(it->second) == 0) terms_.erase(it);
    }
}

LinExpr& LinExpr::operator+=(const LinExpr& o) {
    for (const auto& [id, c] : o.terms_) add_term(id, c);
    constant_ += o.constant_;
    return *this;
}

LinExpr& LinExpr::operator-=(const LinExpr& o) {
    for (const auto& [id, c] : o.terms_) add_term(id, -c);
    constant_ -= o.constant_;
    return *this;
}

LinExpr& LinExpr::operator*=(const Rational& s) {
    if (sgn(s) == 0) {
        terms_.clear();
        constant_ = 0;
        return *this;
    }
    for (auto& [id, c] : terms_) c *= s;
    constant_ *= s;
    return *this;
}

LinExpr LinExpr::operator-() const {
    LinExpr r = *this;
    r *= Rational(-1);
    return r;
}

double LinExpr::evaluate(const std::vector<double>& values) const {
    double s = constant_.get_d();
    for (const auto& [id, c] : terms_) s += c.get_d() * values.at(static_cast<std::size_t>(id));
    return s;
}

template <class C>
std::vector<int> Poly<C>::variables() const {
    std::vector<int> vs;
    for (const auto& [m, c] : terms_)
        for (auto [v, e] : m.terms()) vs.push_back(v);
    std::sort(vs.begin(), vs.end());
    vs.erase(std::unique(vs.begin(), vs.end()), vs.end());
    return vs;
}

template <class C>
Poly<C> differentiate(const Poly<C>& p, int v) {
    Poly<C> r;
    for (const auto& [m, c] : p.terms()) {
        int e = m.exponent(v);
        if (e == 0) continue;
        r.add(m.with_exponent(v, e - 1), detail::mul(c, Rational(e)));
    }
    return r;
}

namespace {
RPoly power(const RPoly& q, int e) {
    RPoly r(Rational(1));
    for (int k = 0; k < e; ++k) r = r * q;
    return r;
}
}  // namespace

template <class C>
Poly<C> substitute(const Poly<C>& p, int v, const RPoly& q) {
    Poly<C> r;
    std::map<int, RPoly> powers;
    for (const auto& [m, c] : p.terms()) {
        int e = 0;
        Monomial rest = m.without(v, e);
        if (e == 0) {
            r.add(rest, c);
            continue;
        }
        auto it = powers.find(e);
        if (it == powers.end()) it = powers.emplace(e, power(q, e)).first;
        for (const auto& [mq, cq] : it->second.terms()) r.add(rest * mq, detail::mul(c, cq));
    }
    return r;
}

template <class C>
Poly<C> substitute(const Poly<C>& p, int v, const Rational& value) {
    return substitute(p, v, RPoly(value));
}

template <class C>
Poly<C> affine_substitute(const Poly<C>& p, int v, const Rational& alpha, const Rational& beta) {
    RPoly q = RPoly::variable(v).scaled(alpha) + RPoly(beta);
    return substitute(p, v, q);
}

template <class C>
Poly<C> rename(const Poly<C>& p, int v, int w) {
    Poly<C> r;
    for (const auto& [m, c] : p.terms()) {
        int e = 0;
        Monomial rest = m.without(v, e);
        if (e > 0 && rest.exponent(w) > 0) throw std::invalid_argument("rename target already present");
        r.add(rest * Monomial::of(w, e), c);
    }
    return r;
}

namespace {
template <class C>
Poly<C> antiderivative(const Poly<C>& p, int v) {
    Poly<C> r;
    for (const auto& [m, c] : p.terms()) {
        int e = m.exponent(v);
        r.add(m.with_exponent(v, e + 1), detail::mul(c, Rational(1, e + 1)));
    }
    return r;
}
}  // namespace

template <class C>
Poly<C> definite_integral(const Poly<C>& p, int v, const Rational& a, const Rational& b) {
    Poly<C> F = antiderivative(p, v);
    return substitute(F, v, b) - substitute(F, v, a);
}

template <class C>
Poly<C> definite_integral(const Poly<C>& p, int v, const RPoly& a, const RPoly& b) {
    Poly<C> F = antiderivative(p, v);
    return substitute(F, v, b) - substitute(F, v, a);
}

double evaluate(const DPoly& p, const std::map<int, double>& point) {
    double s = 0;
    for (const auto& [m, c] : p.terms()) {
        double t = c;
        for (auto [v, e] : m.terms()) {
            auto it = point.find(v);
            if (it == point.end()) throw std::invalid_argument("unassigned variable " + var_name(v));
            t *= std::pow(it->second, e);
        }
        s += t;
    }
    return s;
}

double evaluate(const RPoly& p, const std::map<int, double>& point) { return evaluate(to_double(p), point); }

Rational evaluate_exact(const RPoly& p, const std::map<int, Rational>& point) {
    Rational s = 0;
    for (const auto& [m, c] : p.terms()) {
        Rational t = c;
        for (auto [v, e] : m.terms()) {
            auto it = point.find(v);
            if (it == point.end()) throw std::invalid_argument("unassigned variable " + var_name(v));
            for (int k = 0; k < e; ++k) t *= it->second;
        }
        s += t;
    }
    return s;
}

DPoly assign(const LPoly& p, const std::vector<double>& values) {
    DPoly r;
    for (const auto& [m, c] : p.terms()) r.add(m, c.evaluate(values));
    return r;
}

DPoly to_double(const RPoly& p) {
    DPoly r;
    for (const auto& [m, c] : p.terms()) r.add(m, c.get_d());
    return r;
}

RPoly to_rational(const DPoly& p) {
    RPoly r;
    for (const auto& [m, c] : p.terms()) r.add(m, to_rational(c));
    return r;
}

namespace {
std::string coef_str(const Rational& c) { return c.get_str(); }
std::string coef_str(double c) {
    std::ostringstream os;
    os.precision(17);
    os << c;
    return os.str();
}
std::string coef_str(const LinExpr& c) {
    std::string s = "(" + c.constant().get_str();
    for (const auto& [id, k] : c.terms()) s += " + " + k.get_str() + "*u" + std::to_string(id);
    return s + ")";
}
}  // namespace

template <class C>
std::string to_string(const Poly<C>& p) {
    if (p.is_zero()) return "0";
    std::string s;
    for (const auto& [m, c] : p.terms()) {
        if (!s.empty()) s += " + ";
        s += coef_str(c);
        if (!m.is_constant()) s += "*" + m.str();
    }
    return s;
}

namespace {
void enumerate(const std::vector<int>& vars, std::size_t k, int left, std::vector<std::pair<int, int>>& cur,
               std::vector<Monomial>& out) {
    if (k == vars.size()) {
        out.push_back(Monomial::from_terms(cur));
        return;
    }
    for (int e = 0; e <= left; ++e) {
        cur.emplace_back(vars[k], e);
        enumerate(vars, k + 1, left - e, cur, out);
        cur.pop_back();
    }
}
}  // namespace

MonomialBasis monomial_basis(const std::vector<int>& vars, int d) {
    if (d < 0) throw std::invalid_argument("negative basis degree");
    MonomialBasis b;
    b.vars = vars;
    std::sort(b.vars.begin(), b.vars.end());
    b.vars.erase(std::unique(b.vars.begin(), b.vars.end()), b.vars.end());
    b.degree = d;
    std::vector<std::pair<int, int>> cur;
    enumerate(b.vars, 0, d, cur, b.monomials);
    std::sort(b.monomials.begin(), b.monomials.end(), MonomialLess{});
    return b;
}

MonomialBasis product_basis(const MonomialBasis& a, const MonomialBasis& b) {
    MonomialBasis r;
    r.vars = a.vars;
    r.vars.insert(r.vars.end(), b.vars.begin(), b.vars.end());
    std::sort(r.vars.begin(), r.vars.end());
    r.vars.erase(std::unique(r.vars.begin(), r.vars.end()), r.vars.end());
    r.degree = a.degree + b.degree;
    for (const auto& ma : a.monomials)
        for (const auto& mb : b.monomials) r.monomials.push_back(ma * mb);
    std::sort(r.monomials.begin(), r.monomials.end(), MonomialLess{});
    r.monomials.erase(std::unique(r.monomials.begin(), r.monomials.end()), r.monomials.end());
    return r;
}

std::vector<double> evaluate_basis(const MonomialBasis& b, const std::map<int, double>& point) {
    std::vector<double> z;
    z.reserve(b.size());
    for (const auto& m : b.monomials) z.push_back(evaluate(DPoly::term(m, 1.0), point));
    return z;
}

RMatrix constant_matrix(const std::vector<std::vector<double>>& rows) {
    std::size_t n = rows.size();
    std::size_t m = n ? rows[0].size() : 0;
    RMatrix r(n, m);
    for (std::size_t i = 0; i < n; ++i) {
        if (rows[i].size() != m) throw std::invalid_argument("ragged matrix");
        for (std::size_t j = 0; j < m; ++j) r(i, j) = RPoly(to_rational(rows[i][j]));
    }
    return r;
}

LPoly to_affine(const RPoly& p) {
    return p.map([](const Rational& c) { return LinExpr(c); });
}

LMatrix to_affine(const RMatrix& m) {
    return m.map([](const RPoly& p) { return to_affine(p); });
}

#define DELAYCERT_INSTANTIATE(C)                                                                   \
    template class Poly<C>;                                                                        \
    template Poly<C> differentiate(const Poly<C>&, int);                                           \
    template Poly<C> definite_integral(const Poly<C>&, int, const Rational&, const Rational&);      \
    template Poly<C> definite_integral(const Poly<C>&, int, const RPoly&, const RPoly&);           \
    template Poly<C> substitute(const Poly<C>&, int, const RPoly&);                                \
    template Poly<C> substitute(const Poly<C>&, int, const Rational&);                             \
    template Poly<C> affine_substitute(const Poly<C>&, int, const Rational&, const Rational&);      \
    template Poly<C> rename(const Poly<C>&, int, int);                                             \
    template std::string to_string(const Poly<C>&);

DELAYCERT_INSTANTIATE(Rational)
DELAYCERT_INSTANTIATE(LinExpr)
DELAYCERT_INSTANTIATE(double)

}  // namespace delaycert::poly
