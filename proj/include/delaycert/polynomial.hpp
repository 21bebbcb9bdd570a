#pragma once

#include <gmpxx.h>

#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace delaycert::poly {

using Rational = mpq_class;

/// Exact conversion of a double (every finite double is a dyadic rational).
Rational to_rational(double v);
/// Canonical a/b (mpq_class does not canonicalize on construction).
Rational frac(long a, long b);
double to_double(const Rational& q);
std::string to_string(const Rational& q);

// Variables are interned once per process; ids are stable for the run and
// define the global monomial order.
int var(std::string_view name);
const std::string& var_name(int id);

class Monomial {
public:
    Monomial() = default;
    static Monomial of(int v, int exponent = 1);
    static Monomial from_terms(std::vector<std::pair<int, int>> terms);

    int degree() const { return degree_; }
    int exponent(int v) const;
    const std::vector<std::pair<int, int>>& terms() const { return terms_; }
    bool is_constant() const { return terms_.empty(); }

    Monomial operator*(const Monomial& o) const;
    // Removes variable v; returns its exponent through `e`.
    Monomial without(int v, int& e) const;
    Monomial with_exponent(int v, int e) const;

    friend bool operator==(const Monomial& a, const Monomial& b) { return a.terms_ == b.terms_; }
    std::string str() const;

private:
    std::vector<std::pair<int, int>> terms_;  // sorted by variable id, exponents > 0
    int degree_ = 0;
};

// Graded order: total degree first, then lexicographic with the larger
// exponent on the lower variable id listed first (x² < xy < y² for x<y).
struct MonomialLess {
    bool operator()(const Monomial& a, const Monomial& b) const;
};

// Coefficients that are affine in SDP unknowns.
class LinExpr {
public:
    LinExpr() = default;
    LinExpr(const Rational& c) : constant_(c) {}  // NOLINT implicit constants are the common case
    LinExpr(int c) : constant_(c) {}               // NOLINT
    static LinExpr unknown(int id, const Rational& coef = 1);

    const std::map<int, Rational>& terms() const { return terms_; }
    const Rational& constant() const { return constant_; }
    bool is_zero() const { return terms_.empty() && sgn(constant_) == 0; }
    bool is_constant() const { return terms_.empty(); }

    LinExpr& operator+=(const LinExpr& o);
    LinExpr& operator-=(const LinExpr& o);
    LinExpr& operator*=(const Rational& s);
    LinExpr operator-() const;
    void add_term(int id, const Rational& c);

    double evaluate(const std::vector<double>& values) const;
    friend bool operator==(const LinExpr& a, const LinExpr& b) {
        return a.constant_ == b.constant_ && a.terms_ == b.terms_;
    }

private:
    std::map<int, Rational> terms_;
    Rational constant_ = 0;
};

inline LinExpr operator+(LinExpr a, const LinExpr& b) { return a += b; }
inline LinExpr operator-(LinExpr a, const LinExpr& b) { return a -= b; }
inline LinExpr operator*(LinExpr a, const Rational& s) { return a *= s; }
inline LinExpr operator*(const Rational& s, LinExpr a) { return a *= s; }

namespace detail {
inline bool is_zero(const Rational& c) { return sgn(c) == 0; }
inline bool is_zero(const LinExpr& c) { return c.is_zero(); }
inline bool is_zero(double c) { return c == 0.0; }

template <class A, class B>
struct product;
template <> struct product<Rational, Rational> { using type = Rational; };
template <> struct product<LinExpr, Rational> { using type = LinExpr; };
template <> struct product<Rational, LinExpr> { using type = LinExpr; };
template <> struct product<double, double> { using type = double; };
template <> struct product<double, Rational> { using type = double; };

inline Rational mul(const Rational& a, const Rational& b) { return a * b; }
inline LinExpr mul(const LinExpr& a, const Rational& b) { return a * b; }
inline LinExpr mul(const Rational& a, const LinExpr& b) { return b * a; }
inline double mul(double a, double b) { return a * b; }
inline double mul(double a, const Rational& b) { return a * b.get_d(); }

template <class C> C from_rational(const Rational& r);
template <> inline Rational from_rational<Rational>(const Rational& r) { return r; }
template <> inline LinExpr from_rational<LinExpr>(const Rational& r) { return LinExpr(r); }
template <> inline double from_rational<double>(const Rational& r) { return r.get_d(); }
}  // namespace detail

template <class C>
class Poly {
public:
    using Terms = std::map<Monomial, C, MonomialLess>;

    Poly() = default;
    Poly(const C& c) { add(Monomial(), c); }  // NOLINT constant polynomial
    static Poly variable(int v) { return Poly::term(Monomial::of(v), detail::from_rational<C>(1)); }
    static Poly term(const Monomial& m, const C& c) {
        Poly p;
        p.add(m, c);
        return p;
    }

    const Terms& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }
    int degree() const {
        int d = -1;
        for (const auto& [m, c] : terms_) d = std::max(d, m.degree());
        return d;
    }
    int degree_in(int v) const {
        int d = 0;
        for (const auto& [m, c] : terms_) d = std::max(d, m.exponent(v));
        return d;
    }
    std::vector<int> variables() const;
    C coefficient(const Monomial& m) const {
        auto it = terms_.find(m);
        return it == terms_.end() ? C{} : it->second;
    }

    void add(const Monomial& m, const C& c) {
        if (detail::is_zero(c)) return;
        auto it = terms_.find(m);
        if (it == terms_.end()) {
            terms_.emplace(m, c);
            return;
        }
        it->second += c;
        if (detail::is_zero(it->second)) terms_.erase(it);
    }

    Poly& operator+=(const Poly& o) {
        for (const auto& [m, c] : o.terms_) add(m, c);
        return *this;
    }
    Poly& operator-=(const Poly& o) {
        for (const auto& [m, c] : o.terms_) add(m, -c);
        return *this;
    }
    Poly operator-() const {
        Poly r;
        for (const auto& [m, c] : terms_) r.terms_.emplace(m, -c);
        return r;
    }
    friend Poly operator+(Poly a, const Poly& b) { return a += b; }
    friend Poly operator-(Poly a, const Poly& b) { return a -= b; }
    friend bool operator==(const Poly& a, const Poly& b) { return a.terms_ == b.terms_; }

    template <class S>
    Poly scaled(const S& s) const {
        Poly r;
        for (const auto& [m, c] : terms_) r.add(m, detail::mul(c, s));
        return r;
    }

    // Coefficient-wise map into another coefficient type.
    template <class F>
    auto map(F&& f) const {
        using D = std::decay_t<decltype(f(std::declval<const C&>()))>;
        Poly<D> r;
        for (const auto& [m, c] : terms_) r.add(m, f(c));
        return r;
    }

private:
    Terms terms_;
};

template <class A, class B>
Poly<typename detail::product<A, B>::type> operator*(const Poly<A>& p, const Poly<B>& q) {
    Poly<typename detail::product<A, B>::type> r;
    for (const auto& [ma, ca] : p.terms())
        for (const auto& [mb, cb] : q.terms()) r.add(ma * mb, detail::mul(ca, cb));
    return r;
}

using RPoly = Poly<Rational>;
using LPoly = Poly<LinExpr>;
using DPoly = Poly<double>;

template <class C> Poly<C> differentiate(const Poly<C>& p, int v);

// ∫_a^b p dv, leaving a polynomial in the remaining variables.
template <class C> Poly<C> definite_integral(const Poly<C>& p, int v, const Rational& a, const Rational& b);
// Same with polynomial bounds (used when an interval endpoint is a parameter).
template <class C> Poly<C> definite_integral(const Poly<C>& p, int v, const RPoly& a, const RPoly& b);

// Substitute v := q and expand.
template <class C> Poly<C> substitute(const Poly<C>& p, int v, const RPoly& q);
template <class C> Poly<C> substitute(const Poly<C>& p, int v, const Rational& value);
// v := alpha*v + beta.
template <class C> Poly<C> affine_substitute(const Poly<C>& p, int v, const Rational& alpha, const Rational& beta);
// Rename a variable (v -> w), w must not occur in p.
template <class C> Poly<C> rename(const Poly<C>& p, int v, int w);

double evaluate(const DPoly& p, const std::map<int, double>& point);
double evaluate(const RPoly& p, const std::map<int, double>& point);
Rational evaluate_exact(const RPoly& p, const std::map<int, Rational>& point);

// Assign numeric values to the unknowns of an affine-coefficient polynomial.
DPoly assign(const LPoly& p, const std::vector<double>& values);
DPoly to_double(const RPoly& p);
RPoly to_rational(const DPoly& p);

template <class C> std::string to_string(const Poly<C>& p);

/// Parses text such as "-x1^3 + 9/10*x1_d1^3 - 2.5*a*(x2 - 1)". Decimals are read
/// exactly; identifiers become symbols. Throws std::invalid_argument with the column.
RPoly parse_polynomial(std::string_view text);

struct MonomialBasis {
    std::vector<int> vars;
    int degree = 0;
    std::vector<Monomial> monomials;
    std::size_t size() const { return monomials.size(); }
};

/// All monomials in `vars` of total degree ≤ d, graded order.
MonomialBasis monomial_basis(const std::vector<int>& vars, int d);
/// Products a·b of two bases over disjoint variables, graded order.
MonomialBasis product_basis(const MonomialBasis& a, const MonomialBasis& b);
/// Z(point) with the basis variables assigned.
std::vector<double> evaluate_basis(const MonomialBasis& b, const std::map<int, double>& point);

template <class C>
class PolyMatrix {
public:
    PolyMatrix() = default;
    PolyMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}
    static PolyMatrix identity(std::size_t n) {
        PolyMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = Poly<C>(detail::from_rational<C>(1));
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    Poly<C>& operator()(std::size_t i, std::size_t j) { return data_.at(i * cols_ + j); }
    const Poly<C>& operator()(std::size_t i, std::size_t j) const { return data_.at(i * cols_ + j); }

    int degree() const {
        int d = -1;
        for (const auto& p : data_) d = std::max(d, p.degree());
        return d;
    }
    int degree_in(int v) const {
        int d = 0;
        for (const auto& p : data_) d = std::max(d, p.degree_in(v));
        return d;
    }
    bool is_symmetric() const {
        if (rows_ != cols_) return false;
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = i + 1; j < cols_; ++j)
                if (!((*this)(i, j) == (*this)(j, i))) return false;
        return true;
    }

    PolyMatrix transpose() const {
        PolyMatrix t(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
        return t;
    }
    PolyMatrix& operator+=(const PolyMatrix& o) {
        check_same(o);
        for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
        return *this;
    }
    PolyMatrix& operator-=(const PolyMatrix& o) {
        check_same(o);
        for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
        return *this;
    }
    friend PolyMatrix operator+(PolyMatrix a, const PolyMatrix& b) { return a += b; }
    friend PolyMatrix operator-(PolyMatrix a, const PolyMatrix& b) { return a -= b; }
    PolyMatrix operator-() const {
        PolyMatrix r(rows_, cols_);
        for (std::size_t k = 0; k < data_.size(); ++k) r.data_[k] = -data_[k];
        return r;
    }
    template <class S>
    PolyMatrix scaled(const S& s) const {
        PolyMatrix r(rows_, cols_);
        for (std::size_t k = 0; k < data_.size(); ++k) r.data_[k] = data_[k].scaled(s);
        return r;
    }
    template <class F>
    auto map(F&& f) const {
        using D = std::decay_t<decltype(f(std::declval<const Poly<C>&>()))>;
        PolyMatrix<typename D::Terms::mapped_type> r(rows_, cols_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) r(i, j) = f((*this)(i, j));
        return r;
    }

    PolyMatrix block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const {
        PolyMatrix b(nr, nc);
        for (std::size_t i = 0; i < nr; ++i)
            for (std::size_t j = 0; j < nc; ++j) b(i, j) = (*this)(r0 + i, c0 + j);
        return b;
    }
    void set_block(std::size_t r0, std::size_t c0, const PolyMatrix& b) {
        for (std::size_t i = 0; i < b.rows(); ++i)
            for (std::size_t j = 0; j < b.cols(); ++j) (*this)(r0 + i, c0 + j) = b(i, j);
    }

private:
    void check_same(const PolyMatrix& o) const {
        if (rows_ != o.rows_ || cols_ != o.cols_) throw std::invalid_argument("PolyMatrix dimension mismatch");
    }
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<Poly<C>> data_;
};

template <class A, class B>
PolyMatrix<typename detail::product<A, B>::type> operator*(const PolyMatrix<A>& a, const PolyMatrix<B>& b) {
    if (a.cols() != b.rows()) throw std::invalid_argument("PolyMatrix product dimension mismatch");
    PolyMatrix<typename detail::product<A, B>::type> r(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j)
            for (std::size_t k = 0; k < a.cols(); ++k) r(i, j) += a(i, k) * b(k, j);
    return r;
}

using RMatrix = PolyMatrix<Rational>;
using LMatrix = PolyMatrix<LinExpr>;
using DMatrix = PolyMatrix<double>;

RMatrix constant_matrix(const std::vector<std::vector<double>>& rows);
LPoly to_affine(const RPoly& p);
LMatrix to_affine(const RMatrix& m);

/// Piecewise polynomial matrix on [-tau_K, 0]: piece i lives on [-b[i+1], -b[i]].
template <class C>
struct PiecewisePolyMatrix {
    std::vector<Rational> breakpoints;  // 0 = b[0] < b[1] < ... < b[K] = tau_K (magnitudes)
    std::vector<PolyMatrix<C>> pieces;
};

}  // namespace delaycert::poly
