#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <random>
#include <sstream>
#include <stdexcept>

#include "delaycert/simulate.hpp"
#include "delaycert/stability.hpp"
#include "json.hpp"

namespace delaycert::stability {

using namespace poly;
using nlohmann::json;

namespace {

bool is_linear_builder(const std::string& name) {
    return name == "single-delay" || name == "multiple-delay" || name == "distributed-delay" ||
           name == "single-delay-parametric";
}

}  // namespace

Certificate extract_certificate(const Build& b, const std::vector<double>& values,
                                const std::map<std::string, double>& point) {
    if (values.size() != static_cast<std::size_t>(b.prog.sdp.num_vars()))
        throw std::invalid_argument("value vector does not match the program");
    std::map<std::string, double> full = point;
    for (const auto& p : b.spec.params)
        if (!full.count(p.name)) full[p.name] = 0.5 * (p.lo + p.hi);
    const SystemSpec at = full.empty() ? b.spec : b.spec.at(full);
    const double T = b.spec.tau_param ? full.at(*b.spec.tau_param) : b.time_scale;
    const Rational Tq = to_rational(T);
    Rational inv = Rational(1) / Tq;
    inv.canonicalize();
    const int th = b.sym.theta, om = b.sym.omega;

    auto fix = [&](const LPoly& p) {
        DPoly d = assign(p, values);
        for (const auto& [name, v] : full) d = substitute(d, var(name), to_rational(v));
        return d;
    };
    // Normalized s = theta / T: f(theta) = f~(theta / T) / T^k for k normalized arguments.
    auto seconds = [&](DPoly d, bool two) {
        d = affine_substitute(d, th, inv, Rational(0));
        if (two) d = affine_substitute(d, om, inv, Rational(0));
        return d.scaled(two ? 1 / (T * T) : 1 / T);
    };
    auto seconds_m = [&](const LMatrix& m, bool two) { return m.map([&](const LPoly& p) { return seconds(fix(p), two); }); };
    auto constant_matrix_of = [&](const LMatrix& m) {
        Eigen::MatrixXd out(m.rows(), m.cols());
        for (std::size_t i = 0; i < m.rows(); ++i)
            for (std::size_t j = 0; j < m.cols(); ++j) {
                DPoly d = fix(m(i, j));
                if (d.degree() > 0) throw std::logic_error("P depends on an unfixed symbol");
                out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = d.coefficient(Monomial());
            }
        return out;
    };

    Certificate c;
    c.kind = b.spec.kind;
    c.builder = b.builder;
    c.n = b.spec.n;
    c.degree = b.degree;
    c.weight_power = b.weight_power;
    c.delays = at.delays;
    c.params = full;
    c.margin = values.at(static_cast<std::size_t>(b.margin_var));
    const bool delay_dependent_nl = b.builder == "nonlinear-single" || b.builder == "nonlinear-multiple";
    c.decay_rate = delay_dependent_nl ? c.margin / T : c.margin;
    c.spec_hash = spec_hash(b.spec);

    if (is_linear_builder(b.builder)) {
        c.P = constant_matrix_of(b.lin.P);
        for (const auto& q : b.lin.Q) c.Q.push_back(seconds_m(q, false));
        for (const auto& s : b.lin.S) c.S.push_back(seconds_m(s, false));
        for (const auto& row : b.lin.R) {
            c.R.emplace_back();
            for (const auto& r : row) c.R.back().push_back(seconds_m(r, true));
        }
    } else if (delay_dependent_nl) {
        for (const auto& g : b.nl.g) c.g.push_back(seconds(fix(g), false));
        for (const auto& row : b.nl.h) {
            c.h.emplace_back();
            for (const auto& h : row) c.h.back().push_back(seconds(fix(h), true));
        }
    } else if (!b.nl.P.empty()) {
        c.P = constant_matrix_of(b.nl.P[0]);
    } else {
        for (const auto& p : b.nl.p) c.p.push_back(fix(p));
    }
    return c;
}

Certificate extract_certificate(const Build& b, const Outcome& out, const std::map<std::string, double>& point) {
    if (out.solution.status != sdp::Status::Feasible) throw std::invalid_argument("no feasible solution to extract");
    Certificate c = extract_certificate(b, out.solution.values(b.prog.sdp), point);
    c.grams = out.solution.blocks;
    return c;
}

// ---------------------------------------------------------------------------
// Spec digest

namespace {

std::string canonical(const RPoly& p) {
    std::vector<std::string> terms;
    for (const auto& [m, c] : p.terms()) {
        std::vector<std::string> f;
        for (auto [v, e] : m.terms()) f.push_back(var_name(v) + "^" + std::to_string(e));
        std::sort(f.begin(), f.end());
        std::string t = poly::to_string(c);
        for (const auto& s : f) t += "*" + s;
        terms.push_back(t);
    }
    std::sort(terms.begin(), terms.end());
    std::string out;
    for (const auto& t : terms) out += t + "+";
    return out;
}

std::string canonical(const RMatrix& m) {
    std::string out = std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + "[";
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) out += canonical(m(i, j)) + ";";
    return out + "]";
}

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

std::string spec_hash(const SystemSpec& spec) {
    std::string s = delaycert::to_string(spec.kind) + "|" + std::to_string(spec.n) + "|";
    for (double d : spec.delays) s += num(d) + ",";
    s += "|";
    for (const auto& a : spec.A) s += canonical(a);
    s += "|" + canonical(spec.kernel) + "|";
    for (const auto& f : spec.f) s += canonical(f) + ";";
    s += "|";
    for (const auto& p : spec.params) s += p.name + ":" + num(p.lo) + ":" + num(p.hi) + ";";
    s += "|";
    for (const auto& g : spec.state_region) s += canonical(g) + ";";
    s += "|" + spec.tau_param.value_or("");
    std::uint64_t h = 14695981039346656037ull;  // FNV-1a
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

json poly_json(const DPoly& p) {
    std::vector<int> vars = p.variables();
    std::sort(vars.begin(), vars.end(), [](int a, int b) { return var_name(a) < var_name(b); });
    json names = json::array();
    for (int v : vars) names.push_back(var_name(v));
    std::vector<std::pair<std::vector<int>, double>> rows;
    for (const auto& [m, c] : p.terms()) {
        std::vector<int> e;
        for (int v : vars) e.push_back(m.exponent(v));
        rows.emplace_back(e, c);
    }
    std::sort(rows.begin(), rows.end());
    json terms = json::array();
    for (const auto& [e, c] : rows) terms.push_back(json::array({e, c}));
    return json{{"vars", names}, {"terms", terms}};
}

DPoly poly_from(const json& j) {
    std::vector<int> vars;
    for (const auto& n : j.at("vars")) vars.push_back(var(n.get<std::string>()));
    DPoly p;
    for (const auto& t : j.at("terms")) {
        const auto e = t.at(0).get<std::vector<int>>();
        if (e.size() != vars.size()) throw std::invalid_argument("exponent tuple length mismatch");
        std::vector<std::pair<int, int>> f;
        for (std::size_t k = 0; k < e.size(); ++k)
            if (e[k] > 0) f.emplace_back(vars[k], e[k]);
        std::sort(f.begin(), f.end());
        p.add(Monomial::from_terms(f), t.at(1).get<double>());
    }
    return p;
}

json pmatrix_json(const DMatrix& m) {
    json e = json::array();
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) e.push_back(poly_json(m(i, j)));
    return json{{"rows", m.rows()}, {"cols", m.cols()}, {"entries", e}};
}

DMatrix pmatrix_from(const json& j) {
    const auto r = j.at("rows").get<std::size_t>(), c = j.at("cols").get<std::size_t>();
    const auto& e = j.at("entries");
    if (e.size() != r * c) throw std::invalid_argument("matrix entry count mismatch");
    DMatrix m(r, c);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t k = 0; k < c; ++k) m(i, k) = poly_from(e.at(i * c + k));
    return m;
}

json dense_json(const Eigen::MatrixXd& m) {
    json d = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index k = 0; k < m.cols(); ++k) d.push_back(m(i, k));
    return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", d}};
}

Eigen::MatrixXd dense_from(const json& j) {
    const auto r = j.at("rows").get<Eigen::Index>(), c = j.at("cols").get<Eigen::Index>();
    const auto& d = j.at("data");
    if (d.size() != static_cast<std::size_t>(r * c)) throw std::invalid_argument("matrix data length mismatch");
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index k = 0; k < c; ++k) m(i, k) = d.at(static_cast<std::size_t>(i * c + k)).get<double>();
    return m;
}

template <class T, class F>
json list(const std::vector<T>& v, F&& f) {
    json a = json::array();
    for (const auto& x : v) a.push_back(f(x));
    return a;
}

}  // namespace

std::string certificate_to_json(const Certificate& c) {
    json j;
    j["format"] = "delaycert-certificate";
    j["version"] = Certificate::version;
    j["kind"] = delaycert::to_string(c.kind);
    j["builder"] = c.builder;
    j["n"] = c.n;
    j["degree"] = c.degree;
    j["margin"] = c.margin;
    j["decay_rate"] = c.decay_rate;
    j["weight_power"] = c.weight_power;
    j["delays"] = c.delays;
    j["params"] = c.params;
    j["spec_hash"] = c.spec_hash;
    j["P"] = dense_json(c.P);
    j["Q"] = list(c.Q, pmatrix_json);
    j["S"] = list(c.S, pmatrix_json);
    j["R"] = list(c.R, [](const auto& row) { return list(row, pmatrix_json); });
    j["g"] = list(c.g, poly_json);
    j["h"] = list(c.h, [](const auto& row) { return list(row, poly_json); });
    j["p"] = list(c.p, poly_json);
    j["grams"] = list(c.grams, dense_json);
    return j.dump(1);
}

Certificate certificate_from_json(const std::string& text) {
    const json j = json::parse(text);
    if (j.at("format").get<std::string>() != "delaycert-certificate")
        throw std::invalid_argument("not a certificate document");
    if (j.at("version").get<int>() != Certificate::version) throw std::invalid_argument("unsupported certificate version");
    Certificate c;
    c.kind = system_kind_from_string(j.at("kind").get<std::string>());
    c.builder = j.at("builder").get<std::string>();
    c.n = j.at("n").get<int>();
    c.degree = j.at("degree").get<int>();
    c.margin = j.at("margin").get<double>();
    c.decay_rate = j.at("decay_rate").get<double>();
    c.weight_power = j.at("weight_power").get<int>();
    c.delays = j.at("delays").get<std::vector<double>>();
    c.params = j.at("params").get<std::map<std::string, double>>();
    c.spec_hash = j.at("spec_hash").get<std::string>();
    c.P = dense_from(j.at("P"));
    for (const auto& q : j.at("Q")) c.Q.push_back(pmatrix_from(q));
    for (const auto& s : j.at("S")) c.S.push_back(pmatrix_from(s));
    for (const auto& row : j.at("R")) {
        c.R.emplace_back();
        for (const auto& r : row) c.R.back().push_back(pmatrix_from(r));
    }
    for (const auto& g : j.at("g")) c.g.push_back(poly_from(g));
    for (const auto& row : j.at("h")) {
        c.h.emplace_back();
        for (const auto& h : row) c.h.back().push_back(poly_from(h));
    }
    for (const auto& p : j.at("p")) c.p.push_back(poly_from(p));
    for (const auto& g : j.at("grams")) c.grams.push_back(dense_from(g));
    return c;
}

// ---------------------------------------------------------------------------
// Verification

namespace {

bool in_region(const std::vector<DPoly>& region, const Eigen::VectorXd& x) {
    if (region.empty()) return true;
    std::map<int, double> pt;
    for (Eigen::Index c = 0; c < x.size(); ++c) pt[state_var(0, static_cast<int>(c))] = x(c);
    for (const auto& g : region)
        if (evaluate(g, pt) < -1e-12) return false;
    return true;
}

}  // namespace

VerifyReport verify_certificate(const Certificate& cert, const SystemSpec& spec, const VerifyOptions& opts) {
    if (cert.kind != spec.kind) throw std::invalid_argument("certificate kind does not match the spec");
    if (cert.n != spec.n) throw std::invalid_argument("certificate dimension does not match the spec");
    const SystemSpec at = spec.params.empty() ? spec : spec.at(cert.params);
    VerifyReport rep;
    std::vector<DPoly> region;
    for (const auto& g : at.state_region) region.push_back(to_double(g));
    const double tauK = at.delays.empty() ? 0.0 : at.delays.back();
    const int th = var("theta");
    std::mt19937_64 rng(opts.seed);
    std::uniform_real_distribution<double> coef(-1.0, 1.0), shrink(0.3, 1.0);
    std::uniform_int_distribution<int> degree(0, 3);

    auto draw = [&]() -> std::vector<DPoly> {
        for (int attempt = 0; attempt < 5000; ++attempt) {
            std::vector<DPoly> phi(static_cast<std::size_t>(spec.n));
            const int q = tauK > 0 ? degree(rng) : 0;
            for (auto& p : phi)
                for (int k = 0; k <= q; ++k)
                    p += DPoly::term(Monomial::of(th, k), coef(rng) / std::pow(std::max(tauK, 1.0), k));
            double peak = 0;
            std::vector<Eigen::VectorXd> samples;
            for (int s = 0; s <= 32; ++s) {
                const double t = -tauK * s / 32.0;
                Eigen::VectorXd v(spec.n);
                for (int c = 0; c < spec.n; ++c) v(c) = evaluate(phi[static_cast<std::size_t>(c)], {{th, t}});
                peak = std::max(peak, v.cwiseAbs().maxCoeff());
                samples.push_back(v);
            }
            if (peak < 1e-3) continue;
            const double scale = opts.history_amplitude * shrink(rng) / peak;
            bool ok = true;
            for (auto& v : samples) ok = ok && in_region(region, scale * v);
            if (!ok) continue;
            for (auto& p : phi) p = p.scaled(scale);
            return phi;
        }
        throw std::runtime_error("could not sample a history inside the state region");
    };

    const double h = simulate::default_step(at);
    const double t_end = tauK > 0 ? 20 * tauK : 20.0;
    rep.worst_positivity = std::numeric_limits<double>::infinity();
    rep.worst_decrease = -std::numeric_limits<double>::infinity();
    for (int trial = 0; trial < opts.trials; ++trial) {
        const auto phi = draw();
        auto history = simulate::polynomial_history(phi);
        ++rep.trials;
        // (a) V(phi) >= (margin / 2) |phi(0)|^2.
        const double v = simulate::functional_value(cert, simulate::history_segment(history, tauK));
        const double x2 = history(0).squaredNorm();
        const double lower = 0.5 * cert.margin * x2;
        const double rel = (v - lower) / std::max({std::abs(v), lower, 1e-300});
        rep.worst_positivity = std::min(rep.worst_positivity, rel);
        if (v < lower - opts.tolerance * std::max(std::abs(v), lower)) ++rep.positivity_violations;
        // (b) decrease along the simulated solution.
        auto traj = simulate::integrate(at, history, t_end, h);
        if (traj.blow_up) {
            rep.blow_up = true;
            continue;
        }
        bool exited = false;
        for (const auto& x : traj.x) exited = exited || !in_region(region, x);
        if (exited) {
            ++rep.region_exits;
            continue;
        }
        auto dec = simulate::decrease_check(cert, traj, opts.tolerance);
        rep.worst_decrease = std::max(rep.worst_decrease, dec.worst_violation);
        if (!dec.passed) ++rep.decrease_violations;
    }
    rep.passed = rep.trials > 0 && rep.positivity_violations == 0 && rep.decrease_violations == 0 &&
                 rep.region_exits == 0 && !rep.blow_up;
    std::ostringstream msg;
    msg << rep.trials << " histories: " << rep.positivity_violations << " positivity and " << rep.decrease_violations
        << " decrease violations";
    if (rep.region_exits) msg << ", " << rep.region_exits << " left the state region";
    if (rep.blow_up) msg << ", solution blow-up (certificate contradicted)";
    rep.message = msg.str();
    return rep;
}

}  // namespace delaycert::stability
