#include "delaycert/system.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace delaycert {

using namespace poly;

std::string to_string(SystemKind k) {
    switch (k) {
        case SystemKind::LinearSingle: return "linear-single";
        case SystemKind::LinearMultiple: return "linear-multiple";
        case SystemKind::LinearDistributed: return "linear-distributed";
        case SystemKind::NonlinearDelay: return "nonlinear-delay";
        case SystemKind::Ode: return "ode";
    }
    return "?";
}

SystemKind system_kind_from_string(const std::string& s) {
    for (auto k : {SystemKind::LinearSingle, SystemKind::LinearMultiple, SystemKind::LinearDistributed,
                   SystemKind::NonlinearDelay, SystemKind::Ode})
        if (to_string(k) == s) return k;
    throw std::invalid_argument("unknown system kind '" + s + "'");
}

RPoly Parameter::box() const {
    RPoly y = RPoly::variable(var());
    return (y - RPoly(to_rational(lo))) * (RPoly(to_rational(hi)) - y);
}

int state_var(int delay_index, int component) {
    std::string name = "x" + std::to_string(component + 1);
    if (delay_index > 0) name += "_d" + std::to_string(delay_index);
    return var(name);
}

const Parameter* SystemSpec::param(const std::string& name) const {
    for (const auto& p : params)
        if (p.name == name) return &p;
    return nullptr;
}

std::vector<RPoly> SystemSpec::region() const {
    std::vector<RPoly> r;
    for (const auto& p : params)
        if (p.lo < p.hi) r.push_back(p.box());
    return r;
}

std::vector<int> SystemSpec::param_vars() const {
    std::vector<int> v;
    for (const auto& p : params) v.push_back(p.var());
    return v;
}

void SystemSpec::validate() const {
    if (n < 1) throw std::invalid_argument("system dimension must be positive");
    for (std::size_t i = 0; i < delays.size(); ++i) {
        if (!(delays[i] > 0) || !std::isfinite(delays[i])) throw std::invalid_argument("delays must be positive");
        if (i > 0 && !(delays[i] > delays[i - 1])) throw std::invalid_argument("delays must be strictly increasing");
    }
    for (const auto& p : params)
        if (!(p.lo <= p.hi)) throw std::invalid_argument("parameter '" + p.name + "' has an empty box");
    if (tau_param && !param(*tau_param)) throw std::invalid_argument("tau parameter is not declared");
    if (tau_param && param(*tau_param)->lo <= 0) throw std::invalid_argument("delay box must be positive");
    auto check_matrix = [&](const RMatrix& m, const char* what) {
        if (static_cast<int>(m.rows()) != n || static_cast<int>(m.cols()) != n)
            throw std::invalid_argument(std::string(what) + " has wrong dimensions");
    };
    const auto pv = param_vars();
    auto only_params = [&](const RPoly& p, const char* what) {
        for (int v : p.variables())
            if (std::find(pv.begin(), pv.end(), v) == pv.end())
                throw std::invalid_argument(std::string(what) + " uses an undeclared symbol '" + var_name(v) + "'");
    };
    switch (kind) {
        case SystemKind::LinearSingle:
        case SystemKind::LinearMultiple: {
            if (delays.empty()) throw std::invalid_argument("linear delay systems need at least one delay");
            if (kind == SystemKind::LinearSingle && delays.size() != 1)
                throw std::invalid_argument("single-delay system needs exactly one delay");
            if (A.size() != delays.size() + 1) throw std::invalid_argument("need one matrix per delay plus A0");
            for (const auto& m : A) {
                check_matrix(m, "system matrix");
                for (std::size_t i = 0; i < m.rows(); ++i)
                    for (std::size_t j = 0; j < m.cols(); ++j) only_params(m(i, j), "system matrix");
            }
            break;
        }
        case SystemKind::LinearDistributed: {
            if (delays.size() != 1) throw std::invalid_argument("distributed-delay system needs exactly one delay");
            if (A.size() != 1) throw std::invalid_argument("distributed-delay system takes A0 only");
            check_matrix(A[0], "A0");
            check_matrix(kernel, "distributed kernel");
            const int th = var("theta");
            for (std::size_t i = 0; i < kernel.rows(); ++i)
                for (std::size_t j = 0; j < kernel.cols(); ++j)
                    for (int v : kernel(i, j).variables())
                        if (v != th) throw std::invalid_argument("distributed kernel may depend on theta only");
            break;
        }
        case SystemKind::NonlinearDelay:
        case SystemKind::Ode: {
            if (kind == SystemKind::Ode && !delays.empty()) throw std::invalid_argument("ODE takes no delays");
            if (kind == SystemKind::NonlinearDelay && delays.empty())
                throw std::invalid_argument("nonlinear delay system needs at least one delay");
            if (static_cast<int>(f.size()) != n) throw std::invalid_argument("right-hand side has wrong length");
            std::vector<int> allowed = pv;
            for (int k = 0; k <= num_delays(); ++k)
                for (int c = 0; c < n; ++c) allowed.push_back(state_var(k, c));
            for (const auto& fi : f) {
                for (int v : fi.variables())
                    if (std::find(allowed.begin(), allowed.end(), v) == allowed.end())
                        throw std::invalid_argument("right-hand side uses an undeclared symbol '" + var_name(v) + "'");
                // f(0, ..., 0) = 0 for every parameter value: no monomial free of state symbols.
                for (const auto& [m, c] : fi.terms()) {
                    bool has_state = false;
                    for (const auto& [v, e] : m.terms())
                        if (std::find(pv.begin(), pv.end(), v) == pv.end()) has_state = true;
                    if (!has_state) throw std::invalid_argument("right-hand side does not vanish at the origin");
                }
            }
            std::vector<int> current = pv;
            for (int c = 0; c < n; ++c) current.push_back(state_var(0, c));
            for (const auto& g : state_region)
                for (int v : g.variables())
                    if (std::find(current.begin(), current.end(), v) == current.end())
                        throw std::invalid_argument("state region may only use current-state symbols");
            break;
        }
    }
    if (!state_region.empty() && kind != SystemKind::NonlinearDelay && kind != SystemKind::Ode)
        throw std::invalid_argument("state regions apply to nonlinear systems only");
}

double SystemSpec::scale() const {
    double s = 0;
    auto visit = [&](const RPoly& p) {
        for (const auto& [m, c] : p.terms()) s = std::max(s, std::abs(to_double(c)));
    };
    for (const auto& m : A)
        for (std::size_t i = 0; i < m.rows(); ++i)
            for (std::size_t j = 0; j < m.cols(); ++j) visit(m(i, j));
    for (std::size_t i = 0; i < kernel.rows(); ++i)
        for (std::size_t j = 0; j < kernel.cols(); ++j) visit(kernel(i, j));
    for (const auto& p : f) visit(p);
    return s > 0 ? s : 1.0;
}

SystemSpec SystemSpec::with_delay(double tau) const {
    if (delays.empty()) throw std::invalid_argument("system has no delay to rescale");
    SystemSpec s = *this;
    const double last = delays.back();
    for (auto& d : s.delays) d = d / last * tau;
    s.delays.back() = tau;
    return s;
}

SystemSpec SystemSpec::at(const std::map<std::string, double>& values) const {
    SystemSpec s = *this;
    auto sub = [&](RPoly p) {
        for (const auto& [name, v] : values) p = substitute(p, var(name), to_rational(v));
        return p;
    };
    for (auto& m : s.A) m = m.map(sub);
    s.f.clear();
    for (const auto& p : f) s.f.push_back(sub(p));
    for (auto& g : s.state_region) g = sub(g);
    s.params.clear();
    for (const auto& p : params) {
        auto it = values.find(p.name);
        if (it == values.end()) {
            s.params.push_back(p);
        } else if (tau_param && *tau_param == p.name) {
            s.delays = s.with_delay(it->second).delays;
        }
    }
    if (tau_param && values.count(*tau_param)) s.tau_param.reset();
    return s;
}

SystemSpec linear_single(const std::vector<std::vector<double>>& A, const std::vector<std::vector<double>>& B,
                         double tau) {
    SystemSpec s;
    s.kind = SystemKind::LinearSingle;
    s.n = static_cast<int>(A.size());
    s.delays = {tau};
    s.A = {constant_matrix(A), constant_matrix(B)};
    s.validate();
    return s;
}

SystemSpec linear_multiple(const std::vector<std::vector<std::vector<double>>>& A, const std::vector<double>& delays) {
    SystemSpec s;
    s.kind = SystemKind::LinearMultiple;
    s.n = A.empty() ? 0 : static_cast<int>(A[0].size());
    s.delays = delays;
    for (const auto& m : A) s.A.push_back(constant_matrix(m));
    s.validate();
    return s;
}

}  // namespace delaycert
