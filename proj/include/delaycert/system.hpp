#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "delaycert/polynomial.hpp"

namespace delaycert {

enum class SystemKind { LinearSingle, LinearMultiple, LinearDistributed, NonlinearDelay, Ode };

std::string to_string(SystemKind k);
SystemKind system_kind_from_string(const std::string& s);

/// Uncertain, time-invariant parameter with a box.
struct Parameter {
    std::string name;
    double lo = 0, hi = 0;
    int var() const { return poly::var(name); }
    /// (y - lo)(hi - y), nonnegative exactly on the box.
    poly::RPoly box() const;
};

/// Symbol for component `component` of x(t - tau_k); k = 0 is the current state.
int state_var(int delay_index, int component);

struct SystemSpec {
    SystemKind kind = SystemKind::LinearSingle;
    int n = 0;
    std::vector<double> delays;            // tau_1 < ... < tau_K, seconds
    std::vector<poly::RMatrix> A;          // A_0 .. A_K; entries may involve parameters
    poly::RMatrix kernel;                  // distributed A(theta), theta in seconds on [-tau, 0]
    std::vector<poly::RPoly> f;            // polynomial right-hand side over state_var symbols
    std::vector<Parameter> params;
    /// Nonlinear / ODE only: {x : g(x) >= 0} in current-state symbols. Every state
    /// copy (delayed or interior) is assumed to stay in it, so certificates are local.
    std::vector<poly::RPoly> state_region;
    /// Parameter that stands for the largest delay (single-delay parameter-dependent problems).
    std::optional<std::string> tau_param;

    /// Throws std::invalid_argument on structural problems.
    void validate() const;
    /// Largest absolute system coefficient, used to scale the margin threshold.
    double scale() const;
    int num_delays() const { return static_cast<int>(delays.size()); }
    const Parameter* param(const std::string& name) const;
    std::vector<poly::RPoly> region() const;
    std::vector<int> param_vars() const;
    /// Copy with the largest delay replaced; other delays keep their ratio to it.
    SystemSpec with_delay(double tau) const;
    /// Copy with parameters fixed to values (boxes collapsed, matrices evaluated).
    SystemSpec at(const std::map<std::string, double>& values) const;
};

/// Convenience constructors used by tests, examples and the CLI.
SystemSpec linear_single(const std::vector<std::vector<double>>& A, const std::vector<std::vector<double>>& B,
                         double tau);
SystemSpec linear_multiple(const std::vector<std::vector<std::vector<double>>>& A, const std::vector<double>& delays);

}  // namespace delaycert
