#pragma once

// Delay-margin bisection, grid sweeps and parameter-box certification.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "delaycert/stability.hpp"

namespace delaycert::search {

/// One-parameter family of systems, e.g. the delay or an uncertain coefficient.
using Family = std::function<SystemSpec(double)>;

/// Largest delay set to the argument (other delays keep their ratio).
Family delay_family(const SystemSpec& spec);
/// Parameter `name` fixed to the argument; "tau" falls back to the delay when no such parameter exists.
Family param_family(const SystemSpec& spec, const std::string& name);

struct SolveRecord {
    double value = 0;
    stability::Verdict verdict = stability::Verdict::Unknown;
    double margin = 0;
    double gram_residual = 0;
    bool feasible = false;  // the SDP itself was solved (the margin may still be too small)
    double seconds = 0;
    int iterations = 0;
    std::string message;
};

struct SearchOptions {
    int degree = 2;
    sdp::SolverOptions solver;
    /// Verify the certificate at the certified endpoint (bracket soundness).
    bool verify = true;
    stability::VerifyOptions verify_options;
    /// Builder; defaults to stability::build(spec, degree).
    std::function<stability::Build(const SystemSpec&, int)> builder;
};

struct MarginResult {
    double certified = 0;    // last value with a certificate
    double uncertified = 0;  // first value without one
    double lo = 0, hi = 0;   // bracket between them
    int degree = 0;
    std::vector<SolveRecord> solves;
    std::optional<stability::Certificate> certificate;  // at `certified`
    std::optional<stability::VerifyReport> verification;
    int solver_failures = 0;
    /// Filled when a solver failure occurred inside the bracket.
    std::vector<SolveRecord> crosscheck;
};

SolveRecord solve_at(const Family& family, double value, const SearchOptions& opts,
                     std::optional<stability::Certificate>* cert = nullptr);

/// Bisection on the CERTIFIED predicate, assumed monotone in the bracket: one endpoint
/// must certify and the other must not. Stops when the bracket is at most tol wide.
MarginResult margin_bisection(const Family& family, double a, double b, double tol, const SearchOptions& opts);

/// Independent solves, run concurrently.
std::vector<SolveRecord> sweep(const Family& family, const std::vector<double>& grid, const SearchOptions& opts);
/// lo, lo + step, ... up to hi (inclusive within roundoff).
std::vector<double> grid(double lo, double step, double hi);

struct RegionResult {
    stability::Outcome outcome;
    std::optional<stability::Certificate> certificate;  // evaluated at the box centre
    double seconds = 0;
};

/// One parameter-dependent solve that covers every parameter box of the spec.
RegionResult region_certify(const SystemSpec& spec, int d_theta, int d_param, const sdp::SolverOptions& solver = {});

std::string to_json(const std::vector<SolveRecord>& records);
std::string to_json(const MarginResult& r);

}  // namespace delaycert::search
