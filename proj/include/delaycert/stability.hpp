#pragma once

// Stability SDPs for linear and nonlinear delay systems, certificate
// extraction and independent re-verification.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "delaycert/cones.hpp"
#include "delaycert/sdp.hpp"
#include "delaycert/sos.hpp"
#include "delaycert/system.hpp"

namespace delaycert::stability {

enum class Verdict { Certified, NotCertified, Unknown };
std::string to_string(Verdict v);

/// Free symbols in which functional data are expressed.
struct Symbols {
    int theta = poly::var("theta");
    int omega = poly::var("omega");
};

/// Complete quadratic functional data as affine expressions in the SDP unknowns,
/// in the normalized coordinate s = theta / tau_K on [-1, 0]:
///   Q~_i(s) = tau_K Q_i(tau_K s), S~_i(s) = tau_K S_i(tau_K s),
///   R~_ij(s, r) = tau_K^2 R_ij(tau_K s, tau_K r).
struct LinearFunctional {
    poly::LMatrix P;
    std::vector<poly::LMatrix> Q, S;
    std::vector<std::vector<poly::LMatrix>> R;
    /// tau_K dV/dt = sum_j int_{piece j} xi^T D_j xi ds - sum_ij int int psi(s)^T L_ij(s, r) psi(r),
    /// xi = [x(t); x(t - tau_1); ...; x(t - tau_K); x(t + tau_K s)], psi(s) = x(t + tau_K s).
    std::vector<poly::LMatrix> D;
    std::vector<std::vector<poly::LMatrix>> L;
};

/// Nonlinear functional data. Delay dependent:
///   V = sum_i int_{I_i} g_i(x(0), x(theta), theta) + sum_ij int int h_ij(x(theta), x(omega), theta, omega)
/// in normalized theta. Delay independent / ODE: p_0 .. p_K (p_0 alone for an ODE).
struct NonlinearFunctional {
    std::vector<poly::LPoly> g;
    std::vector<std::vector<poly::LPoly>> h;
    std::vector<poly::LPoly> p;
    std::vector<poly::LMatrix> P;  // linear-uncertain ODE: P(y)
    /// tau_K dV/dt = sum_j int ghat_j ds - sum_ij int int hhat_ij; for p-type functionals vdot = dV/dt.
    std::vector<poly::LPoly> ghat;
    std::vector<std::vector<poly::LPoly>> hhat;
    poly::LPoly vdot;
};

/// Symbols for nonlinear functionals: x(0) uses state_var(0, c); x(theta) and
/// x(omega) get their own symbols.
int theta_state_var(int component);
int omega_state_var(int component);

struct Build {
    SystemSpec spec;
    int degree = 0;
    std::string builder;
    sos::Program prog;
    int margin_var = -1;      // unknown id of epsilon / alpha
    double threshold = 0;     // certified iff margin >= threshold
    double time_scale = 1;    // tau_K used for normalization (1 when not applicable)
    cones::Domain domain;     // normalized pieces
    Symbols sym;
    LinearFunctional lin;
    NonlinearFunctional nl;
    /// Derivative condition uses alpha * ||x(0)||^(2r); r = ceil((m+1)/2) for m the
    /// lowest state degree in f, since dV/dt cannot dominate ||x||^2 when m > 1.
    int weight_power = 1;
};

Build build_single_delay(const SystemSpec& spec, int d);
Build build_multiple_delay(const SystemSpec& spec, int d);
Build build_distributed_delay(const SystemSpec& spec, int d);
/// d bounds the state degree of g and h; d_theta their degree in theta (default d).
Build build_nonlinear_single(const SystemSpec& spec, int d, int d_theta = -1);
Build build_nonlinear_multiple(const SystemSpec& spec, int d, int d_theta = -1);
Build build_delay_independent(const SystemSpec& spec, int d);
Build build_ode(const SystemSpec& spec, int d);
/// Single delay with tau and/or matrix entries ranging over parameter boxes.
Build build_single_delay_pd(const SystemSpec& spec, int d_theta, int d_param);
/// Dispatch on spec.kind (linear-single with parameters goes to the parameter-dependent builder).
Build build(const SystemSpec& spec, int d, int d_param = 2);

struct Outcome {
    Verdict verdict = Verdict::Unknown;
    double margin = 0;
    sdp::SdpSolution solution;
    double gram_residual = 0;
    std::string message;
};

Outcome solve(const Build& b, const sdp::SolverOptions& opts = {});

/// Recovered functional in original (seconds) coordinates, theta and omega in [-tau_K, 0].
///   linear: V = x^T P x + sum_i int_{I_i} 2 x^T Q_i phi + phi^T S_i phi + sum_ij int int phi^T R_ij phi
///   delay dependent nonlinear: V = sum_i int_{I_i} g_i(x(0), phi(theta), theta) + sum_ij int int h_ij
///   delay independent: V = p_0(x(0)) + sum_k int_{-tau_k}^0 p_k(phi(theta)); ODE: V = p_0(x) or x^T P x
/// with piece I_i = [-tau_i, -tau_{i-1}]. V >= margin |x(0)|^2 and dV/dt <= -decay_rate |x(0)|^(2r).
struct Certificate {
    static constexpr int version = 1;
    SystemKind kind = SystemKind::LinearSingle;
    std::string builder;
    int n = 0;
    int degree = 0;
    double margin = 0;
    double decay_rate = 0;
    int weight_power = 1;
    std::vector<double> delays;
    std::map<std::string, double> params;  // parameter point the data were evaluated at
    // linear
    Eigen::MatrixXd P;
    std::vector<poly::DMatrix> Q, S;             // Q_i(theta), S_i(theta)
    std::vector<std::vector<poly::DMatrix>> R;   // R_ij(theta, omega)
    // nonlinear (theta, omega in seconds)
    std::vector<poly::DPoly> g;
    std::vector<std::vector<poly::DPoly>> h;
    std::vector<poly::DPoly> p;
    std::vector<Eigen::MatrixXd> grams;
    std::string spec_hash;
};

/// Requires a feasible solution; parameter-dependent data are evaluated at `point`
/// (missing parameters default to the box centre).
Certificate extract_certificate(const Build& b, const Outcome& out,
                                const std::map<std::string, double>& point = {});
/// Same mapping for an arbitrary assignment of the SDP unknowns (no Gram blocks recorded).
Certificate extract_certificate(const Build& b, const std::vector<double>& values,
                                const std::map<std::string, double>& point = {});

struct VerifyReport {
    bool passed = false;
    int trials = 0;
    int positivity_violations = 0;
    int decrease_violations = 0;
    int region_exits = 0;  // local certificates: trajectories that left the state region
    bool blow_up = false;
    double worst_positivity = 0;  // min over trials of V - (eps/2)|x(0)|^2, relative
    double worst_decrease = 0;    // max over samples of dV/dt + (eps/2)|x|^2, relative
    std::string message;
};

struct VerifyOptions {
    int trials = 100;
    unsigned seed = 1;
    double history_amplitude = 1.0;
    double tolerance = 1e-6;
};

VerifyReport verify_certificate(const Certificate& cert, const SystemSpec& spec, const VerifyOptions& opts = {});

/// Content digest of a spec (hex), stable across runs.
std::string spec_hash(const SystemSpec& spec);

std::string certificate_to_json(const Certificate& c);
Certificate certificate_from_json(const std::string& text);

}  // namespace delaycert::stability
