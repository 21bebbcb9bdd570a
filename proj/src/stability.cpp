#include <stdexcept>

#include "delaycert/stability.hpp"

namespace delaycert::stability {

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::Certified: return "CERTIFIED";
        case Verdict::NotCertified: return "NOT CERTIFIED";
        case Verdict::Unknown: return "UNKNOWN";
    }
    return "?";
}

int theta_state_var(int component) { return poly::var("xt" + std::to_string(component + 1)); }
int omega_state_var(int component) { return poly::var("xw" + std::to_string(component + 1)); }

Outcome solve(const Build& b, const sdp::SolverOptions& opts) {
    Outcome out;
    out.solution = sdp::solve(b.prog.sdp, opts);
    const auto& sol = out.solution;
    switch (sol.status) {
        case sdp::Status::Feasible: {
            const auto values = sol.values(b.prog.sdp);
            out.margin = values.at(static_cast<std::size_t>(b.margin_var));
            out.gram_residual = sos::gram_residual(b.prog, sol);
            if (out.margin >= b.threshold) {
                out.verdict = Verdict::Certified;
                out.message = "certificate found";
            } else {
                out.verdict = Verdict::NotCertified;
                out.message = "no certificate at this degree (margin below threshold)";
            }
            break;
        }
        case sdp::Status::Infeasible:
            out.verdict = Verdict::NotCertified;
            out.message = "no certificate at this degree (infeasible)";
            break;
        case sdp::Status::NumericalFailure:
            out.verdict = Verdict::Unknown;
            out.message = "solver failure: " + sol.message;
            break;
    }
    return out;
}

Build build(const SystemSpec& spec, int d, int d_param) {
    switch (spec.kind) {
        case SystemKind::LinearSingle:
            if (!spec.params.empty()) return build_single_delay_pd(spec, d, d_param);
            return build_single_delay(spec, d);
        case SystemKind::LinearMultiple: return build_multiple_delay(spec, d);
        case SystemKind::LinearDistributed: return build_distributed_delay(spec, d);
        case SystemKind::NonlinearDelay:
            return spec.num_delays() == 1 ? build_nonlinear_single(spec, d) : build_nonlinear_multiple(spec, d);
        case SystemKind::Ode: return build_ode(spec, d);
    }
    throw std::invalid_argument("unknown system kind");
}

}  // namespace delaycert::stability
