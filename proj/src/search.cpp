#include "delaycert/search.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "json.hpp"

namespace delaycert::search {

using stability::Verdict;

Family delay_family(const SystemSpec& spec) {
    return [spec](double tau) { return spec.with_delay(tau); };
}

Family param_family(const SystemSpec& spec, const std::string& name) {
    if (spec.param(name)) return [spec, name](double v) { return spec.at({{name, v}}); };
    if (name == "tau" && !spec.delays.empty()) return delay_family(spec);
    throw std::invalid_argument("unknown parameter '" + name + "'");
}

SolveRecord solve_at(const Family& family, double value, const SearchOptions& opts,
                     std::optional<stability::Certificate>* cert) {
    auto t0 = std::chrono::steady_clock::now();
    SolveRecord r;
    r.value = value;
    try {
        const SystemSpec spec = family(value);
        const stability::Build b = opts.builder ? opts.builder(spec, opts.degree) : stability::build(spec, opts.degree);
        const auto out = stability::solve(b, opts.solver);
        r.verdict = out.verdict;
        r.margin = out.margin;
        r.gram_residual = out.gram_residual;
        r.feasible = out.solution.status == sdp::Status::Feasible;
        r.iterations = out.solution.iterations;
        r.message = out.message;
        if (cert && out.verdict == Verdict::Certified) *cert = stability::extract_certificate(b, out);
    } catch (const std::invalid_argument& e) {
        r.verdict = Verdict::Unknown;
        r.message = std::string("invalid system: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

MarginResult margin_bisection(const Family& family, double a, double b, double tol, const SearchOptions& opts) {
    if (!(tol > 0)) throw std::invalid_argument("tolerance must be positive");
    MarginResult res;
    res.degree = opts.degree;
    std::optional<stability::Certificate> ca, cb;
    SolveRecord ra = solve_at(family, a, opts, &ca);
    SolveRecord rb = solve_at(family, b, opts, &cb);
    res.solves = {ra, rb};
    const bool oka = ra.verdict == Verdict::Certified, okb = rb.verdict == Verdict::Certified;
    if (oka == okb)
        throw std::invalid_argument(oka ? "both bracket endpoints certify" : "neither bracket endpoint certifies");
    double c = oka ? a : b, u = oka ? b : a;
    res.certificate = oka ? ca : cb;
    while (std::abs(c - u) > tol) {
        const double mid = 0.5 * (c + u);
        std::optional<stability::Certificate> cm;
        SolveRecord r = solve_at(family, mid, opts, &cm);
        res.solves.push_back(r);
        if (r.verdict == Verdict::Certified) {
            c = mid;
            res.certificate = cm;
        } else {
            // A solver failure counts as uncertified; a sweep below double-checks the bracket.
            if (r.verdict == Verdict::Unknown) ++res.solver_failures;
            u = mid;
        }
    }
    res.certified = c;
    res.uncertified = u;
    res.lo = std::min(c, u);
    res.hi = std::max(c, u);
    if (res.solver_failures > 0) {
        std::vector<double> pts;
        for (int k = 0; k <= 4; ++k) pts.push_back(a + (b - a) * k / 4.0);
        res.crosscheck = sweep(family, pts, opts);
    }
    if (opts.verify && res.certificate)
        res.verification = stability::verify_certificate(*res.certificate, family(c), opts.verify_options);
    return res;
}

std::vector<SolveRecord> sweep(const Family& family, const std::vector<double>& points, const SearchOptions& opts) {
    std::vector<SolveRecord> out(points.size());
    const auto count = static_cast<long>(points.size());
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < count; ++i)
        out[static_cast<std::size_t>(i)] = solve_at(family, points[static_cast<std::size_t>(i)], opts);
    return out;
}

std::vector<double> grid(double lo, double step, double hi) {
    if (!(step > 0) || hi < lo) throw std::invalid_argument("grid needs step > 0 and lo <= hi");
    std::vector<double> g;
    const auto n = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
    for (long k = 0; k <= n; ++k) g.push_back(lo + static_cast<double>(k) * step);
    return g;
}

RegionResult region_certify(const SystemSpec& spec, int d_theta, int d_param, const sdp::SolverOptions& solver) {
    auto t0 = std::chrono::steady_clock::now();
    RegionResult r;
    const stability::Build b = stability::build_single_delay_pd(spec, d_theta, d_param);
    r.outcome = stability::solve(b, solver);
    if (r.outcome.verdict == Verdict::Certified) r.certificate = stability::extract_certificate(b, r.outcome);
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

namespace {

nlohmann::json record_json(const SolveRecord& r) {
    return {{"value", r.value},
            {"verdict", stability::to_string(r.verdict)},
            {"margin", r.margin},
            {"iterations", r.iterations},
            {"seconds", r.seconds},
            {"message", r.message}};
}

}  // namespace

std::string to_json(const std::vector<SolveRecord>& records) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& r : records) a.push_back(record_json(r));
    return a.dump(1);
}

std::string to_json(const MarginResult& r) {
    nlohmann::json j;
    j["certified"] = r.certified;
    j["uncertified"] = r.uncertified;
    j["bracket"] = {r.lo, r.hi};
    j["degree"] = r.degree;
    j["solver_failures"] = r.solver_failures;
    j["solves"] = nlohmann::json::array();
    for (const auto& s : r.solves) j["solves"].push_back(record_json(s));
    if (!r.crosscheck.empty()) {
        j["crosscheck"] = nlohmann::json::array();
        for (const auto& s : r.crosscheck) j["crosscheck"].push_back(record_json(s));
    }
    if (r.verification) {
        j["verification"] = {{"passed", r.verification->passed},
                             {"trials", r.verification->trials},
                             {"message", r.verification->message}};
    }
    return j.dump(1);
}

}  // namespace delaycert::search
