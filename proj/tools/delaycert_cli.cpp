// delaycert: certify, search and simulate delay systems described by JSON spec files.
// Exit codes: 0 certified / completed, 1 not certified, 2 error or solver failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "delaycert/search.hpp"
#include "delaycert/simulate.hpp"
#include "delaycert/spec_file.hpp"
#include "json.hpp"

using nlohmann::json;
namespace st = delaycert::stability;
namespace search = delaycert::search;

namespace {

// nlohmann prints the shortest round-trip form; reports use 17 significant digits.
void emit(std::ostream& os, const json& j, int indent, int depth) {
    const std::string pad(static_cast<std::size_t>(indent * (depth + 1)), ' ');
    const std::string end(static_cast<std::size_t>(indent * depth), ' ');
    switch (j.type()) {
        case json::value_t::number_float: {
            const double v = j.get<double>();
            if (!std::isfinite(v)) {
                os << "null";
            } else {
                char buf[40];
                std::snprintf(buf, sizeof buf, "%.17g", v);
                os << buf;
            }
            break;
        }
        case json::value_t::object: {
            if (j.empty()) {
                os << "{}";
                break;
            }
            os << "{\n";
            bool first = true;
            for (const auto& [k, v] : j.items()) {
                if (!first) os << ",\n";
                first = false;
                os << pad << json(k).dump() << ": ";
                emit(os, v, indent, depth + 1);
            }
            os << "\n" << end << "}";
            break;
        }
        case json::value_t::array: {
            if (j.empty()) {
                os << "[]";
                break;
            }
            os << "[\n";
            for (std::size_t i = 0; i < j.size(); ++i) {
                if (i) os << ",\n";
                os << pad;
                emit(os, j[i], indent, depth + 1);
            }
            os << "\n" << end << "]";
            break;
        }
        default: os << j.dump();
    }
}

void print(const json& j) {
    emit(std::cout, j, 2, 0);
    std::cout << "\n";
}

int exit_code(st::Verdict v) {
    switch (v) {
        case st::Verdict::Certified: return 0;
        case st::Verdict::NotCertified: return 1;
        case st::Verdict::Unknown: break;
    }
    return 2;
}

std::string lower(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << text;
}

json verify_json(const st::VerifyReport& r) {
    return {{"passed", r.passed},
            {"trials", r.trials},
            {"positivity_violations", r.positivity_violations},
            {"decrease_violations", r.decrease_violations},
            {"region_exits", r.region_exits},
            {"message", r.message}};
}

json records_json(const std::vector<search::SolveRecord>& rs) {
    json a = json::array();
    for (const auto& r : rs)
        a.push_back({{"value", r.value},
                     {"verdict", lower(st::to_string(r.verdict))},
                     {"margin", r.margin},
                     {"iterations", r.iterations},
                     {"seconds", r.seconds},
                     {"message", r.message}});
    return a;
}

search::SearchOptions search_options(const delaycert::SpecFile& f, int degree) {
    search::SearchOptions o;
    o.degree = degree;
    o.builder = [f](const delaycert::SystemSpec& s, int d) {
        delaycert::SpecFile g = f;
        g.spec = s;
        return delaycert::build_from(g, d);
    };
    return o;
}

// "lo:step:hi"
std::vector<double> parse_grid(const std::string& text) {
    std::vector<double> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ':')) {
        std::size_t used = 0;
        parts.push_back(std::stod(item, &used));
        if (used != item.size()) throw std::invalid_argument("malformed grid '" + text + "'");
    }
    if (parts.size() != 3) throw std::invalid_argument("grid must be LO:STEP:HI");
    return search::grid(parts[0], parts[1], parts[2]);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Lyapunov-Krasovskii stability certificates for delay systems via SOS programming"};
    app.require_subcommand(1);
    std::string spec_path, dump_cert, param = "tau", grid_text, history_text, out_path;
    int degree = -1, degree_theta = -1, degree_param = -1, verify_trials = 0;
    double tol = 1e-3, t_end = 10, step = 0;
    std::vector<double> bracket;

    auto* certify = app.add_subcommand("certify", "single stability solve");
    auto* margin = app.add_subcommand("margin", "bisection for the delay (or parameter) margin");
    auto* sweep = app.add_subcommand("sweep", "verdicts on a grid of delay (or parameter) values");
    auto* region = app.add_subcommand("region", "one parameter-dependent solve over all boxes");
    auto* simulate = app.add_subcommand("simulate", "integrate from a polynomial history");
    auto* sdpa = app.add_subcommand("export-sdpa", "write the stability SDP in SDPA sparse format");
    for (auto* c : {certify, margin, sweep, region, simulate, sdpa})
        c->add_option("--spec", spec_path, "system spec (JSON)")->required();
    for (auto* c : {certify, margin, sweep, sdpa}) c->add_option("--degree", degree, "polynomial degree d");
    certify->add_option("--dump-cert", dump_cert, "write the certificate JSON here");
    certify->add_option("--verify", verify_trials, "re-verify with this many simulated histories");
    for (auto* c : {margin, sweep}) c->add_option("--param", param, "tau or a declared parameter");
    margin->add_option("--bracket", bracket, "LO HI")->expected(2)->required();
    margin->add_option("--tol", tol, "bracket width to stop at");
    margin->add_option("--dump-cert", dump_cert, "write the certified-endpoint certificate here");
    sweep->add_option("--grid", grid_text, "LO:STEP:HI")->required();
    region->add_option("--degree-theta", degree_theta, "degree in theta");
    region->add_option("--degree-param", degree_param, "degree in the parameters");
    region->add_option("--dump-cert", dump_cert, "write the box-centre certificate here");
    simulate->add_option("--history", history_text, "polynomial in theta per component, ';'-separated")->required();
    simulate->add_option("--tend", t_end, "final time");
    simulate->set_help_flag("--help", "print this help and exit");
    simulate->add_option("--h", step, "step (default tau_1 / 50)");
    simulate->add_option("--out", out_path, "CSV output")->required();
    sdpa->add_option("--out", out_path, "SDPA output")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        const delaycert::SpecFile file = delaycert::load_spec_file(spec_path);
        const int d = degree >= 0 ? degree : file.degree;
        const auto& spec = file.spec;
        const std::string hash = st::spec_hash(spec);

        if (*certify || *sdpa) {
            const auto b = delaycert::build_from(file, d);
            if (*sdpa) {
                write_file(out_path, delaycert::sdp::export_sdpa(b.prog.sdp));
                print({{"command", "export-sdpa"},
                       {"out", out_path},
                       {"constraints", b.prog.sdp.constraints().size()},
                       {"spec_hash", hash}});
                return 0;
            }
            const auto t0 = std::chrono::steady_clock::now();
            const auto o = st::solve(b);
            const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            json r = {{"command", "certify"},
                      {"verdict", lower(st::to_string(o.verdict))},
                      {"status", o.verdict == st::Verdict::Unknown ? "unknown" : delaycert::sdp::to_string(o.solution.status)},
                      {"builder", b.builder},
                      {"degree", d},
                      {"margin", o.margin},
                      {"threshold", b.threshold},
                      {"gram_residual", o.gram_residual},
                      {"iterations", o.solution.iterations},
                      {"seconds", secs},
                      {"spec_hash", hash},
                      {"message", o.message}};
            if (o.verdict == st::Verdict::Certified) {
                const auto cert = st::extract_certificate(b, o);
                if (!dump_cert.empty()) write_file(dump_cert, st::certificate_to_json(cert));
                if (verify_trials > 0) {
                    st::VerifyOptions vo;
                    vo.trials = verify_trials;
                    r["verification"] = verify_json(st::verify_certificate(cert, spec, vo));
                }
            }
            print(r);
            return exit_code(o.verdict);
        }

        if (*margin) {
            const auto fam = search::param_family(spec, param);
            auto opts = search_options(file, d);
            const auto m = search::margin_bisection(fam, bracket[0], bracket[1], tol, opts);
            if (!dump_cert.empty() && m.certificate) write_file(dump_cert, st::certificate_to_json(*m.certificate));
            json r = {{"command", "margin"},
                      {"param", param},
                      {"degree", d},
                      {"certified", m.certified},
                      {"uncertified", m.uncertified},
                      {"bracket", {m.lo, m.hi}},
                      {"solver_failures", m.solver_failures},
                      {"solves", records_json(m.solves)},
                      {"spec_hash", hash}};
            if (!m.crosscheck.empty()) r["crosscheck"] = records_json(m.crosscheck);
            if (m.verification) r["verification"] = verify_json(*m.verification);
            print(r);
            return m.verification && !m.verification->passed ? 2 : 0;
        }

        if (*sweep) {
            const auto fam = search::param_family(spec, param);
            const auto rs = search::sweep(fam, parse_grid(grid_text), search_options(file, d));
            print({{"command", "sweep"}, {"param", param}, {"degree", d}, {"results", records_json(rs)}, {"spec_hash", hash}});
            return 0;
        }

        if (*region) {
            if (spec.params.empty()) throw std::invalid_argument("region needs parameter boxes in the spec");
            const int dt = degree_theta >= 0 ? degree_theta : (file.degree_theta >= 0 ? file.degree_theta : file.degree);
            const int dp = degree_param >= 0 ? degree_param : file.degree_param;
            const auto res = search::region_certify(spec, dt, dp);
            if (!dump_cert.empty() && res.certificate) write_file(dump_cert, st::certificate_to_json(*res.certificate));
            print({{"command", "region"},
                   {"verdict", lower(st::to_string(res.outcome.verdict))},
                   {"degree_theta", dt},
                   {"degree_param", dp},
                   {"margin", res.outcome.margin},
                   {"iterations", res.outcome.solution.iterations},
                   {"seconds", res.seconds},
                   {"spec_hash", hash},
                   {"message", res.outcome.message}});
            return exit_code(res.outcome.verdict);
        }

        if (*simulate) {
            std::vector<delaycert::poly::DPoly> phi;
            std::stringstream ss(history_text);
            std::string item;
            while (std::getline(ss, item, ';')) phi.push_back(delaycert::poly::to_double(delaycert::poly::parse_polynomial(item)));
            if (phi.size() == 1 && spec.n > 1) phi.resize(static_cast<std::size_t>(spec.n), phi[0]);
            if (static_cast<int>(phi.size()) != spec.n) throw std::invalid_argument("history needs one polynomial per component");
            if (!spec.params.empty()) throw std::invalid_argument("simulation needs fixed parameters");
            const double h = step > 0 ? step : delaycert::simulate::default_step(spec);
            delaycert::simulate::IntegrateOptions io;
            io.error_estimate = true;
            const auto traj = delaycert::simulate::integrate(spec, delaycert::simulate::polynomial_history(phi), t_end, h, io);
            std::ofstream out(out_path);
            if (!out) throw std::runtime_error("cannot write '" + out_path + "'");
            traj.write_csv(out);
            json r = {{"command", "simulate"},
                      {"out", out_path},
                      {"steps", traj.t.size() > 0 ? traj.t.size() - 1 : 0},
                      {"h", h},
                      {"t_end", traj.t_end()},
                      {"blow_up", traj.blow_up},
                      {"error_estimate", traj.error_estimate},
                      {"final_norm", traj.x.empty() ? 0.0 : traj.x.back().norm()}};
            if (traj.blow_up) r["escape_time"] = traj.escape_time;
            print(r);
            return 0;
        }
    } catch (const std::exception& e) {
        print({{"error", e.what()}, {"status", "error"}});
        return 2;
    }
    return 2;
}
