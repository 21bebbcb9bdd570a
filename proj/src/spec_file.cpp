#include "delaycert/spec_file.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace delaycert {

using namespace poly;
using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& what) { throw std::invalid_argument("spec: " + what); }

void only_fields(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) bad(where + " must be an object");
    for (const auto& [k, v] : j.items())
        if (!allowed.count(k)) bad("unknown field '" + k + "' in " + where);
}

// Numbers go through their shortest decimal form so 0.1 means 1/10 exactly.
RPoly scalar(const json& j, const std::string& where) {
    try {
        if (j.is_number()) return parse_polynomial(j.dump());
        if (j.is_string()) return parse_polynomial(j.get<std::string>());
    } catch (const std::invalid_argument& e) {
        bad(where + ": " + e.what());
    }
    bad(where + " must be a number or a polynomial string");
}

RMatrix matrix(const json& j, int n, const std::string& where) {
    if (!j.is_array() || static_cast<int>(j.size()) != n) bad(where + " must have " + std::to_string(n) + " rows");
    RMatrix m(static_cast<std::size_t>(n), static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const auto& row = j[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<int>(row.size()) != n)
            bad(where + " row " + std::to_string(i) + " must have " + std::to_string(n) + " entries");
        for (int k = 0; k < n; ++k)
            m(static_cast<std::size_t>(i), static_cast<std::size_t>(k)) =
                scalar(row[static_cast<std::size_t>(k)], where + "[" + std::to_string(i) + "][" + std::to_string(k) + "]");
    }
    return m;
}

// [[power, coef], ...] in theta, or a polynomial string.
RPoly theta_poly(const json& j, const std::string& where) {
    if (j.is_string() || j.is_number()) return scalar(j, where);
    if (!j.is_array()) bad(where + " must be a coefficient list");
    const int th = var("theta");
    RPoly p;
    for (const auto& t : j) {
        if (!t.is_array() || t.size() != 2 || !t[0].is_number_unsigned()) bad(where + " terms are [power, coef]");
        p += RPoly::term(Monomial::of(th, t[0].get<int>()), scalar(t[1], where).coefficient(Monomial()));
    }
    return p;
}

// [[{"x1": 3, "x1_d1": 1}, coef], ...] or a polynomial string.
RPoly rhs_poly(const json& j, const std::string& where) {
    if (j.is_string()) return scalar(j, where);
    if (!j.is_array()) bad(where + " must be a polynomial string or a term list");
    RPoly p;
    for (const auto& t : j) {
        if (!t.is_array() || t.size() != 2 || !t[0].is_object()) bad(where + " terms are [{symbol: power}, coef]");
        RPoly term = scalar(t[1], where);
        for (const auto& [name, e] : t[0].items()) {
            if (!e.is_number_unsigned()) bad(where + " powers must be nonnegative integers");
            term = term * RPoly::term(Monomial::of(var(name), e.get<int>()), Rational(1));
        }
        p += term;
    }
    return p;
}

std::string location(const std::string& text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace

SpecFile parse_spec_file(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        bad("malformed JSON at " + location(text, e.byte));
    }
    only_fields(j, {"version", "name", "kind", "n", "delays", "matrices", "distributed_kernel", "rhs", "parameters",
                    "tau_param", "state_region", "builder", "degree"},
                "document");
    if (j.contains("version") && j["version"] != 1) bad("unsupported version");
    if (!j.contains("kind") || !j["kind"].is_string()) bad("missing 'kind'");
    if (!j.contains("n") || !j["n"].is_number_unsigned() || j["n"].get<int>() < 1) bad("'n' must be a positive integer");

    SpecFile out;
    SystemSpec& s = out.spec;
    s.kind = system_kind_from_string(j["kind"].get<std::string>());
    s.n = j["n"].get<int>();
    if (j.contains("delays")) {
        if (!j["delays"].is_array()) bad("'delays' must be an array");
        for (const auto& d : j["delays"]) {
            if (!d.is_number()) bad("delays must be numbers");
            s.delays.push_back(d.get<double>());
        }
    }
    if (j.contains("parameters")) {
        for (const auto& p : j["parameters"]) {
            only_fields(p, {"name", "box"}, "parameter");
            if (!p.contains("name") || !p["name"].is_string()) bad("parameter needs a name");
            const auto& box = p.contains("box") ? p["box"] : json();
            if (!box.is_array() || box.size() != 2 || !box[0].is_number() || !box[1].is_number())
                bad("parameter box must be [lo, hi]");
            s.params.push_back({p["name"].get<std::string>(), box[0].get<double>(), box[1].get<double>()});
        }
    }
    if (j.contains("tau_param")) s.tau_param = j["tau_param"].get<std::string>();

    const bool linear = s.kind == SystemKind::LinearSingle || s.kind == SystemKind::LinearMultiple ||
                        s.kind == SystemKind::LinearDistributed;
    if (linear) {
        if (!j.contains("matrices")) bad("linear systems need 'matrices'");
        const auto& ms = j["matrices"];
        if (!ms.is_object()) bad("'matrices' must be an object of A0, A1, ...");
        const std::size_t count = s.kind == SystemKind::LinearDistributed ? 1 : s.delays.size() + 1;
        for (const auto& [k, v] : ms.items()) {
            bool known = false;
            for (std::size_t i = 0; i < count; ++i) known = known || k == "A" + std::to_string(i);
            if (!known) bad("unexpected matrix '" + k + "'");
        }
        for (std::size_t i = 0; i < count; ++i) {
            const std::string name = "A" + std::to_string(i);
            if (!ms.contains(name)) bad("missing matrix " + name);
            s.A.push_back(matrix(ms[name], s.n, name));
        }
        if (s.kind == SystemKind::LinearDistributed) {
            if (!j.contains("distributed_kernel")) bad("distributed systems need 'distributed_kernel'");
            const auto& k = j["distributed_kernel"];
            if (!k.is_array() || static_cast<int>(k.size()) != s.n) bad("distributed_kernel must have n rows");
            s.kernel = RMatrix(static_cast<std::size_t>(s.n), static_cast<std::size_t>(s.n));
            for (int r = 0; r < s.n; ++r) {
                const auto& row = k[static_cast<std::size_t>(r)];
                if (!row.is_array() || static_cast<int>(row.size()) != s.n) bad("distributed_kernel rows must have n entries");
                for (int c = 0; c < s.n; ++c)
                    s.kernel(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) =
                        theta_poly(row[static_cast<std::size_t>(c)], "distributed_kernel");
            }
        } else if (j.contains("distributed_kernel")) {
            bad("'distributed_kernel' only applies to linear-distributed systems");
        }
        if (j.contains("rhs")) bad("'rhs' only applies to nonlinear systems and ODEs");
    } else {
        if (j.contains("matrices") || j.contains("distributed_kernel")) bad("nonlinear systems take 'rhs', not matrices");
        if (!j.contains("rhs") || !j["rhs"].is_array()) bad("nonlinear systems need an 'rhs' array");
        for (const auto& e : j["rhs"]) s.f.push_back(rhs_poly(e, "rhs"));
    }
    if (j.contains("state_region"))
        for (const auto& g : j["state_region"]) s.state_region.push_back(scalar(g, "state_region"));

    if (j.contains("builder")) {
        out.builder = j["builder"].get<std::string>();
        if (out.builder != "auto" && out.builder != "delay-independent") bad("unknown builder '" + out.builder + "'");
    }
    if (j.contains("degree")) {
        const auto& d = j["degree"];
        only_fields(d, {"d", "d_theta", "d_param"}, "degree");
        auto get = [&](const char* k, int& slot) {
            if (!d.contains(k)) return;
            if (!d[k].is_number_unsigned()) bad(std::string("degree.") + k + " must be a nonnegative integer");
            slot = d[k].get<int>();
        };
        get("d", out.degree);
        get("d_theta", out.degree_theta);
        get("d_param", out.degree_param);
    }
    s.validate();
    return out;
}

SpecFile load_spec_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open spec file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_spec_file(ss.str());
}

stability::Build build_from(const SpecFile& file, int d) {
    const SystemSpec& s = file.spec;
    if (file.builder == "delay-independent") return stability::build_delay_independent(s, d);
    if (s.kind == SystemKind::LinearSingle && !s.params.empty())
        return stability::build_single_delay_pd(s, file.degree_theta >= 0 ? file.degree_theta : d, file.degree_param);
    if (s.kind == SystemKind::NonlinearDelay) {
        const int dt = file.degree_theta >= 0 ? file.degree_theta : -1;
        return s.num_delays() == 1 ? stability::build_nonlinear_single(s, d, dt)
                                   : stability::build_nonlinear_multiple(s, d, dt);
    }
    return stability::build(s, d, file.degree_param);
}

}  // namespace delaycert
