// SDPA sparse (.dat-s) writer and reader. The problem maps onto SDPA's dual
// form: max ⟨F0,Y⟩ s.t. ⟨Fk,Y⟩ = ck, so F0 is the objective, Fk the k-th
// constraint and c the right-hand sides. Free scalars become pairs (y⁺, y⁻)
// on a trailing diagonal block.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "delaycert/sdp.hpp"

namespace delaycert::sdp {

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct Entry {
    int k, b, i, j;
    double v;
};

}  // namespace

std::string export_sdpa(const SdpProblem& p) {
    const int m = static_cast<int>(p.constraints().size());
    const int nb = p.num_blocks();
    const int nf = p.num_free();
    std::vector<Entry> entries;

    auto emit = [&](int k, int var, double coef) {
        const auto& in = p.info(var);
        if (in.block < 0) {
            entries.push_back({k, nb + 1, 2 * in.i + 1, 2 * in.i + 1, coef});
            entries.push_back({k, nb + 1, 2 * in.i + 2, 2 * in.i + 2, -coef});
        } else if (in.i == in.j) {
            entries.push_back({k, in.block + 1, in.i + 1, in.j + 1, coef});
        } else {
            entries.push_back({k, in.block + 1, in.i + 1, in.j + 1, coef / 2});
        }
    };
    for (const auto& t : p.objective()) emit(0, t.var, t.coef);
    for (int k = 0; k < m; ++k)
        for (const auto& t : p.constraints()[static_cast<std::size_t>(k)].terms) emit(k + 1, t.var, t.coef);
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
        return std::tie(a.k, a.b, a.i, a.j) < std::tie(b.k, b.b, b.i, b.j);
    });

    std::ostringstream os;
    os << m << "\n" << nb + (nf > 0 ? 1 : 0) << "\n";
    for (int b = 0; b < nb; ++b) os << (b ? " " : "") << p.block_sizes()[static_cast<std::size_t>(b)];
    if (nf > 0) os << (nb ? " " : "") << -2 * nf;
    os << "\n";
    for (int k = 0; k < m; ++k) os << (k ? " " : "") << fmt(p.constraints()[static_cast<std::size_t>(k)].rhs);
    os << "\n";
    for (const auto& e : entries) os << e.k << " " << e.b << " " << e.i << " " << e.j << " " << fmt(e.v) << "\n";
    return os.str();
}

namespace {

// SDPA allows decorations like "{1, 2}" and leading comment lines.
std::vector<std::string> data_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        if (lines.empty() && !line.empty() && (line[0] == '"' || line[0] == '*')) continue;
        for (char& ch : line)
            if (ch == '{' || ch == '}' || ch == '(' || ch == ')' || ch == ',') ch = ' ';
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        lines.push_back(line);
    }
    return lines;
}

double parse_double(const std::string& tok) {
    std::size_t pos = 0;
    double v = std::stod(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument("bad number '" + tok + "'");
    return v;
}

std::vector<std::string> tokens(const std::string& line) {
    std::istringstream is(line);
    std::vector<std::string> t;
    std::string s;
    while (is >> s) t.push_back(s);
    return t;
}

}  // namespace

SdpProblem parse_sdpa(const std::string& text) {
    auto lines = data_lines(text);
    if (lines.size() < 3) throw std::invalid_argument("SDPA: truncated header");
    std::size_t li = 0;
    const int m = std::stoi(tokens(lines[li++]).at(0));
    const int nblocks = std::stoi(tokens(lines[li++]).at(0));
    std::vector<int> sizes;
    while (static_cast<int>(sizes.size()) < nblocks) {
        if (li >= lines.size()) throw std::invalid_argument("SDPA: missing block sizes");
        for (const auto& t : tokens(lines[li++])) sizes.push_back(std::stoi(t));
    }
    if (static_cast<int>(sizes.size()) != nblocks) throw std::invalid_argument("SDPA: block count mismatch");
    std::vector<double> rhs;
    while (static_cast<int>(rhs.size()) < m) {
        if (li >= lines.size()) throw std::invalid_argument("SDPA: missing objective vector");
        for (const auto& t : tokens(lines[li++])) rhs.push_back(parse_double(t));
    }

    std::vector<Entry> entries;
    for (; li < lines.size(); ++li) {
        auto t = tokens(lines[li]);
        if (t.size() != 5) throw std::invalid_argument("SDPA: bad entry line " + std::to_string(li + 1));
        Entry e{std::stoi(t[0]), std::stoi(t[1]), std::stoi(t[2]), std::stoi(t[3]), parse_double(t[4])};
        if (e.i > e.j) std::swap(e.i, e.j);
        if (e.k < 0 || e.k > m || e.b < 1 || e.b > nblocks) throw std::invalid_argument("SDPA: entry out of range");
        entries.push_back(e);
    }

    // A trailing diagonal block of even size whose entries come in (v, -v)
    // pairs is the free-variable encoding.
    const int last = nblocks;
    bool free_block = false;
    if (nblocks > 0 && sizes.back() < 0 && (-sizes.back()) % 2 == 0) {
        std::map<std::tuple<int, int>, double> pos, neg;
        free_block = true;
        for (const auto& e : entries) {
            if (e.b != last) continue;
            if (e.i != e.j) free_block = false;
            if (e.i % 2 == 1)
                pos[{e.k, (e.i - 1) / 2}] = e.v;
            else
                neg[{e.k, (e.i - 2) / 2}] = e.v;
        }
        if (pos.size() != neg.size()) free_block = false;
        for (const auto& [key, v] : pos) {
            auto it = neg.find(key);
            if (it == neg.end() || it->second != -v) free_block = false;
        }
    }

    SdpProblem p;
    std::vector<std::vector<int>> diag_vars(static_cast<std::size_t>(nblocks));
    std::vector<BlockHandle> handles(static_cast<std::size_t>(nblocks));
    std::vector<int> free_vars;
    for (int b = 0; b < nblocks; ++b) {
        int n = sizes[static_cast<std::size_t>(b)];
        if (n > 0) {
            handles[static_cast<std::size_t>(b)] = p.add_block(n);
        } else if (free_block && b == nblocks - 1) {
            for (int f = 0; f < -n / 2; ++f) free_vars.push_back(p.add_free().id);
        } else {
            for (int i = 0; i < -n; ++i) diag_vars[static_cast<std::size_t>(b)].push_back(p.add_block(1).first_id);
        }
    }

    std::vector<std::vector<Term>> rows(static_cast<std::size_t>(m) + 1);
    for (const auto& e : entries) {
        const auto bi = static_cast<std::size_t>(e.b - 1);
        int n = sizes[bi];
        int var;
        double coef = e.v;
        if (n > 0) {
            if (e.j > n) throw std::invalid_argument("SDPA: entry index exceeds block size");
            var = handles[bi].id(e.i - 1, e.j - 1);
            if (e.i != e.j) coef = 2 * e.v;
        } else if (free_block && e.b == last) {
            if (e.i % 2 == 0) continue;
            var = free_vars.at(static_cast<std::size_t>((e.i - 1) / 2));
        } else {
            if (e.i != e.j) throw std::invalid_argument("SDPA: off-diagonal entry in a diagonal block");
            var = diag_vars[bi].at(static_cast<std::size_t>(e.i - 1));
        }
        rows[static_cast<std::size_t>(e.k)].push_back({var, coef});
    }
    p.set_objective(rows[0]);
    for (int k = 1; k <= m; ++k) {
        auto& r = rows[static_cast<std::size_t>(k)];
        if (r.empty()) {
            poly::LinExpr zero(poly::to_rational(-rhs[static_cast<std::size_t>(k - 1)]));
            if (zero.is_zero()) throw std::invalid_argument("SDPA: empty constraint with zero right-hand side");
            p.add_equality(zero);
        } else {
            p.add_equality(r, rhs[static_cast<std::size_t>(k - 1)]);
        }
    }
    return p;
}

}  // namespace delaycert::sdp
