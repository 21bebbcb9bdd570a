#include <algorithm>
#include <map>
#include <stdexcept>
#include <tuple>

#include "delaycert/sdp.hpp"

namespace delaycert::sdp {

int BlockHandle::id(int i, int j) const {
    if (i > j) std::swap(i, j);
    if (i < 0 || j >= size) throw std::out_of_range("block entry out of range");
    // Row-major upper triangle.
    return first_id + i * size - i * (i - 1) / 2 + (j - i);
}

BlockHandle SdpProblem::add_block(int size) {
    if (size < 1) throw std::invalid_argument("block size must be >= 1");
    BlockHandle h{num_blocks(), size, num_vars()};
    block_sizes_.push_back(size);
    block_first_.push_back(h.first_id);
    for (int i = 0; i < size; ++i)
        for (int j = i; j < size; ++j) vars_.push_back({h.block, i, j});
    return h;
}

BlockHandle SdpProblem::block(int b) const {
    return BlockHandle{b, block_sizes_.at(static_cast<std::size_t>(b)), block_first_.at(static_cast<std::size_t>(b))};
}

FreeHandle SdpProblem::add_free() {
    FreeHandle h{num_vars()};
    vars_.push_back({-1, num_free(), 0});
    free_ids_.push_back(h.id);
    return h;
}

std::vector<Term> SdpProblem::fold(std::vector<Term> terms) const {
    std::map<int, double> acc;
    for (const auto& t : terms) {
        if (t.var < 0 || t.var >= num_vars()) throw std::out_of_range("reference to undeclared variable");
        acc[t.var] += t.coef;
    }
    std::vector<Term> out;
    for (const auto& [v, c] : acc)
        if (c != 0.0) out.push_back({v, c});
    return out;
}

int SdpProblem::add_equality(std::vector<Term> lincomb, double rhs) {
    if (lincomb.empty()) throw std::invalid_argument("empty linear combination");
    constraints_.push_back({fold(std::move(lincomb)), rhs});
    return static_cast<int>(constraints_.size()) - 1;
}

int SdpProblem::add_equality(const poly::LinExpr& expr) {
    if (expr.is_zero()) return -1;
    std::vector<Term> terms;
    for (const auto& [id, c] : expr.terms()) terms.push_back({id, c.get_d()});
    double rhs = -expr.constant().get_d();
    if (terms.empty()) {
        // 0 = rhs with rhs ≠ 0: keep it so the solver reports infeasibility.
        constraints_.push_back({{}, rhs});
        return static_cast<int>(constraints_.size()) - 1;
    }
    return add_equality(std::move(terms), rhs);
}

void SdpProblem::set_objective(std::vector<Term> terms) { objective_ = fold(std::move(terms)); }

bool operator==(const SdpProblem& a, const SdpProblem& b) {
    // Compared by what each unknown is (block entry or free index), not by its id:
    // a parsed SDPA file lists free scalars last even when the builder interleaved them.
    using Key = std::tuple<int, int, int>;
    auto canonical = [](const SdpProblem& p, const std::vector<Term>& terms) {
        std::vector<std::pair<Key, double>> out;
        for (const auto& t : terms) {
            const auto& v = p.info(t.var);
            out.push_back({{v.block, v.i, v.j}, t.coef});
        }
        std::sort(out.begin(), out.end());
        return out;
    };
    if (a.block_sizes_ != b.block_sizes_ || a.free_ids_.size() != b.free_ids_.size()) return false;
    if (canonical(a, a.objective_) != canonical(b, b.objective_)) return false;
    if (a.constraints_.size() != b.constraints_.size()) return false;
    for (std::size_t k = 0; k < a.constraints_.size(); ++k) {
        if (a.constraints_[k].rhs != b.constraints_[k].rhs) return false;
        if (canonical(a, a.constraints_[k].terms) != canonical(b, b.constraints_[k].terms)) return false;
    }
    return true;
}

std::string to_string(Status s) {
    switch (s) {
        case Status::Feasible: return "feasible";
        case Status::Infeasible: return "infeasible-certificate";
        case Status::NumericalFailure: return "numerical-failure";
    }
    return "unknown";
}

std::vector<double> SdpSolution::values(const SdpProblem& p) const {
    std::vector<double> v(static_cast<std::size_t>(p.num_vars()), 0.0);
    for (int id = 0; id < p.num_vars(); ++id) {
        const auto& in = p.info(id);
        if (in.block >= 0) {
            if (static_cast<std::size_t>(in.block) < blocks.size()) v[static_cast<std::size_t>(id)] = blocks[static_cast<std::size_t>(in.block)](in.i, in.j);
        } else if (static_cast<std::size_t>(in.i) < free.size()) {
            v[static_cast<std::size_t>(id)] = free[static_cast<std::size_t>(in.i)];
        }
    }
    return v;
}

}  // namespace delaycert::sdp
