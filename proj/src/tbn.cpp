#include "dbn/tbn.hpp"

#include <algorithm>
#include <string>

#include "dbn/errors.hpp"

namespace dbn {

namespace {

std::string var_name(std::size_t i) { return "vars[" + std::to_string(i) + "]"; }

void validate_cpt(const Matrix& cpt, std::size_t rows, std::size_t cols, const std::string& what) {
    if (cpt.rows() != rows || cpt.cols() != cols) {
        throw DimensionError(what + ": expected " + std::to_string(rows) + "x" +
                             std::to_string(cols) + ", got " + std::to_string(cpt.rows()) + "x" +
                             std::to_string(cpt.cols()));
    }
    for (std::size_t r = 0; r < rows; ++r) {
        validate_distribution(cpt.row(r), what + " row " + std::to_string(r));
    }
}

// Kahn's algorithm over edges parent -> child; returns empty on a cycle.
std::vector<std::size_t> topological(std::size_t n,
                                     const std::vector<std::vector<std::size_t>>& parents) {
    std::vector<std::size_t> indegree(n, 0);
    std::vector<std::vector<std::size_t>> children(n);
    for (std::size_t v = 0; v < n; ++v) {
        for (std::size_t p : parents[v]) {
            children[p].push_back(v);
            ++indegree[v];
        }
    }
    std::vector<std::size_t> order;
    std::vector<std::size_t> ready;
    for (std::size_t v = n; v-- > 0;) {
        if (indegree[v] == 0) ready.push_back(v);
    }
    while (!ready.empty()) {
        const std::size_t v = ready.back();
        ready.pop_back();
        order.push_back(v);
        for (std::size_t c : children[v]) {
            if (--indegree[c] == 0) ready.push_back(c);
        }
    }
    if (order.size() != n) order.clear();
    return order;
}

std::size_t config_index(const std::vector<std::size_t>& parent_vars,
                         const std::vector<std::size_t>& cards,
                         const std::vector<std::size_t>& values) {
    std::size_t idx = 0;
    for (std::size_t p : parent_vars) idx = idx * cards[p] + values[p];
    return idx;
}

std::size_t config_index(const std::vector<TbnParent>& parents,
                         const std::vector<std::size_t>& cards,
                         const std::vector<std::size_t>& previous,
                         const std::vector<std::size_t>& current) {
    std::size_t idx = 0;
    for (const auto& p : parents) {
        idx = idx * cards[p.var] + (p.slice == 0 ? previous[p.var] : current[p.var]);
    }
    return idx;
}

}  // namespace

std::vector<std::size_t> Tbn2Model::hidden_vars() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < vars.size(); ++i) {
        if (!vars[i].observed) out.push_back(i);
    }
    return out;
}

std::vector<std::size_t> Tbn2Model::observed_vars() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < vars.size(); ++i) {
        if (vars[i].observed) out.push_back(i);
    }
    return out;
}

std::vector<std::size_t> transition_order(const Tbn2Model& model) {
    const std::size_t n = model.vars.size();
    std::vector<std::vector<std::size_t>> parents(n);
    for (std::size_t v = 0; v < n; ++v) {
        for (const auto& p : model.vars[v].trans_parents) {
            if (p.slice == 1) parents[v].push_back(p.var);
        }
    }
    auto order = topological(n, parents);
    if (order.empty() && n > 0) throw CycleError("transition network has a cycle within slice t");
    return order;
}

void validate_tbn(const Tbn2Model& model) {
    const std::size_t n = model.vars.size();
    if (n == 0) throw DimensionError("vars: at least one variable is required");
    if (model.hidden_vars().empty()) throw DimensionError("vars: at least one hidden variable is required");

    std::vector<std::size_t> cards(n);
    for (std::size_t v = 0; v < n; ++v) {
        cards[v] = model.vars[v].card;
        if (cards[v] == 0) throw DimensionError(var_name(v) + ".card must be positive");
    }

    std::vector<std::vector<std::size_t>> init_graph(n);
    for (std::size_t v = 0; v < n; ++v) {
        const auto& var = model.vars[v];
        const std::string name = var_name(v);

        std::size_t trans_rows = 1;
        for (const auto& p : var.trans_parents) {
            if (p.slice != 0 && p.slice != 1) {
                throw DimensionError(name + ".trans_parents: slice must be 0 or 1");
            }
            if (p.var >= n) throw DimensionError(name + ".trans_parents: variable index out of range");
            if (p.slice == 1 && p.var == v) {
                throw CycleError(name + ".trans_parents: variable is its own slice-t parent");
            }
            if (!var.observed && model.vars[p.var].observed) {
                throw TopologyError(name + ".trans_parents: hidden variable cannot depend on observed " +
                                    var_name(p.var));
            }
            if (var.observed && p.slice == 0) {
                throw TopologyError(name +
                                    ".trans_parents: observed variable may only depend on slice t");
            }
            trans_rows *= cards[p.var];
        }
        validate_cpt(var.trans_cpt, trans_rows, var.card, name + ".trans_cpt");

        if (var.observed) {
            if (var.init_parents.empty() && var.init_cpt.empty()) continue;
            std::vector<std::size_t> trans_vars;
            for (const auto& p : var.trans_parents) trans_vars.push_back(p.var);
            if (var.init_parents != trans_vars || !(var.init_cpt == var.trans_cpt)) {
                throw TopologyError(name +
                                    ": observed variable must use the same CPT in both networks");
            }
            continue;
        }

        std::size_t init_rows = 1;
        for (std::size_t p : var.init_parents) {
            if (p >= n) throw DimensionError(name + ".init_parents: variable index out of range");
            if (model.vars[p].observed) {
                throw TopologyError(name + ".init_parents: hidden variable cannot depend on observed " +
                                    var_name(p));
            }
            init_rows *= cards[p];
            init_graph[v].push_back(p);
        }
        validate_cpt(var.init_cpt, init_rows, var.card, name + ".init_cpt");
    }

    if (topological(n, init_graph).empty()) throw CycleError("initial network has a cycle");
    transition_order(model);
}

HmmModel unroll_tbn(const Tbn2Model& model, std::size_t size_cap) {
    validate_tbn(model);
    const std::size_t n = model.vars.size();
    const auto hidden = model.hidden_vars();
    const auto observed = model.observed_vars();

    std::vector<std::size_t> cards(n);
    for (std::size_t v = 0; v < n; ++v) cards[v] = model.vars[v].card;

    std::vector<std::size_t> hidden_cards, observed_cards;
    for (std::size_t v : hidden) hidden_cards.push_back(cards[v]);
    for (std::size_t v : observed) observed_cards.push_back(cards[v]);

    const std::size_t S = checked_product(hidden_cards, size_cap, "joint state space");
    const std::size_t M = checked_product(observed_cards, size_cap, "joint symbol space");
    const MixedRadix states(hidden_cards);
    const MixedRadix symbols(observed_cards);

    HmmModel out;
    out.num_states = S;
    out.num_symbols = M;
    out.pi.assign(S, 0.0);
    out.trans = Matrix(S, S);
    out.emit = Matrix(S, M);

    std::vector<std::size_t> prev(n, 0), cur(n, 0), digits(hidden.size()), sym(observed.size());
    auto load_hidden = [&](std::size_t index, std::vector<std::size_t>& values) {
        states.decode(index, digits);
        for (std::size_t h = 0; h < hidden.size(); ++h) values[hidden[h]] = digits[h];
    };

    for (std::size_t i = 0; i < S; ++i) {
        load_hidden(i, cur);
        double p = 1.0;
        for (std::size_t v : hidden) {
            const auto& var = model.vars[v];
            p *= var.init_cpt(config_index(var.init_parents, cards, cur), cur[v]);
        }
        out.pi[i] = p;
    }

    for (std::size_t i = 0; i < S; ++i) {
        load_hidden(i, prev);
        for (std::size_t j = 0; j < S; ++j) {
            load_hidden(j, cur);
            double p = 1.0;
            for (std::size_t v : hidden) {
                const auto& var = model.vars[v];
                p *= var.trans_cpt(config_index(var.trans_parents, cards, prev, cur), cur[v]);
            }
            out.trans(i, j) = p;
        }
    }

    for (std::size_t j = 0; j < S; ++j) {
        load_hidden(j, cur);
        for (std::size_t k = 0; k < M; ++k) {
            symbols.decode(k, sym);
            for (std::size_t o = 0; o < observed.size(); ++o) cur[observed[o]] = sym[o];
            double p = 1.0;
            for (std::size_t v : observed) {
                const auto& var = model.vars[v];
                p *= var.trans_cpt(config_index(var.trans_parents, cards, prev, cur), cur[v]);
            }
            out.emit(j, k) = p;
        }
    }
    return out;
}

}  // namespace dbn
