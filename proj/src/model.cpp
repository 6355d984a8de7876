#include "dbn/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "dbn/errors.hpp"

namespace dbn {

namespace {

std::string format_sum(double s) {
    std::ostringstream os;
    os.precision(12);
    os << s;
    return os.str();
}

void require_shape(const Matrix& m, std::size_t rows, std::size_t cols, const std::string& what) {
    if (m.rows() != rows || m.cols() != cols) {
        throw DimensionError(what + ": expected " + std::to_string(rows) + "x" +
                             std::to_string(cols) + ", got " + std::to_string(m.rows()) + "x" +
                             std::to_string(m.cols()));
    }
}

void validate_rows(const Matrix& m, const std::string& what) {
    for (std::size_t r = 0; r < m.rows(); ++r) {
        validate_distribution(m.row(r), what + " row " + std::to_string(r));
    }
}

}  // namespace

void validate_distribution(std::span<const double> probs, const std::string& what) {
    double sum = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (!(probs[i] >= 0.0) || !std::isfinite(probs[i])) {
            throw StochasticityError(what + ": entry " + std::to_string(i) +
                                     " is not a probability (" + format_sum(probs[i]) + ")");
        }
        sum += probs[i];
    }
    if (std::abs(sum - 1.0) > kStochasticTolerance) {
        throw StochasticityError(what + ": sums to " + format_sum(sum));
    }
}

void validate_hmm(const HmmModel& model) {
    if (model.num_states == 0) throw DimensionError("num_states must be positive");
    if (model.num_symbols == 0) throw DimensionError("num_symbols must be positive");
    if (model.pi.size() != model.num_states) {
        throw DimensionError("pi: expected length " + std::to_string(model.num_states) + ", got " +
                             std::to_string(model.pi.size()));
    }
    require_shape(model.trans, model.num_states, model.num_states, "A");
    require_shape(model.emit, model.num_states, model.num_symbols, "B");
    validate_distribution(model.pi, "pi");
    validate_rows(model.trans, "A");
    validate_rows(model.emit, "B");
}

void validate_observations(const HmmModel& model, std::span<const std::size_t> obs) {
    if (obs.empty()) throw ObservationError("observation sequence is empty");
    for (std::size_t t = 0; t < obs.size(); ++t) {
        if (obs[t] >= model.num_symbols) {
            throw ObservationError("symbol " + std::to_string(obs[t]) + " at t=" +
                                   std::to_string(t) + " outside alphabet of size " +
                                   std::to_string(model.num_symbols));
        }
    }
}

// ---------------------------------------------------------------------------
// CHMM

std::vector<std::size_t> ChmmModel::parents(std::size_t l) const {
    std::vector<std::size_t> out;
    for (const auto& c : couplings) {
        if (c.to == l) out.push_back(c.from);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<const Coupling*> ChmmModel::incoming(std::size_t l) const {
    std::vector<const Coupling*> out;
    for (const auto& c : couplings) {
        if (c.to == l) out.push_back(&c);
    }
    std::sort(out.begin(), out.end(),
              [](const Coupling* a, const Coupling* b) { return a->from < b->from; });
    return out;
}

std::vector<std::size_t> ChmmModel::state_counts() const {
    std::vector<std::size_t> out;
    out.reserve(chains.size());
    for (const auto& c : chains) out.push_back(c.num_states);
    return out;
}

std::vector<std::size_t> ChmmModel::symbol_counts() const {
    std::vector<std::size_t> out;
    out.reserve(chains.size());
    for (const auto& c : chains) out.push_back(c.num_symbols);
    return out;
}

std::vector<std::pair<std::size_t, std::size_t>> neighbor_topology(std::size_t num_chains) {
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    for (std::size_t to = 0; to < num_chains; ++to) {
        if (to > 0) edges.emplace_back(to - 1, to);
        edges.emplace_back(to, to);
        if (to + 1 < num_chains) edges.emplace_back(to + 1, to);
    }
    return edges;
}

void validate_chmm(const ChmmModel& model) {
    const std::size_t L = model.num_chains();
    if (L == 0) throw DimensionError("chains: at least one chain is required");

    for (std::size_t l = 0; l < L; ++l) {
        const auto& chain = model.chains[l];
        const std::string name = "chains[" + std::to_string(l) + "]";
        if (chain.num_states == 0) throw DimensionError(name + ".states must be positive");
        if (chain.num_symbols == 0) throw DimensionError(name + ".symbols must be positive");
        if (chain.pi.size() != chain.num_states) {
            throw DimensionError(name + ".pi: expected length " + std::to_string(chain.num_states) +
                                 ", got " + std::to_string(chain.pi.size()));
        }
        require_shape(chain.emit, chain.num_states, chain.num_symbols, name + ".emit");
        validate_distribution(chain.pi, name + ".pi");
        validate_rows(chain.emit, name + ".emit");
    }

    std::set<std::pair<std::size_t, std::size_t>> seen;
    for (std::size_t k = 0; k < model.couplings.size(); ++k) {
        const auto& c = model.couplings[k];
        const std::string name = "couplings[" + std::to_string(k) + "]";
        if (c.from >= L || c.to >= L) {
            throw TopologyError(name + ": chain index out of range (" + std::to_string(c.from) +
                                " -> " + std::to_string(c.to) + ")");
        }
        if (!seen.emplace(c.from, c.to).second) {
            throw TopologyError(name + ": duplicate coupling " + std::to_string(c.from) + " -> " +
                                std::to_string(c.to));
        }
        require_shape(c.matrix, model.chains[c.from].num_states, model.chains[c.to].num_states,
                      name + ".matrix");
        validate_rows(c.matrix, name + ".matrix");
    }

    for (std::size_t l = 0; l < L; ++l) {
        if (!seen.contains({l, l})) {
            throw TopologyError("chain " + std::to_string(l) + " is missing its self-coupling");
        }
    }

    // Every parent configuration must leave some next state reachable.
    for (std::size_t l = 0; l < L; ++l) {
        const auto in = model.incoming(l);
        std::vector<std::size_t> radices;
        for (const auto* c : in) radices.push_back(model.chains[c->from].num_states);
        const MixedRadix configs(radices);
        std::vector<std::size_t> config(in.size());
        for (std::size_t idx = 0; idx < configs.size(); ++idx) {
            configs.decode(idx, config);
            double total = 0.0;
            for (std::size_t j = 0; j < model.chains[l].num_states; ++j) {
                double p = 1.0;
                for (std::size_t k = 0; k < in.size(); ++k) p *= in[k]->matrix(config[k], j);
                total += p;
            }
            if (total <= 0.0) {
                throw TopologyError("chain " + std::to_string(l) +
                                    ": coupling product is zero for every next state under parent "
                                    "configuration " +
                                    std::to_string(idx));
            }
        }
    }
}

void validate_observations(const ChmmModel& model, const MultiObsSequence& obs) {
    if (obs.empty()) throw ObservationError("observation sequence is empty");
    for (std::size_t t = 0; t < obs.size(); ++t) {
        if (obs[t].size() != model.num_chains()) {
            throw ObservationError("step " + std::to_string(t) + " has " +
                                   std::to_string(obs[t].size()) + " symbols, expected " +
                                   std::to_string(model.num_chains()));
        }
        for (std::size_t l = 0; l < obs[t].size(); ++l) {
            if (obs[t][l] >= model.chains[l].num_symbols) {
                throw ObservationError("symbol " + std::to_string(obs[t][l]) + " at t=" +
                                       std::to_string(t) + " chain " + std::to_string(l) +
                                       " outside alphabet of size " +
                                       std::to_string(model.chains[l].num_symbols));
            }
        }
    }
}

Distribution chain_conditional(const ChmmModel& model, std::size_t l,
                               std::span<const std::size_t> previous) {
    const std::size_t n = model.chains[l].num_states;
    Distribution row(n, 1.0);
    for (const auto& c : model.couplings) {
        if (c.to != l) continue;
        const std::size_t i = previous[c.from];
        for (std::size_t j = 0; j < n; ++j) row[j] *= c.matrix(i, j);
    }
    double total = 0.0;
    for (double p : row) total += p;
    for (double& p : row) p /= total;
    return row;
}

// ---------------------------------------------------------------------------
// Joint indexing and flattening

MixedRadix::MixedRadix(std::vector<std::size_t> radices) : radices_(std::move(radices)) {
    for (std::size_t r : radices_) size_ *= r;
}

std::size_t MixedRadix::encode(std::span<const std::size_t> tuple) const {
    std::size_t index = 0;
    for (std::size_t d = 0; d < radices_.size(); ++d) index = index * radices_[d] + tuple[d];
    return index;
}

void MixedRadix::decode(std::size_t index, std::span<std::size_t> tuple) const {
    for (std::size_t d = radices_.size(); d-- > 0;) {
        tuple[d] = index % radices_[d];
        index /= radices_[d];
    }
}

std::vector<std::size_t> MixedRadix::decode(std::size_t index) const {
    std::vector<std::size_t> tuple(radices_.size());
    decode(index, tuple);
    return tuple;
}

std::size_t checked_product(std::span<const std::size_t> counts, std::size_t cap,
                            const std::string& what) {
    std::size_t product = 1;
    for (std::size_t c : counts) {
        if (c != 0 && product > cap / c) {
            throw SizeCapError(what + " exceeds size cap " + std::to_string(cap));
        }
        product *= c;
    }
    if (product > cap) throw SizeCapError(what + " exceeds size cap " + std::to_string(cap));
    return product;
}

HmmModel flatten_chmm(const ChmmModel& model, std::size_t size_cap) {
    validate_chmm(model);
    const auto state_counts = model.state_counts();
    const auto symbol_counts = model.symbol_counts();
    const std::size_t S = checked_product(state_counts, size_cap, "joint state space");
    const std::size_t M = checked_product(symbol_counts, size_cap, "joint symbol space");
    const std::size_t L = model.num_chains();
    const MixedRadix states(state_counts);
    const MixedRadix symbols(symbol_counts);

    HmmModel out;
    out.num_states = S;
    out.num_symbols = M;
    out.pi.assign(S, 0.0);
    out.trans = Matrix(S, S);
    out.emit = Matrix(S, M);

    std::vector<std::size_t> prev(L), next(L), sym(L);
    std::vector<Distribution> conditionals(L);
    for (std::size_t i = 0; i < S; ++i) {
        states.decode(i, prev);
        double p = 1.0;
        for (std::size_t l = 0; l < L; ++l) p *= model.chains[l].pi[prev[l]];
        out.pi[i] = p;

        for (std::size_t l = 0; l < L; ++l) conditionals[l] = chain_conditional(model, l, prev);
        for (std::size_t j = 0; j < S; ++j) {
            states.decode(j, next);
            double q = 1.0;
            for (std::size_t l = 0; l < L; ++l) q *= conditionals[l][next[l]];
            out.trans(i, j) = q;
        }

        for (std::size_t k = 0; k < M; ++k) {
            symbols.decode(k, sym);
            double e = 1.0;
            for (std::size_t l = 0; l < L; ++l) e *= model.chains[l].emit(prev[l], sym[l]);
            out.emit(i, k) = e;
        }
    }
    return out;
}

ObsSequence flatten_observations(const ChmmModel& model, const MultiObsSequence& obs) {
    validate_observations(model, obs);
    const MixedRadix symbols(model.symbol_counts());
    ObsSequence out;
    out.reserve(obs.size());
    for (const auto& step : obs) out.push_back(symbols.encode(step));
    return out;
}

// ---------------------------------------------------------------------------
// Sampling

std::size_t draw_categorical(std::span<const double> probs, Rng& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double u = unit(rng);
    double cumulative = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (probs[i] <= 0.0) continue;
        cumulative += probs[i];
        last_positive = i;
        if (u < cumulative) return i;
    }
    // Rounding left u above the accumulated mass.
    return last_positive;
}

SampledSequence sample(const HmmModel& model, std::size_t length, std::uint64_t seed) {
    validate_hmm(model);
    if (length == 0) throw ObservationError("sample length must be positive");
    Rng rng(seed);
    SampledSequence out;
    out.states.reserve(length);
    out.obs.reserve(length);
    std::size_t x = draw_categorical(model.pi, rng);
    for (std::size_t t = 0; t < length; ++t) {
        if (t > 0) x = draw_categorical(model.trans.row(x), rng);
        out.states.push_back(x);
        out.obs.push_back(draw_categorical(model.emit.row(x), rng));
    }
    return out;
}

SampledMultiSequence sample(const ChmmModel& model, std::size_t length, std::uint64_t seed) {
    validate_chmm(model);
    if (length == 0) throw ObservationError("sample length must be positive");
    const std::size_t L = model.num_chains();
    Rng rng(seed);
    SampledMultiSequence out;
    std::vector<std::size_t> x(L);
    for (std::size_t l = 0; l < L; ++l) x[l] = draw_categorical(model.chains[l].pi, rng);
    for (std::size_t t = 0; t < length; ++t) {
        if (t > 0) {
            std::vector<std::size_t> next(L);
            for (std::size_t l = 0; l < L; ++l) {
                next[l] = draw_categorical(chain_conditional(model, l, x), rng);
            }
            x = std::move(next);
        }
        std::vector<std::size_t> y(L);
        for (std::size_t l = 0; l < L; ++l) {
            y[l] = draw_categorical(model.chains[l].emit.row(x[l]), rng);
        }
        out.states.push_back(x);
        out.obs.push_back(std::move(y));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Random models

Distribution random_simplex(std::size_t n, Rng& rng) {
    // Normalized unit exponentials are uniform on the simplex.
    std::exponential_distribution<double> expo(1.0);
    Distribution p(n);
    double total = 0.0;
    for (double& v : p) {
        v = expo(rng) + 1e-12;
        total += v;
    }
    for (double& v : p) v /= total;
    return p;
}

namespace {

Matrix random_stochastic(std::size_t rows, std::size_t cols, Rng& rng) {
    Matrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        const auto p = random_simplex(cols, rng);
        std::copy(p.begin(), p.end(), m.row(r).begin());
    }
    return m;
}

}  // namespace

HmmModel random_hmm(std::size_t num_states, std::size_t num_symbols, Rng& rng) {
    HmmModel m;
    m.num_states = num_states;
    m.num_symbols = num_symbols;
    m.pi = random_simplex(num_states, rng);
    m.trans = random_stochastic(num_states, num_states, rng);
    m.emit = random_stochastic(num_states, num_symbols, rng);
    return m;
}

ChmmModel random_chmm(std::span<const std::size_t> states_per_chain,
                      std::span<const std::size_t> symbols_per_chain,
                      const std::vector<std::pair<std::size_t, std::size_t>>& edges, Rng& rng) {
    ChmmModel m;
    for (std::size_t l = 0; l < states_per_chain.size(); ++l) {
        ChmmChain c;
        c.num_states = states_per_chain[l];
        c.num_symbols = symbols_per_chain[l];
        c.pi = random_simplex(c.num_states, rng);
        c.emit = random_stochastic(c.num_states, c.num_symbols, rng);
        m.chains.push_back(std::move(c));
    }
    for (const auto& [from, to] : edges) {
        m.couplings.push_back(
            {from, to, random_stochastic(states_per_chain[from], states_per_chain[to], rng)});
    }
    return m;
}

}  // namespace dbn
