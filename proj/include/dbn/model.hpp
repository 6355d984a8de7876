#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dbn/matrix.hpp"

namespace dbn {

/// Categorical distribution: nonnegative entries summing to one.
using Distribution = std::vector<double>;

/// Symbol indices for a single-stream model, one per time step.
using ObsSequence = std::vector<std::size_t>;
using StatePath = std::vector<std::size_t>;

/// One L-tuple per time step, entry l belonging to chain l.
using MultiObsSequence = std::vector<std::vector<std::size_t>>;
using MultiStatePath = std::vector<std::vector<std::size_t>>;

using Rng = std::mt19937_64;

inline constexpr double kStochasticTolerance = 1e-9;
inline constexpr std::size_t kDefaultSizeCap = 1'000'000;

/// Checks that `probs` is a categorical distribution; `what` names the
/// offending row in the error message.
void validate_distribution(std::span<const double> probs, const std::string& what);

/// Discrete HMM. trans(i, j) = P(x_t = j | x_{t-1} = i), emit(i, k) = P(y_t = k | x_t = i).
struct HmmModel {
    std::size_t num_states = 0;
    std::size_t num_symbols = 0;
    Distribution pi;
    Matrix trans;
    Matrix emit;

    friend bool operator==(const HmmModel&, const HmmModel&) = default;
};

void validate_hmm(const HmmModel& model);

/// Throws ObservationError when `obs` is empty or holds an out-of-range symbol.
void validate_observations(const HmmModel& model, std::span<const std::size_t> obs);

struct ChmmChain {
    std::size_t num_states = 0;
    std::size_t num_symbols = 0;
    Distribution pi;
    Matrix emit;  // num_states x num_symbols

    friend bool operator==(const ChmmChain&, const ChmmChain&) = default;
};

/// Directed coupling from chain `from` at t-1 to chain `to` at t.
/// matrix is N(from) x N(to) and row-stochastic.
struct Coupling {
    std::size_t from = 0;
    std::size_t to = 0;
    Matrix matrix;

    friend bool operator==(const Coupling&, const Coupling&) = default;
};

/// Coupled HMM. The parent set Pa(l) of chain l is the set of `from`
/// indices of the couplings whose `to` is l. The next state of chain l is
///
///   P(x_t^l = j | x_{t-1}) ∝ prod_{l' in Pa(l)} a^(l',l)[x_{t-1}^{l'}, j]
///
/// normalized over j.
struct ChmmModel {
    std::vector<ChmmChain> chains;
    std::vector<Coupling> couplings;

    std::size_t num_chains() const noexcept { return chains.size(); }

    /// Sorted parent chains of chain `l`.
    std::vector<std::size_t> parents(std::size_t l) const;

    /// Couplings feeding chain `l`, ordered by source chain.
    std::vector<const Coupling*> incoming(std::size_t l) const;

    std::vector<std::size_t> state_counts() const;
    std::vector<std::size_t> symbol_counts() const;

    friend bool operator==(const ChmmModel&, const ChmmModel&) = default;
};

/// Directed edges (from, to) of the nearest-neighbour topology over
/// `num_chains` chains, self-loops included. Border chains get one neighbour.
std::vector<std::pair<std::size_t, std::size_t>> neighbor_topology(std::size_t num_chains);

/// Throws on dimension, stochasticity or topology problems. A coupling set
/// whose product is zero for every next state under some parent
/// configuration is a topology error.
void validate_chmm(const ChmmModel& model);

void validate_observations(const ChmmModel& model, const MultiObsSequence& obs);

/// Normalized next-state distribution of chain `l` given the full previous
/// joint state.
Distribution chain_conditional(const ChmmModel& model, std::size_t l,
                               std::span<const std::size_t> previous);

/// Row-major mixed-radix indexing of tuples; the first digit varies slowest.
class MixedRadix {
public:
    explicit MixedRadix(std::vector<std::size_t> radices);

    std::size_t size() const noexcept { return size_; }
    std::size_t digits() const noexcept { return radices_.size(); }
    const std::vector<std::size_t>& radices() const noexcept { return radices_; }

    std::size_t encode(std::span<const std::size_t> tuple) const;
    void decode(std::size_t index, std::span<std::size_t> tuple) const;
    std::vector<std::size_t> decode(std::size_t index) const;

private:
    std::vector<std::size_t> radices_;
    std::size_t size_ = 1;
};

/// Product of `counts`, throwing SizeCapError when it exceeds `cap`.
std::size_t checked_product(std::span<const std::size_t> counts, std::size_t cap,
                            const std::string& what);

/// Collapses a CHMM into an HMM over joint states and joint symbols, both
/// indexed row-major in chain order (chain 0 slowest).
HmmModel flatten_chmm(const ChmmModel& model, std::size_t size_cap = kDefaultSizeCap);

/// Joint-symbol index of an L-tuple observation under flatten_chmm's ordering.
ObsSequence flatten_observations(const ChmmModel& model, const MultiObsSequence& obs);

struct SampledSequence {
    StatePath states;
    ObsSequence obs;
};

struct SampledMultiSequence {
    MultiStatePath states;
    MultiObsSequence obs;
};

/// Draws a state path and observations of length `length`. Pure in (model, length, seed).
SampledSequence sample(const HmmModel& model, std::size_t length, std::uint64_t seed);
SampledMultiSequence sample(const ChmmModel& model, std::size_t length, std::uint64_t seed);

/// Index drawn from `probs` by inverse CDF.
std::size_t draw_categorical(std::span<const double> probs, Rng& rng);

/// Model with every row drawn uniformly from the simplex.
HmmModel random_hmm(std::size_t num_states, std::size_t num_symbols, Rng& rng);

/// Random CHMM over the given edges; every row drawn uniformly from the simplex.
ChmmModel random_chmm(std::span<const std::size_t> states_per_chain,
                      std::span<const std::size_t> symbols_per_chain,
                      const std::vector<std::pair<std::size_t, std::size_t>>& edges, Rng& rng);

/// Uniform draw from the probability simplex of dimension `n`.
Distribution random_simplex(std::size_t n, Rng& rng);

}  // namespace dbn
