#include "dbn/learning.hpp"

#include <cmath>

#include "dbn/errors.hpp"
#include "dbn/inference.hpp"

namespace dbn {

SufficientStats::SufficientStats(std::size_t num_states, std::size_t num_symbols)
    : expected_initial(num_states, 0.0),
      expected_transitions(num_states, num_states),
      expected_emissions(num_states, num_symbols) {}

Distribution normalize_counts(std::span<const double> counts, double pseudocount) {
    Distribution out(counts.size());
    double total = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        out[i] = counts[i] + pseudocount;
        total += out[i];
    }
    if (total <= 0.0) {
        for (double& v : out) v = 1.0 / static_cast<double>(out.size());
        return out;
    }
    for (double& v : out) v /= total;
    return out;
}

namespace {

Matrix normalize_rows(const Matrix& counts, double pseudocount) {
    Matrix out(counts.rows(), counts.cols());
    for (std::size_t r = 0; r < counts.rows(); ++r) {
        const auto row = normalize_counts(counts.row(r), pseudocount);
        std::copy(row.begin(), row.end(), out.row(r).begin());
    }
    return out;
}

}  // namespace

HmmModel maximize(const SufficientStats& stats, double pseudocount) {
    HmmModel m;
    m.num_states = stats.expected_initial.size();
    m.num_symbols = stats.expected_emissions.cols();
    m.pi = normalize_counts(stats.expected_initial, pseudocount);
    m.trans = normalize_rows(stats.expected_transitions, pseudocount);
    m.emit = normalize_rows(stats.expected_emissions, pseudocount);
    return m;
}

HmmModel mle_complete(std::span<const LabeledSequence> data, std::size_t num_states,
                      std::size_t num_symbols, double pseudocount) {
    if (data.empty()) throw DimensionError("mle_complete: no training data");
    if (num_states == 0 || num_symbols == 0) {
        throw DimensionError("mle_complete: state and symbol counts must be positive");
    }
    if (pseudocount < 0.0) throw DimensionError("pseudocount must be nonnegative");

    SufficientStats counts(num_states, num_symbols);
    for (std::size_t s = 0; s < data.size(); ++s) {
        const auto& seq = data[s];
        if (seq.states.size() != seq.obs.size() || seq.states.empty()) {
            throw DimensionError("sequence " + std::to_string(s) +
                                 ": state path and observations must be nonempty and equally long");
        }
        for (std::size_t t = 0; t < seq.states.size(); ++t) {
            if (seq.states[t] >= num_states || seq.obs[t] >= num_symbols) {
                throw ObservationError("sequence " + std::to_string(s) + ": index out of range at t=" +
                                       std::to_string(t));
            }
        }
        counts.expected_initial[seq.states[0]] += 1.0;
        for (std::size_t t = 0; t < seq.states.size(); ++t) {
            if (t > 0) counts.expected_transitions(seq.states[t - 1], seq.states[t]) += 1.0;
            counts.expected_emissions(seq.states[t], seq.obs[t]) += 1.0;
        }
    }
    return maximize(counts, pseudocount);
}

SufficientStats expected_counts(const HmmModel& model, std::span<const ObsSequence> sequences) {
    SufficientStats stats(model.num_states, model.num_symbols);
    for (std::size_t s = 0; s < sequences.size(); ++s) {
        const auto& obs = sequences[s];
        PosteriorResult post;
        try {
            post = smooth(model, obs);
        } catch (const ImpossibleObservationError& e) {
            throw ImpossibleObservationError(e.time(), s);
        }
        stats.log_likelihood += post.log_likelihood;
        for (std::size_t i = 0; i < model.num_states; ++i) stats.expected_initial[i] += post.gamma(0, i);
        for (const auto& slice : post.xi) {
            for (std::size_t k = 0; k < slice.data().size(); ++k) {
                stats.expected_transitions.data()[k] += slice.data()[k];
            }
        }
        for (std::size_t t = 0; t < obs.size(); ++t) {
            for (std::size_t i = 0; i < model.num_states; ++i) {
                stats.expected_emissions(i, obs[t]) += post.gamma(t, i);
            }
        }
    }
    return stats;
}

bool em_converged(double previous, double current, double rel_tolerance) {
    return std::abs(current - previous) < rel_tolerance * (1.0 + std::abs(current));
}

BaumWelchResult baum_welch(const HmmModel& init, std::span<const ObsSequence> sequences,
                           const EmConfig& config) {
    validate_hmm(init);
    if (sequences.empty()) throw DimensionError("baum_welch: no training sequences");
    if (config.max_iterations == 0) throw DimensionError("max_iterations must be positive");
    if (config.pseudocount < 0.0) throw DimensionError("pseudocount must be nonnegative");
    for (const auto& seq : sequences) validate_observations(init, seq);

    BaumWelchResult out{init, {}};
    for (std::size_t it = 0; it < config.max_iterations; ++it) {
        const auto stats = expected_counts(out.model, sequences);
        out.model = maximize(stats, config.pseudocount);
        out.trace.log_likelihoods.push_back(stats.log_likelihood);
        out.trace.iterations_run = it + 1;
        const auto& ll = out.trace.log_likelihoods;
        if (ll.size() >= 2 && em_converged(ll[ll.size() - 2], ll.back(), config.rel_tolerance)) {
            out.trace.converged = true;
            break;
        }
    }
    return out;
}

}  // namespace dbn
