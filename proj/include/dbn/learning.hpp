#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dbn/matrix.hpp"
#include "dbn/model.hpp"

namespace dbn {

struct EmConfig {
    std::size_t max_iterations = 200;
    double rel_tolerance = 1e-6;
    /// Added to every expected count before rows are normalized.
    double pseudocount = 0.0;
};

struct EmTrace {
    /// Log-likelihood of the parameters entering each iteration.
    std::vector<double> log_likelihoods;
    bool converged = false;
    std::size_t iterations_run = 0;
};

/// Expected counts gathered by the E-step.
struct SufficientStats {
    std::vector<double> expected_initial;  // N
    Matrix expected_transitions;           // N x N
    Matrix expected_emissions;             // N x M
    double log_likelihood = 0.0;

    SufficientStats() = default;
    SufficientStats(std::size_t num_states, std::size_t num_symbols);
};

struct LabeledSequence {
    StatePath states;
    ObsSequence obs;
};

/// Normalizes `counts + pseudocount`; a row with zero total falls back to uniform.
Distribution normalize_counts(std::span<const double> counts, double pseudocount);

/// Closed-form estimate from fully observed state paths.
HmmModel mle_complete(std::span<const LabeledSequence> data, std::size_t num_states,
                      std::size_t num_symbols, double pseudocount = 0.0);

/// E-step over all sequences in order. Errors name the failing sequence.
SufficientStats expected_counts(const HmmModel& model, std::span<const ObsSequence> sequences);

/// M-step: row-normalized counts.
HmmModel maximize(const SufficientStats& stats, double pseudocount);

/// True when |current - previous| < tol * (1 + |current|).
bool em_converged(double previous, double current, double rel_tolerance);

struct BaumWelchResult {
    HmmModel model;
    EmTrace trace;
};

BaumWelchResult baum_welch(const HmmModel& init, std::span<const ObsSequence> sequences,
                           const EmConfig& config = {});

}  // namespace dbn
