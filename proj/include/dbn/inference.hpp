#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "dbn/matrix.hpp"
#include "dbn/model.hpp"

namespace dbn {

/// Scaled forward pass. Row t of scaled_alpha is alpha_t / (c_1 ... c_t),
/// which equals the filtering distribution P(x_t | y_1..t).
struct ForwardResult {
    Matrix scaled_alpha;                // T x N, rows sum to one
    std::vector<double> scale_factors;  // c_t = P(y_t | y_1..t-1)
    double log_likelihood = 0.0;        // sum_t log c_t
};

/// Backward table scaled by the forward pass's factors: row t holds
/// beta_t / (c_{t+1} ... c_T). The last row is all ones.
struct BackwardResult {
    Matrix scaled_beta;
};

struct PosteriorResult {
    Matrix gamma;             // T x N, P(x_t | y_1..T)
    std::vector<Matrix> xi;   // T-1 slices, xi[t](i, j) = P(x_t = i, x_{t+1} = j | y_1..T)
    double log_likelihood = 0.0;
};

/// Throws ImpossibleObservationError when some c_t is exactly zero.
ForwardResult forward(const HmmModel& model, std::span<const std::size_t> obs);

/// `scale_factors` must come from forward() on the same inputs.
BackwardResult backward(const HmmModel& model, std::span<const std::size_t> obs,
                        std::span<const double> scale_factors);

/// Log-likelihood rebuilt from the backward side:
/// log sum_x pi(x) B(x, y_1) beta_1(x), undoing the scaling.
double backward_log_likelihood(const HmmModel& model, std::span<const std::size_t> obs,
                               const BackwardResult& beta, std::span<const double> scale_factors);

double log_likelihood(const HmmModel& model, std::span<const std::size_t> obs);

/// Row t is P(x_t | y_1..t).
Matrix filter(const HmmModel& model, std::span<const std::size_t> obs);

/// Single-slice and pairwise smoothed posteriors.
PosteriorResult smooth(const HmmModel& model, std::span<const std::size_t> obs);

/// P(x_{T+h} | y_1..T) for h = horizon >= 1, by applying A h times to the
/// final filtering distribution.
Distribution predict_state(const HmmModel& model, std::span<const std::size_t> obs,
                           std::size_t horizon = 1);

/// P(y_{T+1} | y_1..T).
Distribution predict_obs(const HmmModel& model, std::span<const std::size_t> obs);

/// Distribution of the symbol emitted from `state_dist`.
Distribution emission_mixture(const HmmModel& model, std::span<const double> state_dist);

/// Row vector times transition matrix.
Distribution propagate(const HmmModel& model, std::span<const double> state_dist);

// ---------------------------------------------------------------------------
// Particle filtering

struct ParticleSet {
    std::vector<std::size_t> particles;
    std::vector<double> weights;  // normalized
};

struct ParticleFilterConfig {
    std::size_t num_particles = 1000;
    std::uint64_t seed = 0;
    /// Resample when ESS / K falls below this value.
    double resample_threshold = 0.5;
};

struct ParticleFilterResult {
    std::vector<ParticleSet> steps;  // weighted set at each t, before any resampling
    Matrix estimates;                // T x N weighted state histograms
    std::vector<bool> resampled;     // whether resampling followed step t
};

/// Bootstrap particle filter: propose from the transition prior, weight by
/// the emission likelihood, systematic resampling on low effective sample
/// size. Deterministic in the seed.
ParticleFilterResult particle_filter(const HmmModel& model, std::span<const std::size_t> obs,
                                     const ParticleFilterConfig& config);

double effective_sample_size(std::span<const double> normalized_weights);

/// Systematic resampling with a single uniform offset. Returns ancestor indices.
std::vector<std::size_t> systematic_resample(std::span<const double> normalized_weights,
                                             std::size_t count, Rng& rng);

}  // namespace dbn
