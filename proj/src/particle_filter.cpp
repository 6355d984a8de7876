#include <algorithm>

#include "dbn/errors.hpp"
#include "dbn/inference.hpp"

namespace dbn {

double effective_sample_size(std::span<const double> normalized_weights) {
    double sq = 0.0;
    for (double w : normalized_weights) sq += w * w;
    return sq > 0.0 ? 1.0 / sq : 0.0;
}

std::vector<std::size_t> systematic_resample(std::span<const double> normalized_weights,
                                             std::size_t count, Rng& rng) {
    std::vector<std::size_t> ancestors(count);
    if (count == 0 || normalized_weights.empty()) return ancestors;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double step = 1.0 / static_cast<double>(count);
    const double offset = unit(rng) * step;

    std::size_t source = 0;
    double cumulative = normalized_weights[0];
    for (std::size_t k = 0; k < count; ++k) {
        const double position = offset + static_cast<double>(k) * step;
        while (position >= cumulative && source + 1 < normalized_weights.size()) {
            cumulative += normalized_weights[++source];
        }
        // Rounding can walk past the last positive weight.
        std::size_t pick = source;
        while (normalized_weights[pick] <= 0.0 && pick > 0) --pick;
        ancestors[k] = pick;
    }
    return ancestors;
}

ParticleFilterResult particle_filter(const HmmModel& model, std::span<const std::size_t> obs,
                                     const ParticleFilterConfig& config) {
    validate_observations(model, obs);
    if (config.num_particles == 0) throw DimensionError("particle count must be at least 1");
    if (!(config.resample_threshold >= 0.0 && config.resample_threshold <= 1.0)) {
        throw DimensionError("resample threshold must lie in [0, 1]");
    }

    const std::size_t K = config.num_particles;
    const std::size_t T = obs.size();
    const std::size_t N = model.num_states;
    Rng rng(config.seed);

    ParticleFilterResult out;
    out.estimates = Matrix(T, N);
    out.steps.reserve(T);
    out.resampled.reserve(T);

    std::vector<std::size_t> particles(K);
    std::vector<double> weights(K, 1.0 / static_cast<double>(K));

    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t k = 0; k < K; ++k) {
            particles[k] = t == 0 ? draw_categorical(model.pi, rng)
                                  : draw_categorical(model.trans.row(particles[k]), rng);
            weights[k] *= model.emit(particles[k], obs[t]);
        }
        double total = 0.0;
        for (double w : weights) total += w;
        if (total <= 0.0) throw DegenerateWeightsError(t);
        for (double& w : weights) w /= total;

        auto est = out.estimates.row(t);
        for (std::size_t k = 0; k < K; ++k) est[particles[k]] += weights[k];
        out.steps.push_back({particles, weights});

        const bool resample =
            effective_sample_size(weights) / static_cast<double>(K) < config.resample_threshold;
        out.resampled.push_back(resample);
        if (resample) {
            const auto ancestors = systematic_resample(weights, K, rng);
            std::vector<std::size_t> next(K);
            for (std::size_t k = 0; k < K; ++k) next[k] = particles[ancestors[k]];
            particles = std::move(next);
            std::fill(weights.begin(), weights.end(), 1.0 / static_cast<double>(K));
        }
    }
    return out;
}

}  // namespace dbn
