#include "dbn/inference.hpp"

#include <cmath>

#include "dbn/errors.hpp"

namespace dbn {

ForwardResult forward(const HmmModel& model, std::span<const std::size_t> obs) {
    validate_observations(model, obs);
    const std::size_t T = obs.size();
    const std::size_t N = model.num_states;

    ForwardResult out;
    out.scaled_alpha = Matrix(T, N);
    out.scale_factors.resize(T);

    auto normalize_row = [&](std::size_t t) {
        auto row = out.scaled_alpha.row(t);
        double c = 0.0;
        for (double v : row) c += v;
        if (c <= 0.0) throw ImpossibleObservationError(t);
        for (double& v : row) v /= c;
        out.scale_factors[t] = c;
        out.log_likelihood += std::log(c);
    };

    for (std::size_t i = 0; i < N; ++i) {
        out.scaled_alpha(0, i) = model.pi[i] * model.emit(i, obs[0]);
    }
    normalize_row(0);

    for (std::size_t t = 1; t < T; ++t) {
        auto prev = out.scaled_alpha.row(t - 1);
        auto cur = out.scaled_alpha.row(t);
        for (std::size_t i = 0; i < N; ++i) {
            const double a = prev[i];
            if (a == 0.0) continue;
            const auto trans = model.trans.row(i);
            for (std::size_t j = 0; j < N; ++j) cur[j] += a * trans[j];
        }
        for (std::size_t j = 0; j < N; ++j) cur[j] *= model.emit(j, obs[t]);
        normalize_row(t);
    }
    return out;
}

BackwardResult backward(const HmmModel& model, std::span<const std::size_t> obs,
                        std::span<const double> scale_factors) {
    validate_observations(model, obs);
    if (scale_factors.size() != obs.size()) {
        throw DimensionError("backward: " + std::to_string(scale_factors.size()) +
                             " scale factors for a sequence of length " + std::to_string(obs.size()));
    }
    const std::size_t T = obs.size();
    const std::size_t N = model.num_states;

    BackwardResult out;
    out.scaled_beta = Matrix(T, N);
    for (double& v : out.scaled_beta.row(T - 1)) v = 1.0;

    std::vector<double> weighted(N);
    for (std::size_t t = T - 1; t > 0; --t) {
        const auto next = out.scaled_beta.row(t);
        for (std::size_t j = 0; j < N; ++j) weighted[j] = model.emit(j, obs[t]) * next[j];
        auto cur = out.scaled_beta.row(t - 1);
        for (std::size_t i = 0; i < N; ++i) {
            const auto trans = model.trans.row(i);
            double s = 0.0;
            for (std::size_t j = 0; j < N; ++j) s += trans[j] * weighted[j];
            cur[i] = s / scale_factors[t];
        }
    }
    return out;
}

double backward_log_likelihood(const HmmModel& model, std::span<const std::size_t> obs,
                               const BackwardResult& beta, std::span<const double> scale_factors) {
    double s = 0.0;
    for (std::size_t i = 0; i < model.num_states; ++i) {
        s += model.pi[i] * model.emit(i, obs[0]) * beta.scaled_beta(0, i);
    }
    // beta_1 carries 1 / (c_2 ... c_T); add those factors back.
    double log_l = std::log(s);
    for (std::size_t t = 1; t < scale_factors.size(); ++t) log_l += std::log(scale_factors[t]);
    return log_l;
}

double log_likelihood(const HmmModel& model, std::span<const std::size_t> obs) {
    return forward(model, obs).log_likelihood;
}

Matrix filter(const HmmModel& model, std::span<const std::size_t> obs) {
    return forward(model, obs).scaled_alpha;
}

PosteriorResult smooth(const HmmModel& model, std::span<const std::size_t> obs) {
    const auto fwd = forward(model, obs);
    const auto bwd = backward(model, obs, fwd.scale_factors);
    const std::size_t T = obs.size();
    const std::size_t N = model.num_states;

    PosteriorResult out;
    out.log_likelihood = fwd.log_likelihood;
    out.gamma = Matrix(T, N);
    for (std::size_t t = 0; t < T; ++t) {
        auto row = out.gamma.row(t);
        double total = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            row[i] = fwd.scaled_alpha(t, i) * bwd.scaled_beta(t, i);
            total += row[i];
        }
        for (double& v : row) v /= total;
    }

    out.xi.reserve(T > 0 ? T - 1 : 0);
    for (std::size_t t = 0; t + 1 < T; ++t) {
        Matrix slice(N, N);
        double total = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            const double a = fwd.scaled_alpha(t, i);
            for (std::size_t j = 0; j < N; ++j) {
                const double v =
                    a * model.trans(i, j) * model.emit(j, obs[t + 1]) * bwd.scaled_beta(t + 1, j);
                slice(i, j) = v;
                total += v;
            }
        }
        for (double& v : slice.data()) v /= total;
        out.xi.push_back(std::move(slice));
    }
    return out;
}

Distribution propagate(const HmmModel& model, std::span<const double> state_dist) {
    Distribution next(model.num_states, 0.0);
    for (std::size_t i = 0; i < model.num_states; ++i) {
        const auto trans = model.trans.row(i);
        for (std::size_t j = 0; j < model.num_states; ++j) next[j] += state_dist[i] * trans[j];
    }
    return next;
}

Distribution emission_mixture(const HmmModel& model, std::span<const double> state_dist) {
    Distribution out(model.num_symbols, 0.0);
    for (std::size_t i = 0; i < model.num_states; ++i) {
        const auto emit = model.emit.row(i);
        for (std::size_t k = 0; k < model.num_symbols; ++k) out[k] += state_dist[i] * emit[k];
    }
    return out;
}

Distribution predict_state(const HmmModel& model, std::span<const std::size_t> obs,
                           std::size_t horizon) {
    if (horizon == 0) throw DimensionError("prediction horizon must be at least 1");
    const auto alpha = filter(model, obs);
    const auto last = alpha.row(alpha.rows() - 1);
    Distribution dist(last.begin(), last.end());
    for (std::size_t h = 0; h < horizon; ++h) dist = propagate(model, dist);
    return dist;
}

Distribution predict_obs(const HmmModel& model, std::span<const std::size_t> obs) {
    return emission_mixture(model, predict_state(model, obs, 1));
}

}  // namespace dbn
