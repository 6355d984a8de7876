#include "dbn/oracle.hpp"

#include <cmath>
#include <limits>

#include "dbn/errors.hpp"

namespace dbn::oracle {

double path_probability(const HmmModel& model, std::span<const std::size_t> states,
                        std::span<const std::size_t> obs) {
    double p = model.pi[states[0]] * model.emit(states[0], obs[0]);
    for (std::size_t t = 1; t < states.size(); ++t) {
        p *= model.trans(states[t - 1], states[t]) * model.emit(states[t], obs[t]);
    }
    return p;
}

void for_each_path(std::size_t num_states, std::size_t length,
                   const std::function<void(std::span<const std::size_t>)>& visit) {
    std::size_t total = 1;
    for (std::size_t t = 0; t < length; ++t) {
        if (total > kMaxPaths / num_states) {
            throw InstanceTooLargeError("enumeration of " + std::to_string(num_states) + "^" +
                                        std::to_string(length) + " paths exceeds guard");
        }
        total *= num_states;
    }
    std::vector<std::size_t> path(length, 0);
    for (std::size_t n = 0; n < total; ++n) {
        visit(path);
        // Odometer increment, last position fastest.
        for (std::size_t t = length; t-- > 0;) {
            if (++path[t] < num_states) break;
            path[t] = 0;
        }
    }
}

double enum_likelihood(const HmmModel& model, std::span<const std::size_t> obs) {
    validate_observations(model, obs);
    double total = 0.0;
    for_each_path(model.num_states, obs.size(),
                  [&](std::span<const std::size_t> path) { total += path_probability(model, path, obs); });
    return total;
}

EnumPosterior enum_posterior(const HmmModel& model, std::span<const std::size_t> obs) {
    validate_observations(model, obs);
    const std::size_t T = obs.size();
    const std::size_t N = model.num_states;
    EnumPosterior out;
    out.gamma = Matrix(T, N);
    out.xi.assign(T - 1, Matrix(N, N));

    double total = 0.0;
    for_each_path(N, T, [&](std::span<const std::size_t> path) {
        const double p = path_probability(model, path, obs);
        total += p;
        for (std::size_t t = 0; t < T; ++t) {
            out.gamma(t, path[t]) += p;
            if (t + 1 < T) out.xi[t](path[t], path[t + 1]) += p;
        }
    });
    if (total <= 0.0) throw ImpossibleObservationError(0);
    for (double& v : out.gamma.data()) v /= total;
    for (auto& slice : out.xi) {
        for (double& v : slice.data()) v /= total;
    }
    return out;
}

DecodeResult enum_map_path(const HmmModel& model, std::span<const std::size_t> obs) {
    validate_observations(model, obs);
    double best = -1.0;
    StatePath best_path;
    for_each_path(model.num_states, obs.size(), [&](std::span<const std::size_t> path) {
        const double p = path_probability(model, path, obs);
        if (p > best) {
            best = p;
            best_path.assign(path.begin(), path.end());
        }
    });
    if (best <= 0.0) throw ImpossibleObservationError(0);
    return {best_path, std::log(best)};
}

Distribution enum_predict_state(const HmmModel& model, std::span<const std::size_t> obs) {
    validate_observations(model, obs);
    const std::size_t T = obs.size();
    Distribution out(model.num_states, 0.0);
    double total = 0.0;
    for_each_path(model.num_states, T + 1, [&](std::span<const std::size_t> path) {
        const double p = path_probability(model, path.first(T), obs) * model.trans(path[T - 1], path[T]);
        out[path[T]] += p;
        total += p;
    });
    for (double& v : out) v /= total;
    return out;
}

}  // namespace dbn::oracle
