#include "dbn/equivalence.hpp"

#include <algorithm>
#include <cmath>

#include "dbn/chmm.hpp"
#include "dbn/decoding.hpp"
#include "dbn/inference.hpp"
#include "dbn/model.hpp"
#include "dbn/oracle.hpp"

namespace dbn {

bool EquivalenceReport::ok() const {
    return path_mismatches == 0 && likelihood_dev < kTolerance && gamma_dev < kTolerance &&
           xi_dev < kTolerance && viterbi_score_rel_dev < kTolerance &&
           backward_dev < kBackwardTolerance && chmm_likelihood_dev < kTolerance &&
           chmm_gamma_dev < kTolerance;
}

namespace {

double max_abs_diff(const Matrix& a, const Matrix& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i) {
        d = std::max(d, std::abs(a.data()[i] - b.data()[i]));
    }
    return d;
}

std::size_t uniform_index(Rng& rng, std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

// Relative gap between the two most probable paths.
double top_two_gap(const HmmModel& model, const ObsSequence& obs) {
    double best = 0.0, second = 0.0;
    oracle::for_each_path(model.num_states, obs.size(), [&](std::span<const std::size_t> path) {
        const double p = oracle::path_probability(model, path, obs);
        if (p > best) {
            second = best;
            best = p;
        } else if (p > second) {
            second = p;
        }
    });
    return best > 0.0 ? (best - second) / best : 0.0;
}

}  // namespace

EquivalenceReport run_equivalence_suite(std::uint64_t seed, std::size_t count) {
    EquivalenceReport r;
    for (std::size_t k = 0; k < count; ++k) {
        Rng rng(seed + k);
        const std::size_t N = uniform_index(rng, 1, 3);
        const std::size_t M = uniform_index(rng, 1, 3);
        const std::size_t T = uniform_index(rng, 1, 6);
        const HmmModel model = random_hmm(N, M, rng);
        const ObsSequence obs = sample(model, T, rng()).obs;

        const auto fwd = forward(model, obs);
        const auto bwd = backward(model, obs, fwd.scale_factors);
        const auto post = smooth(model, obs);
        const auto path = viterbi(model, obs);

        const double enum_l = oracle::enum_likelihood(model, obs);
        const auto enum_post = oracle::enum_posterior(model, obs);
        const auto enum_path = oracle::enum_map_path(model, obs);

        r.likelihood_dev = std::max(r.likelihood_dev, std::abs(std::exp(fwd.log_likelihood) - enum_l));
        r.backward_dev = std::max(
            r.backward_dev,
            std::abs(backward_log_likelihood(model, obs, bwd, fwd.scale_factors) - fwd.log_likelihood));
        r.gamma_dev = std::max(r.gamma_dev, max_abs_diff(post.gamma, enum_post.gamma));
        for (std::size_t t = 0; t < post.xi.size(); ++t) {
            r.xi_dev = std::max(r.xi_dev, max_abs_diff(post.xi[t], enum_post.xi[t]));
        }

        const double best = std::exp(enum_path.log_joint_score);
        r.viterbi_score_rel_dev =
            std::max(r.viterbi_score_rel_dev, std::abs(std::exp(path.log_joint_score) - best) / best);
        if (N > 1 && top_two_gap(model, obs) < 1e-9) {
            ++r.tied_instances;
        } else if (path.path != enum_path.path) {
            ++r.path_mismatches;
        }
        ++r.hmm_instances;
    }

    for (std::size_t k = 0; k < count; ++k) {
        Rng rng(seed + count + k);
        const std::size_t L = uniform_index(rng, 1, 3);
        std::vector<std::size_t> states(L), symbols(L);
        for (std::size_t l = 0; l < L; ++l) {
            states[l] = uniform_index(rng, 1, 3);
            symbols[l] = uniform_index(rng, 1, 3);
        }
        const std::size_t T = uniform_index(rng, 1, 5);
        const ChmmModel model = random_chmm(states, symbols, neighbor_topology(L), rng);
        const auto obs = sample(model, T, rng()).obs;

        const HmmModel flat = flatten_chmm(model);
        const ObsSequence flat_obs = flatten_observations(model, obs);
        const double direct = chmm_log_likelihood(model, obs);
        r.chmm_likelihood_dev =
            std::max(r.chmm_likelihood_dev, std::abs(direct - log_likelihood(flat, flat_obs)));
        const auto joint = chmm_smooth(model, obs);
        r.chmm_gamma_dev =
            std::max(r.chmm_gamma_dev, max_abs_diff(joint.joint_gamma, smooth(flat, flat_obs).gamma));
        ++r.chmm_instances;
    }
    return r;
}

}  // namespace dbn
