#include "dbn/chmm.hpp"

#include <algorithm>
#include <cmath>

#include "dbn/errors.hpp"

namespace dbn {

ChmmTransitionKernel::ChmmTransitionKernel(const ChmmModel& model, std::size_t size_cap)
    : joint_(model.state_counts()) {
    validate_chmm(model);
    const auto counts = model.state_counts();
    checked_product(counts, size_cap, "joint state space");
    const std::size_t L = model.num_chains();
    const std::size_t S = joint_.size();

    tuples_.resize(S * L);
    for (std::size_t s = 0; s < S; ++s) joint_.decode(s, {tuples_.data() + s * L, L});

    std::vector<std::vector<std::size_t>> parents(L);
    for (std::size_t l = 0; l < L; ++l) {
        const auto in = model.incoming(l);
        std::vector<std::size_t> radices;
        for (const auto* c : in) {
            radices.push_back(counts[c->from]);
            parents[l].push_back(c->from);
        }
        const MixedRadix configs(radices);
        Matrix cpt(configs.size(), counts[l]);
        std::vector<std::size_t> config(in.size());
        for (std::size_t r = 0; r < configs.size(); ++r) {
            configs.decode(r, config);
            auto row = cpt.row(r);
            std::fill(row.begin(), row.end(), 1.0);
            for (std::size_t k = 0; k < in.size(); ++k) {
                const auto src = in[k]->matrix.row(config[k]);
                for (std::size_t j = 0; j < row.size(); ++j) row[j] *= src[j];
            }
            double total = 0.0;
            for (double v : row) total += v;
            for (double& v : row) v /= total;
        }
        chain_cpt_.push_back(std::move(cpt));
    }

    kernel_ = Matrix(S, S);
    configs_.resize(S * L);
    for (std::size_t i = 0; i < S; ++i) {
        const auto prev = tuple(i);
        for (std::size_t l = 0; l < L; ++l) {
            std::size_t idx = 0;
            for (std::size_t p : parents[l]) idx = idx * counts[p] + prev[p];
            configs_[i * L + l] = idx;
        }
        for (std::size_t j = 0; j < S; ++j) {
            const auto next = tuple(j);
            double w = 1.0;
            for (std::size_t l = 0; l < L; ++l) w *= chain_cpt_[l](parent_config(i, l), next[l]);
            kernel_(i, j) = w;
        }
    }
}

namespace {

// Per-step joint emission probabilities, T x S.
Matrix joint_emissions(const ChmmModel& model, const ChmmTransitionKernel& kernel,
                       const MultiObsSequence& obs) {
    const std::size_t S = kernel.num_joint_states();
    const std::size_t L = model.num_chains();
    Matrix out(obs.size(), S);
    for (std::size_t t = 0; t < obs.size(); ++t) {
        for (std::size_t s = 0; s < S; ++s) {
            const auto tuple = kernel.tuple(s);
            double e = 1.0;
            for (std::size_t l = 0; l < L; ++l) e *= model.chains[l].emit(tuple[l], obs[t][l]);
            out(t, s) = e;
        }
    }
    return out;
}

ChmmForwardResult forward_pass(const ChmmModel& model, const ChmmTransitionKernel& kernel,
                               const Matrix& emissions) {
    const std::size_t T = emissions.rows();
    const std::size_t S = kernel.num_joint_states();
    const std::size_t L = model.num_chains();
    const Matrix& K = kernel.kernel();

    ChmmForwardResult out;
    out.scaled_alpha = Matrix(T, S);
    out.scale_factors.resize(T);

    for (std::size_t s = 0; s < S; ++s) {
        const auto tuple = kernel.tuple(s);
        double p = emissions(0, s);
        for (std::size_t l = 0; l < L; ++l) p *= model.chains[l].pi[tuple[l]];
        out.scaled_alpha(0, s) = p;
    }

    for (std::size_t t = 0; t < T; ++t) {
        auto cur = out.scaled_alpha.row(t);
        if (t > 0) {
            const auto prev = out.scaled_alpha.row(t - 1);
            for (std::size_t i = 0; i < S; ++i) {
                const double a = prev[i];
                if (a == 0.0) continue;
                const auto k = K.row(i);
                for (std::size_t j = 0; j < S; ++j) cur[j] += a * k[j];
            }
            for (std::size_t j = 0; j < S; ++j) cur[j] *= emissions(t, j);
        }
        double c = 0.0;
        for (double v : cur) c += v;
        if (c <= 0.0) throw ImpossibleObservationError(t);
        for (double& v : cur) v /= c;
        out.scale_factors[t] = c;
        out.log_likelihood += std::log(c);
    }
    return out;
}

ChmmBackwardResult backward_pass(const ChmmTransitionKernel& kernel, const Matrix& emissions,
                                 std::span<const double> scale_factors) {
    const std::size_t T = emissions.rows();
    const std::size_t S = kernel.num_joint_states();
    const Matrix& K = kernel.kernel();

    ChmmBackwardResult out;
    out.scaled_beta = Matrix(T, S);
    for (double& v : out.scaled_beta.row(T - 1)) v = 1.0;
    std::vector<double> weighted(S);
    for (std::size_t t = T - 1; t > 0; --t) {
        for (std::size_t j = 0; j < S; ++j) weighted[j] = emissions(t, j) * out.scaled_beta(t, j);
        auto cur = out.scaled_beta.row(t - 1);
        for (std::size_t i = 0; i < S; ++i) {
            const auto k = K.row(i);
            double s = 0.0;
            for (std::size_t j = 0; j < S; ++j) s += k[j] * weighted[j];
            cur[i] = s / scale_factors[t];
        }
    }
    return out;
}

Matrix joint_gamma(const ChmmForwardResult& fwd, const ChmmBackwardResult& bwd) {
    Matrix gamma(fwd.scaled_alpha.rows(), fwd.scaled_alpha.cols());
    for (std::size_t t = 0; t < gamma.rows(); ++t) {
        auto row = gamma.row(t);
        double total = 0.0;
        for (std::size_t s = 0; s < row.size(); ++s) {
            row[s] = fwd.scaled_alpha(t, s) * bwd.scaled_beta(t, s);
            total += row[s];
        }
        for (double& v : row) v /= total;
    }
    return gamma;
}

std::vector<Matrix> chain_marginals(const ChmmModel& model, const ChmmTransitionKernel& kernel,
                                    const Matrix& gamma) {
    const std::size_t L = model.num_chains();
    std::vector<Matrix> out;
    for (std::size_t l = 0; l < L; ++l) out.emplace_back(gamma.rows(), model.chains[l].num_states);
    for (std::size_t t = 0; t < gamma.rows(); ++t) {
        for (std::size_t s = 0; s < gamma.cols(); ++s) {
            const auto tuple = kernel.tuple(s);
            for (std::size_t l = 0; l < L; ++l) out[l](t, tuple[l]) += gamma(t, s);
        }
    }
    return out;
}

}  // namespace

ChmmForwardResult chmm_forward(const ChmmModel& model, const MultiObsSequence& obs,
                               std::size_t size_cap) {
    validate_observations(model, obs);
    const ChmmTransitionKernel kernel(model, size_cap);
    return forward_pass(model, kernel, joint_emissions(model, kernel, obs));
}

ChmmBackwardResult chmm_backward(const ChmmModel& model, const MultiObsSequence& obs,
                                 std::span<const double> scale_factors, std::size_t size_cap) {
    validate_observations(model, obs);
    if (scale_factors.size() != obs.size()) {
        throw DimensionError("chmm_backward: " + std::to_string(scale_factors.size()) +
                             " scale factors for a sequence of length " + std::to_string(obs.size()));
    }
    const ChmmTransitionKernel kernel(model, size_cap);
    return backward_pass(kernel, joint_emissions(model, kernel, obs), scale_factors);
}

double chmm_backward_log_likelihood(const ChmmModel& model, const MultiObsSequence& obs,
                                    const ChmmBackwardResult& beta,
                                    std::span<const double> scale_factors) {
    const MixedRadix joint(model.state_counts());
    std::vector<std::size_t> tuple(model.num_chains());
    double s = 0.0;
    for (std::size_t j = 0; j < joint.size(); ++j) {
        joint.decode(j, tuple);
        double p = beta.scaled_beta(0, j);
        for (std::size_t l = 0; l < tuple.size(); ++l) {
            p *= model.chains[l].pi[tuple[l]] * model.chains[l].emit(tuple[l], obs[0][l]);
        }
        s += p;
    }
    double log_l = std::log(s);
    for (std::size_t t = 1; t < scale_factors.size(); ++t) log_l += std::log(scale_factors[t]);
    return log_l;
}

double chmm_log_likelihood(const ChmmModel& model, const MultiObsSequence& obs,
                           std::size_t size_cap) {
    return chmm_forward(model, obs, size_cap).log_likelihood;
}

ChmmPosteriorResult chmm_smooth(const ChmmModel& model, const MultiObsSequence& obs,
                                std::size_t size_cap) {
    validate_observations(model, obs);
    const ChmmTransitionKernel kernel(model, size_cap);
    const Matrix emissions = joint_emissions(model, kernel, obs);
    const auto fwd = forward_pass(model, kernel, emissions);
    const auto bwd = backward_pass(kernel, emissions, fwd.scale_factors);

    ChmmPosteriorResult out;
    out.log_likelihood = fwd.log_likelihood;
    out.joint_gamma = joint_gamma(fwd, bwd);
    out.chain_gamma = chain_marginals(model, kernel, out.joint_gamma);
    return out;
}

namespace {

struct ChmmCounts {
    std::vector<std::vector<double>> initial;  // per chain
    std::vector<Matrix> emissions;             // per chain
    std::vector<Matrix> couplings;             // parallel to model.couplings
    std::vector<Matrix> transitions;           // per chain, parent configuration x N(l)
    double log_likelihood = 0.0;
};

ChmmCounts chmm_expected_counts(const ChmmModel& model, const ChmmTransitionKernel& kernel,
                                std::span<const MultiObsSequence> sequences) {
    const std::size_t L = model.num_chains();
    const std::size_t S = kernel.num_joint_states();
    const Matrix& K = kernel.kernel();

    ChmmCounts counts;
    for (const auto& c : model.chains) {
        counts.initial.emplace_back(c.num_states, 0.0);
        counts.emissions.emplace_back(c.num_states, c.num_symbols);
    }
    for (const auto& c : model.couplings) counts.couplings.emplace_back(c.matrix.rows(), c.matrix.cols());
    for (const auto& cpt : kernel.chain_cpt()) counts.transitions.emplace_back(cpt.rows(), cpt.cols());

    Matrix xi(S, S);
    for (std::size_t s = 0; s < sequences.size(); ++s) {
        const auto& obs = sequences[s];
        const Matrix emissions = joint_emissions(model, kernel, obs);
        ChmmForwardResult fwd;
        try {
            fwd = forward_pass(model, kernel, emissions);
        } catch (const ImpossibleObservationError& e) {
            throw ImpossibleObservationError(e.time(), s);
        }
        const auto bwd = backward_pass(kernel, emissions, fwd.scale_factors);
        const Matrix gamma = joint_gamma(fwd, bwd);
        counts.log_likelihood += fwd.log_likelihood;

        for (std::size_t j = 0; j < S; ++j) {
            const auto tuple = kernel.tuple(j);
            for (std::size_t l = 0; l < L; ++l) counts.initial[l][tuple[l]] += gamma(0, j);
        }
        for (std::size_t t = 0; t < obs.size(); ++t) {
            for (std::size_t j = 0; j < S; ++j) {
                const auto tuple = kernel.tuple(j);
                for (std::size_t l = 0; l < L; ++l) {
                    counts.emissions[l](tuple[l], obs[t][l]) += gamma(t, j);
                }
            }
        }

        for (std::size_t t = 0; t + 1 < obs.size(); ++t) {
            double total = 0.0;
            for (std::size_t i = 0; i < S; ++i) {
                const double a = fwd.scaled_alpha(t, i);
                for (std::size_t j = 0; j < S; ++j) {
                    const double v = a * K(i, j) * emissions(t + 1, j) * bwd.scaled_beta(t + 1, j);
                    xi(i, j) = v;
                    total += v;
                }
            }
            for (std::size_t i = 0; i < S; ++i) {
                const auto from = kernel.tuple(i);
                for (std::size_t j = 0; j < S; ++j) {
                    const double v = xi(i, j) / total;
                    if (v == 0.0) continue;
                    const auto to = kernel.tuple(j);
                    for (std::size_t k = 0; k < model.couplings.size(); ++k) {
                        const auto& c = model.couplings[k];
                        counts.couplings[k](from[c.from], to[c.to]) += v;
                    }
                    for (std::size_t l = 0; l < L; ++l) {
                        counts.transitions[l](kernel.parent_config(i, l), to[l]) += v;
                    }
                }
            }
        }
    }
    return counts;
}

constexpr std::size_t kMaxScalingSweeps = 500;
constexpr double kScalingTolerance = 1e-12;

// Generalized iterative scaling for the couplings feeding one chain.
//
// The conditional is log-linear: log q(j | r) = sum_k log a_k[r_k, j] - log Z(r),
// with one active indicator per parent, so every (r, j) carries exactly C
// features and the step is (target / expected)^(1/C). Each sweep does not
// decrease sum_{r,j} n(r, j) log q(j | r).
void fit_couplings(std::vector<Matrix*> mats, const std::vector<std::size_t>& radices,
                   const Matrix& n) {
    const std::size_t C = mats.size();
    const std::size_t R = n.rows();
    const std::size_t N = n.cols();
    const MixedRadix configs(radices);
    std::vector<std::size_t> digits(R * C);
    for (std::size_t r = 0; r < R; ++r) configs.decode(r, {digits.data() + r * C, C});

    std::vector<double> row_total(R, 0.0);
    for (std::size_t r = 0; r < R; ++r)
        for (double v : n.row(r)) row_total[r] += v;

    std::vector<Matrix> target, expected;
    for (std::size_t k = 0; k < C; ++k) {
        target.emplace_back(radices[k], N);
        expected.emplace_back(radices[k], N);
    }
    for (std::size_t r = 0; r < R; ++r)
        for (std::size_t k = 0; k < C; ++k)
            for (std::size_t j = 0; j < N; ++j) target[k](digits[r * C + k], j) += n(r, j);

    // Parent states that never occur carry no evidence.
    for (std::size_t k = 0; k < C; ++k) {
        for (std::size_t i = 0; i < radices[k]; ++i) {
            const auto row = target[k].row(i);
            double total = 0.0;
            for (double v : row) total += v;
            if (total > 0.0) continue;
            auto dst = mats[k]->row(i);
            std::fill(dst.begin(), dst.end(), 1.0 / static_cast<double>(N));
        }
    }

    const double step = 1.0 / static_cast<double>(C);
    std::vector<double> q(N);
    for (std::size_t sweep = 0; sweep < kMaxScalingSweeps; ++sweep) {
        for (auto& e : expected) std::fill(e.data().begin(), e.data().end(), 0.0);
        for (std::size_t r = 0; r < R; ++r) {
            if (row_total[r] == 0.0) continue;
            std::fill(q.begin(), q.end(), 1.0);
            for (std::size_t k = 0; k < C; ++k) {
                const auto src = mats[k]->row(digits[r * C + k]);
                for (std::size_t j = 0; j < N; ++j) q[j] *= src[j];
            }
            double z = 0.0;
            for (double v : q) z += v;
            if (z <= 0.0) continue;
            for (std::size_t k = 0; k < C; ++k) {
                auto e = expected[k].row(digits[r * C + k]);
                for (std::size_t j = 0; j < N; ++j) e[j] += row_total[r] * q[j] / z;
            }
        }

        double worst = 0.0;
        for (std::size_t k = 0; k < C; ++k) {
            auto& a = *mats[k];
            for (std::size_t i = 0; i < a.rows(); ++i) {
                for (std::size_t j = 0; j < N; ++j) {
                    const double want = target[k](i, j), have = expected[k](i, j);
                    if (a(i, j) == 0.0 || have == 0.0) continue;
                    if (want == 0.0) {
                        a(i, j) = 0.0;
                        worst = INFINITY;
                        continue;
                    }
                    const double f = std::pow(want / have, step);
                    a(i, j) *= f;
                    worst = std::max(worst, std::abs(std::log(f)));
                }
                auto row = a.row(i);
                double total = 0.0;
                for (double v : row) total += v;
                for (double& v : row) v /= total;
            }
        }
        if (worst < kScalingTolerance) break;
    }
}

ChmmModel chmm_maximize(const ChmmModel& model, const ChmmCounts& counts, double pseudocount,
                        ChmmCouplingUpdate update) {
    ChmmModel out = model;
    for (std::size_t l = 0; l < out.num_chains(); ++l) {
        auto& chain = out.chains[l];
        chain.pi = normalize_counts(counts.initial[l], pseudocount);
        for (std::size_t r = 0; r < chain.num_states; ++r) {
            const auto row = normalize_counts(counts.emissions[l].row(r), pseudocount);
            std::copy(row.begin(), row.end(), chain.emit.row(r).begin());
        }
    }

    const auto normalize_marginals = [&](std::size_t k) {
        auto& m = out.couplings[k].matrix;
        for (std::size_t r = 0; r < m.rows(); ++r) {
            const auto row = normalize_counts(counts.couplings[k].row(r), pseudocount);
            std::copy(row.begin(), row.end(), m.row(r).begin());
        }
    };

    for (std::size_t l = 0; l < out.num_chains(); ++l) {
        std::vector<std::size_t> index;
        for (const auto* c : model.incoming(l)) index.push_back(static_cast<std::size_t>(c - model.couplings.data()));
        if (update == ChmmCouplingUpdate::marginal_counts || index.size() == 1) {
            for (std::size_t k : index) normalize_marginals(k);
            continue;
        }
        Matrix n = counts.transitions[l];
        for (double& v : n.data()) v += pseudocount;
        std::vector<Matrix*> mats;
        std::vector<std::size_t> radices;
        for (std::size_t k : index) {
            mats.push_back(&out.couplings[k].matrix);
            radices.push_back(out.couplings[k].matrix.rows());
        }
        fit_couplings(mats, radices, n);
    }
    return out;
}

}  // namespace

ChmmEmResult chmm_em(const ChmmModel& init, std::span<const MultiObsSequence> sequences,
                     const EmConfig& config, ChmmCouplingUpdate update, std::size_t size_cap) {
    validate_chmm(init);
    if (sequences.empty()) throw DimensionError("chmm_em: no training sequences");
    if (config.max_iterations == 0) throw DimensionError("max_iterations must be positive");
    if (config.pseudocount < 0.0) throw DimensionError("pseudocount must be nonnegative");
    for (const auto& seq : sequences) validate_observations(init, seq);

    ChmmEmResult out{init, {}};
    for (std::size_t it = 0; it < config.max_iterations; ++it) {
        const ChmmTransitionKernel kernel(out.model, size_cap);
        const auto counts = chmm_expected_counts(out.model, kernel, sequences);
        out.model = chmm_maximize(out.model, counts, config.pseudocount, update);
        validate_chmm(out.model);
        out.trace.log_likelihoods.push_back(counts.log_likelihood);
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
