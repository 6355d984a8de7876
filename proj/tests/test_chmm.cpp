#include <doctest.h>

#include <cmath>

#include "dbn/chmm.hpp"
#include "dbn/errors.hpp"
#include "dbn/inference.hpp"
#include "dbn/learning.hpp"
#include "dbn/oracle.hpp"
#include "test_support.hpp"

using namespace dbn;
using dbn::test::max_abs_diff;
using dbn::test::max_row_sum_error;

namespace {

ChmmModel single_chain(const HmmModel& m) {
    ChmmModel c;
    c.chains.push_back({m.num_states, m.num_symbols, m.pi, m.emit});
    c.couplings.push_back({0, 0, m.trans});
    return c;
}

MultiObsSequence lift(const ObsSequence& obs) {
    MultiObsSequence out;
    for (std::size_t y : obs) out.push_back({y});
    return out;
}

HmmModel chain_as_hmm(const ChmmModel& c, std::size_t l) {
    const auto& ch = c.chains[l];
    return {ch.num_states, ch.num_symbols, ch.pi, c.incoming(l).front()->matrix, ch.emit};
}

ObsSequence column(const MultiObsSequence& obs, std::size_t l) {
    ObsSequence out;
    for (const auto& step : obs) out.push_back(step[l]);
    return out;
}

}  // namespace

TEST_SUITE("chmm reduction to one chain") {
    TEST_CASE("forward, backward and smoothing equal the HMM routines") {
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            Rng rng(seed);
            const auto m = random_hmm(3, 4, rng);
            const auto obs = sample(m, 12, rng()).obs;
            const auto c = single_chain(m);
            const auto mobs = lift(obs);

            const auto f = forward(m, obs);
            const auto cf = chmm_forward(c, mobs);
            CHECK(max_abs_diff(cf.scaled_alpha, f.scaled_alpha) < 1e-12);
            CHECK(max_abs_diff(cf.scale_factors, f.scale_factors) < 1e-12);
            CHECK(cf.log_likelihood == doctest::Approx(f.log_likelihood).epsilon(1e-13));

            const auto b = backward(m, obs, f.scale_factors);
            const auto cb = chmm_backward(c, mobs, cf.scale_factors);
            CHECK(max_abs_diff(cb.scaled_beta, b.scaled_beta) < 1e-12);

            const auto s = smooth(m, obs);
            const auto cs = chmm_smooth(c, mobs);
            CHECK(max_abs_diff(cs.joint_gamma, s.gamma) < 1e-12);
            CHECK(max_abs_diff(cs.chain_gamma[0], s.gamma) < 1e-12);
        }
    }

    TEST_CASE("EM matches Baum-Welch iterate for iterate") {
        Rng rng(5);
        const auto truth = random_hmm(3, 3, rng);
        const auto init = random_hmm(3, 3, rng);
        std::vector<ObsSequence> seqs;
        std::vector<MultiObsSequence> mseqs;
        for (int k = 0; k < 4; ++k) {
            seqs.push_back(sample(truth, 30, rng()).obs);
            mseqs.push_back(lift(seqs.back()));
        }
        const EmConfig cfg{25, 0.0, 0.0};
        const auto bw = baum_welch(init, seqs, cfg);
        const auto em = chmm_em(single_chain(init), mseqs, cfg);
        REQUIRE(bw.trace.log_likelihoods.size() == em.trace.log_likelihoods.size());
        for (std::size_t i = 0; i < bw.trace.log_likelihoods.size(); ++i) {
            CHECK(std::abs(bw.trace.log_likelihoods[i] - em.trace.log_likelihoods[i]) < 1e-10);
        }
        const auto back = chain_as_hmm(em.model, 0);
        CHECK(max_abs_diff(back.pi, bw.model.pi) < 1e-10);
        CHECK(max_abs_diff(back.trans, bw.model.trans) < 1e-10);
        CHECK(max_abs_diff(back.emit, bw.model.emit) < 1e-10);
    }
}

TEST_SUITE("chmm_forward") {
    TEST_CASE("uncoupled chains factorize") {
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            const auto c = test::seeded_chmm(seed, {2, 3}, {3, 2}, test::self_topology(2));
            const auto obs = sample(c, 15, seed + 1).obs;
            const double joint = chmm_log_likelihood(c, obs);
            const double split = log_likelihood(chain_as_hmm(c, 0), column(obs, 0)) +
                                 log_likelihood(chain_as_hmm(c, 1), column(obs, 1));
            CHECK(std::abs(joint - split) < 1e-10);
        }
    }

    TEST_CASE("neighbour-coupled pair equals flatten + forward") {
        const auto c = test::seeded_chmm(42, {2, 2}, {2, 2}, neighbor_topology(2));
        const auto obs = sample(c, 5, 7).obs;
        const auto flat = flatten_chmm(c);
        CHECK(std::abs(chmm_log_likelihood(c, obs) - log_likelihood(flat, flatten_observations(c, obs))) < 1e-12);
    }

    TEST_CASE("100 seeded CHMMs equal flatten + forward") {
        for (std::uint64_t seed = 0; seed < 100; ++seed) {
            Rng rng(seed);
            const std::size_t L = std::uniform_int_distribution<std::size_t>(1, 3)(rng);
            std::vector<std::size_t> states, symbols;
            for (std::size_t l = 0; l < L; ++l) {
                states.push_back(std::uniform_int_distribution<std::size_t>(1, 3)(rng));
                symbols.push_back(std::uniform_int_distribution<std::size_t>(1, 3)(rng));
            }
            const auto c = random_chmm(states, symbols, neighbor_topology(L), rng);
            const std::size_t T = std::uniform_int_distribution<std::size_t>(1, 5)(rng);
            const auto obs = sample(c, T, rng()).obs;
            const auto flat = flatten_chmm(c);
            const auto fobs = flatten_observations(c, obs);
            CHECK(std::abs(chmm_log_likelihood(c, obs) - log_likelihood(flat, fobs)) < 1e-12);
            CHECK(max_abs_diff(chmm_smooth(c, obs).joint_gamma, smooth(flat, fobs).gamma) < 1e-12);
        }
    }

    TEST_CASE("joint gamma matches enumeration on the flattened model") {
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            const auto c = test::seeded_chmm(seed + 900, {2, 3}, {2, 2}, neighbor_topology(2));
            const auto obs = sample(c, 4, seed).obs;
            const auto flat = flatten_chmm(c);
            const auto ref = oracle::enum_posterior(flat, flatten_observations(c, obs));
            CHECK(max_abs_diff(chmm_smooth(c, obs).joint_gamma, ref.gamma) < 1e-12);
        }
    }

    TEST_CASE("size cap is enforced") {
        const auto c = test::seeded_chmm(1, {3, 3, 3}, {2, 2, 2}, neighbor_topology(3));
        const auto obs = sample(c, 3, 1).obs;
        CHECK_THROWS_AS(chmm_forward(c, obs, 26), SizeCapError);
        CHECK_NOTHROW(chmm_forward(c, obs, 27));
    }

    TEST_CASE("impossible observation") {
        auto c = test::seeded_chmm(3, {2, 2}, {2, 2}, test::self_topology(2));
        c.chains[1].emit = Matrix{{1, 0}, {1, 0}};
        const MultiObsSequence obs{{0, 0}, {1, 1}};
        CHECK_THROWS_AS(chmm_forward(c, obs), ImpossibleObservationError);
    }
}

TEST_SUITE("chmm_backward") {
    TEST_CASE("last slice is ones and reconstruction matches forward") {
        for (std::uint64_t seed = 0; seed < 30; ++seed) {
            const auto c = test::seeded_chmm(seed, {2, 3, 2}, {2, 2, 3}, neighbor_topology(3));
            const auto obs = sample(c, 10, seed + 3).obs;
            const auto f = chmm_forward(c, obs);
            const auto b = chmm_backward(c, obs, f.scale_factors);
            for (double v : b.scaled_beta.row(obs.size() - 1)) CHECK(v == 1.0);
            CHECK(std::abs(chmm_backward_log_likelihood(c, obs, b, f.scale_factors) - f.log_likelihood) < 1e-10);
        }
    }
}

TEST_SUITE("chmm_smooth") {
    TEST_CASE("chain marginals are normalized and consistent with the joint") {
        const auto c = test::seeded_chmm(8, {2, 3, 2}, {3, 2, 2}, neighbor_topology(3));
        const auto obs = sample(c, 12, 4).obs;
        const auto post = chmm_smooth(c, obs);
        CHECK(max_row_sum_error(post.joint_gamma) < 1e-9);
        REQUIRE(post.chain_gamma.size() == 3);
        const MixedRadix joint(c.state_counts());
        for (std::size_t l = 0; l < 3; ++l) {
            CHECK(max_row_sum_error(post.chain_gamma[l]) < 1e-9);
            for (std::size_t t = 0; t < obs.size(); ++t) {
                std::vector<double> sums(c.chains[l].num_states, 0.0);
                for (std::size_t s = 0; s < joint.size(); ++s) sums[joint.decode(s)[l]] += post.joint_gamma(t, s);
                CHECK(max_abs_diff(sums, post.chain_gamma[l].row(t)) < 1e-12);
            }
        }
    }
}

TEST_SUITE("chmm_em") {
    TEST_CASE("deterministic model generating its own data is a fixed point") {
        // Chain 0 stays in state 0 and chain 1 in state 1; rows never visited
        // are already uniform, which is what the M-step assigns them.
        ChmmModel c;
        c.chains.push_back({2, 2, {1, 0}, {{1, 0}, {0.5, 0.5}}});
        c.chains.push_back({2, 2, {0, 1}, {{0.5, 0.5}, {0, 1}}});
        c.couplings.push_back({0, 0, {{1, 0}, {0.5, 0.5}}});
        c.couplings.push_back({1, 1, {{0.5, 0.5}, {0, 1}}});
        const std::vector<MultiObsSequence> seqs{sample(c, 6, 1).obs};
        const auto r = chmm_em(c, seqs, {1, 0.0, 0.0});
        for (std::size_t l = 0; l < 2; ++l) {
            CHECK(max_abs_diff(r.model.chains[l].pi, c.chains[l].pi) < 1e-12);
            CHECK(max_abs_diff(r.model.chains[l].emit, c.chains[l].emit) < 1e-12);
            CHECK(max_abs_diff(r.model.couplings[l].matrix, c.couplings[l].matrix) < 1e-12);
        }
        CHECK(std::abs(chmm_log_likelihood(r.model, seqs[0])) < 1e-12);
    }

    TEST_CASE("two-chain traces are non-decreasing") {
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            const auto truth = test::seeded_chmm(seed, {2, 2}, {3, 3}, neighbor_topology(2));
            const auto init = test::seeded_chmm(seed + 1000, {2, 2}, {3, 3}, neighbor_topology(2));
            std::vector<MultiObsSequence> seqs;
            for (std::uint64_t k = 0; k < 5; ++k) seqs.push_back(sample(truth, 40, seed * 10 + k).obs);
            const auto r = chmm_em(init, seqs, {100, 1e-8, 0.0});
            const auto& ll = r.trace.log_likelihoods;
            for (std::size_t i = 1; i < ll.size(); ++i) CHECK(ll[i] >= ll[i - 1] - 1e-6);
            CHECK_NOTHROW(validate_chmm(r.model));
        }
    }

    TEST_CASE("plain marginal-count couplings can lower the likelihood") {
        std::size_t drops = 0;
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            const auto truth = test::seeded_chmm(seed, {2, 2}, {3, 3}, neighbor_topology(2));
            const auto init = test::seeded_chmm(seed + 1000, {2, 2}, {3, 3}, neighbor_topology(2));
            std::vector<MultiObsSequence> seqs;
            for (std::uint64_t k = 0; k < 5; ++k) seqs.push_back(sample(truth, 40, seed * 10 + k).obs);
            const auto r = chmm_em(init, seqs, {30, 0.0, 0.0}, ChmmCouplingUpdate::marginal_counts);
            const auto& ll = r.trace.log_likelihoods;
            for (std::size_t i = 1; i < ll.size(); ++i) drops += ll[i] < ll[i - 1] - 1e-6;
        }
        CHECK(drops > 0);
    }

    TEST_CASE("both coupling updates agree when every chain has one parent") {
        const auto truth = test::seeded_chmm(4, {2, 3}, {2, 2}, test::self_topology(2));
        const auto init = test::seeded_chmm(5, {2, 3}, {2, 2}, test::self_topology(2));
        const std::vector<MultiObsSequence> seqs{sample(truth, 50, 1).obs, sample(truth, 50, 2).obs};
        const auto a = chmm_em(init, seqs, {10, 0.0, 0.0}, ChmmCouplingUpdate::moment_matching);
        const auto b = chmm_em(init, seqs, {10, 0.0, 0.0}, ChmmCouplingUpdate::marginal_counts);
        CHECK(a.model == b.model);
    }

    TEST_CASE("empty input is rejected") {
        const auto c = test::seeded_chmm(2, {2}, {2}, test::self_topology(1));
        const std::vector<MultiObsSequence> none;
        CHECK_THROWS_AS(chmm_em(c, none), DimensionError);
    }
}
