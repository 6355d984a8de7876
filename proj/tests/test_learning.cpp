#include <doctest.h>

#include <cmath>
#include <string>

#include "dbn/errors.hpp"
#include "dbn/inference.hpp"
#include "dbn/learning.hpp"
#include "test_support.hpp"

using namespace dbn;
using dbn::test::max_abs_diff;

TEST_SUITE("mle_complete") {
    TEST_CASE("transition counts from a single path") {
        // 0->0, 0->1, 1->0: row 0 is [1/2, 1/2], row 1 is [1, 0].
        const std::vector<LabeledSequence> data{{{0, 0, 1, 0}, {0, 1, 1, 0}}};
        const auto m = mle_complete(data, 2, 2);
        CHECK(m.pi == Distribution{1.0, 0.0});
        CHECK(m.trans(0, 0) == doctest::Approx(0.5));
        CHECK(m.trans(0, 1) == doctest::Approx(0.5));
        CHECK(m.trans(1, 0) == doctest::Approx(1.0));
        CHECK(m.trans(1, 1) == doctest::Approx(0.0));
        // State 0 emitted 0, 1, 0; state 1 emitted 1.
        CHECK(m.emit(0, 0) == doctest::Approx(2.0 / 3));
        CHECK(m.emit(1, 1) == doctest::Approx(1.0));
    }

    TEST_CASE("pseudocount makes an unvisited row uniform") {
        const std::vector<LabeledSequence> data{{{0, 0, 0}, {1, 1, 0}}};
        const auto m = mle_complete(data, 3, 2, 1.0);
        for (std::size_t j = 0; j < 3; ++j) {
            CHECK(m.trans(2, j) == doctest::Approx(1.0 / 3));
            CHECK(m.trans(1, j) == doctest::Approx(1.0 / 3));
        }
        CHECK(m.trans(0, 0) == doctest::Approx(3.0 / 5));
        CHECK_NOTHROW(validate_hmm(m));
    }

    TEST_CASE("zero pseudocount leaves unvisited rows uniform and valid") {
        const std::vector<LabeledSequence> data{{{0, 0}, {1, 1}}};
        const auto m = mle_complete(data, 2, 2);
        CHECK(m.trans(1, 0) == 0.5);
        CHECK(m.emit(1, 1) == 0.5);
        CHECK_NOTHROW(validate_hmm(m));
    }

    TEST_CASE("estimates are exact empirical frequencies") {
        const auto truth = test::example_model();
        const auto s = sample(truth, 500, 17);
        const std::vector<LabeledSequence> data{{s.states, s.obs}};
        const auto m = mle_complete(data, 2, 2);
        Matrix counts(2, 2, 0.0);
        for (std::size_t t = 0; t + 1 < s.states.size(); ++t) counts(s.states[t], s.states[t + 1]) += 1.0;
        for (std::size_t i = 0; i < 2; ++i) {
            const double row = counts(i, 0) + counts(i, 1);
            for (std::size_t j = 0; j < 2; ++j) CHECK(m.trans(i, j) == doctest::Approx(counts(i, j) / row).epsilon(1e-15));
        }
    }

    TEST_CASE("recovers a 3-state model from 1e4 steps") {
        // Symmetric dynamics: every state is visited about a third of the time.
        HmmModel truth{3, 3, {0.5, 0.3, 0.2}, {{0.8, 0.1, 0.1}, {0.1, 0.8, 0.1}, {0.1, 0.1, 0.8}},
                       {{0.8, 0.1, 0.1}, {0.1, 0.8, 0.1}, {0.1, 0.1, 0.8}}};
        const auto s = sample(truth, 10'000, 2024);
        const std::vector<LabeledSequence> data{{s.states, s.obs}};
        const auto m = mle_complete(data, 3, 3);
        CHECK(max_abs_diff(m.trans, truth.trans) < 0.02);
        CHECK(max_abs_diff(m.emit, truth.emit) < 0.02);
    }

    TEST_CASE("mismatched lengths are rejected") {
        const std::vector<LabeledSequence> data{{{0, 1}, {0}}};
        CHECK_THROWS_AS(mle_complete(data, 2, 2), DimensionError);
    }
}

TEST_SUITE("baum_welch") {
    TEST_CASE("normalize_counts") {
        const std::vector<double> c{1.0, 3.0};
        CHECK(normalize_counts(c, 0.0) == Distribution{0.25, 0.75});
        CHECK(normalize_counts(c, 1.0) == Distribution{2.0 / 6, 4.0 / 6});
        const std::vector<double> z{0.0, 0.0, 0.0, 0.0};
        CHECK(normalize_counts(z, 0.0) == Distribution{0.25, 0.25, 0.25, 0.25});
    }

    TEST_CASE("convergence test is relative") {
        CHECK(em_converged(-1000.0, -1000.0005, 1e-6));
        CHECK_FALSE(em_converged(-1000.0, -1000.01, 1e-6));
        CHECK(em_converged(0.0, 5e-7, 1e-6));
    }

    TEST_CASE("single state learns the empirical symbol frequencies in one step") {
        const std::vector<ObsSequence> seqs{{0, 1, 1, 2}, {2, 2, 0}};
        const auto r = baum_welch(test::single_state_model({0.2, 0.3, 0.5}), seqs);
        CHECK(r.model.emit(0, 0) == doctest::Approx(2.0 / 7));
        CHECK(r.model.emit(0, 1) == doctest::Approx(2.0 / 7));
        CHECK(r.model.emit(0, 2) == doctest::Approx(3.0 / 7));
        CHECK(r.trace.converged);
    }

    TEST_CASE("a fixed point of the update is left unchanged") {
        const std::vector<ObsSequence> seqs{{0, 1, 1, 2}, {2, 2, 0}};
        const auto first = baum_welch(test::single_state_model({0.2, 0.3, 0.5}), seqs);
        const auto again = baum_welch(first.model, seqs, {1, 1e-6, 0.0});
        CHECK(max_abs_diff(again.model.emit, first.model.emit) < 1e-14);
        CHECK(max_abs_diff(again.model.trans, first.model.trans) < 1e-14);
    }

    TEST_CASE("identity emissions: one iteration equals the complete-data estimate") {
        HmmModel init{3, 3, {0.2, 0.5, 0.3}, {{0.5, 0.25, 0.25}, {0.1, 0.6, 0.3}, {0.3, 0.3, 0.4}},
                      {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
        const std::vector<ObsSequence> seqs{{0, 1, 1, 2, 0, 0, 2}, {1, 2, 2, 0}};
        const auto r = baum_welch(init, seqs, {1, 0.0, 0.0});
        std::vector<LabeledSequence> labeled;
        for (const auto& s : seqs) labeled.push_back({s, s});
        const auto ref = mle_complete(labeled, 3, 3);
        CHECK(max_abs_diff(r.model.pi, ref.pi) < 1e-9);
        CHECK(max_abs_diff(r.model.trans, ref.trans) < 1e-9);
        CHECK(max_abs_diff(r.model.emit, ref.emit) < 1e-9);
    }

    TEST_CASE("log-likelihood is non-decreasing on 50 seeds") {
        for (std::uint64_t seed = 0; seed < 50; ++seed) {
            Rng rng(seed);
            const auto truth = random_hmm(3, 3, rng);
            std::vector<ObsSequence> seqs;
            for (int k = 0; k < 5; ++k) seqs.push_back(sample(truth, 40, rng()).obs);
            const auto init = random_hmm(3, 3, rng);
            const auto r = baum_welch(init, seqs, {100, 1e-8, 0.0});
            const auto& ll = r.trace.log_likelihoods;
            REQUIRE(!ll.empty());
            CHECK(ll.front() == doctest::Approx(log_likelihood(init, seqs[0]) + log_likelihood(init, seqs[1]) +
                                                log_likelihood(init, seqs[2]) + log_likelihood(init, seqs[3]) +
                                                log_likelihood(init, seqs[4])));
            for (std::size_t i = 1; i < ll.size(); ++i) CHECK(ll[i] >= ll[i - 1] - 1e-9);
            CHECK(r.trace.iterations_run == ll.size());
        }
    }

    TEST_CASE("iteration cap is honoured") {
        Rng rng(3);
        const auto truth = random_hmm(3, 2, rng);
        const std::vector<ObsSequence> seqs{sample(truth, 100, 1).obs};
        const auto r = baum_welch(random_hmm(3, 2, rng), seqs, {4, 0.0, 0.0});
        CHECK(r.trace.iterations_run == 4);
        CHECK_FALSE(r.trace.converged);
    }

    TEST_CASE("impossible observation names the sequence") {
        HmmModel m{2, 2, {1, 0}, {{1, 0}, {0, 1}}, {{1, 0}, {0, 1}}};
        const std::vector<ObsSequence> seqs{{0, 0}, {0, 0, 0}, {0, 1}};
        try {
            baum_welch(m, seqs);
            FAIL("expected ImpossibleObservationError");
        } catch (const ImpossibleObservationError& e) {
            CHECK(e.sequence() == 2);
            CHECK(e.time() == 1);
            CHECK(std::string(e.what()).find("sequence 2") != std::string::npos);
        }
    }

    TEST_CASE("empty input is rejected") {
        const std::vector<ObsSequence> none;
        CHECK_THROWS_AS(baum_welch(test::example_model(), none), DimensionError);
    }
}
