#pragma once

#include <cstddef>
#include <cstdint>

namespace dbn {

/// Maximum deviations between the recursive algorithms and brute-force
/// enumeration over seeded random small instances.
struct EquivalenceReport {
    std::size_t hmm_instances = 0;
    std::size_t chmm_instances = 0;
    std::size_t tied_instances = 0;     // skipped for the path comparison
    std::size_t path_mismatches = 0;
    double likelihood_dev = 0.0;        // |forward - enumeration|, probability scale
    double gamma_dev = 0.0;
    double xi_dev = 0.0;
    double viterbi_score_rel_dev = 0.0;
    double backward_dev = 0.0;          // |forward - backward| log-likelihood
    double chmm_likelihood_dev = 0.0;   // |chmm - flattened| log-likelihood
    double chmm_gamma_dev = 0.0;

    static constexpr double kTolerance = 1e-12;
    static constexpr double kBackwardTolerance = 1e-10;

    bool ok() const;
};

/// HMMs with N, M in 1..3 and T in 1..6; CHMMs with L in 1..3, N^(l) in
/// 1..3 and T in 1..5. Instance k uses seed + k.
EquivalenceReport run_equivalence_suite(std::uint64_t seed, std::size_t count);

}  // namespace dbn
