#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dbn/learning.hpp"
#include "dbn/matrix.hpp"
#include "dbn/model.hpp"

namespace dbn {

/// Joint-state forward tables for a coupled HMM. Columns index joint states
/// (j_0, ..., j_{L-1}) row-major with chain 0 slowest, matching flatten_chmm.
struct ChmmForwardResult {
    Matrix scaled_alpha;
    std::vector<double> scale_factors;
    double log_likelihood = 0.0;
};

struct ChmmBackwardResult {
    Matrix scaled_beta;
};

struct ChmmPosteriorResult {
    Matrix joint_gamma;              // T x prod N^(l)
    std::vector<Matrix> chain_gamma; // per chain, T x N^(l)
    double log_likelihood = 0.0;
};

/// Per-chain transition tables and the joint kernel built from them.
///
/// For chain l, `chain_cpt[l]` has one row per configuration of Pa(l)
/// (row-major in ascending parent order) holding the normalized product of
/// the incoming coupling rows. `kernel(i, j)` is the product over chains of
/// the entries selected by joint states i and j.
class ChmmTransitionKernel {
public:
    ChmmTransitionKernel(const ChmmModel& model, std::size_t size_cap);

    std::size_t num_joint_states() const noexcept { return joint_.size(); }
    const MixedRadix& joint() const noexcept { return joint_; }
    const Matrix& kernel() const noexcept { return kernel_; }
    const std::vector<Matrix>& chain_cpt() const noexcept { return chain_cpt_; }

    /// Decoded tuple of joint state `s`.
    std::span<const std::size_t> tuple(std::size_t s) const {
        return {tuples_.data() + s * joint_.digits(), joint_.digits()};
    }

    /// Row of chain_cpt()[l] selected by joint state `s` at t-1.
    std::size_t parent_config(std::size_t s, std::size_t l) const {
        return configs_[s * joint_.digits() + l];
    }

private:
    MixedRadix joint_;
    std::vector<std::size_t> tuples_;
    std::vector<std::size_t> configs_;
    std::vector<Matrix> chain_cpt_;
    Matrix kernel_;
};

ChmmForwardResult chmm_forward(const ChmmModel& model, const MultiObsSequence& obs,
                               std::size_t size_cap = kDefaultSizeCap);

ChmmBackwardResult chmm_backward(const ChmmModel& model, const MultiObsSequence& obs,
                                 std::span<const double> scale_factors,
                                 std::size_t size_cap = kDefaultSizeCap);

/// Log-likelihood reconstructed from the t = 1 backward slice.
double chmm_backward_log_likelihood(const ChmmModel& model, const MultiObsSequence& obs,
                                    const ChmmBackwardResult& beta,
                                    std::span<const double> scale_factors);

/// log P(O | model), the log of the sum of the final joint forward slice.
double chmm_log_likelihood(const ChmmModel& model, const MultiObsSequence& obs,
                           std::size_t size_cap = kDefaultSizeCap);

ChmmPosteriorResult chmm_smooth(const ChmmModel& model, const MultiObsSequence& obs,
                                std::size_t size_cap = kDefaultSizeCap);

struct ChmmEmResult {
    ChmmModel model;
    EmTrace trace;
};

/// How chmm_em re-estimates the coupling matrices.
enum class ChmmCouplingUpdate {
    /// Fit the normalized product of couplings to the expected transition
    /// counts by iterative scaling. At the fit, the model's expected
    /// pairwise counts for every (source at t-1, target at t) equal the
    /// observed ones. Never decreases the expected complete-data
    /// log-likelihood, so the EM trace is nondecreasing.
    moment_matching,
    /// Set each coupling to its row-normalized pairwise counts. Equal to the
    /// above for single-parent chains; with several parents the product
    /// over-counts shared evidence and the likelihood can drop.
    marginal_counts,
};

/// EM for coupled HMMs. pi and emissions get the exact closed-form update;
/// couplings follow `update`.
ChmmEmResult chmm_em(const ChmmModel& init, std::span<const MultiObsSequence> sequences,
                     const EmConfig& config = {},
                     ChmmCouplingUpdate update = ChmmCouplingUpdate::moment_matching,
                     std::size_t size_cap = kDefaultSizeCap);

}  // namespace dbn
