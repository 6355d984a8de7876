#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dbn/matrix.hpp"
#include "dbn/model.hpp"

namespace dbn {

struct DecodeResult {
    StatePath path;
    double log_joint_score = 0.0;  // log P(path, observations)
};

/// Log-space Viterbi lattice that accepts observations one at a time and
/// can be decoded after any prefix. Ties go to the smallest state index.
class OnlineViterbi {
public:
    explicit OnlineViterbi(const HmmModel& model);

    /// Extends the lattice by one step. Throws ImpossibleObservationError
    /// when no state can explain the prefix, leaving the lattice unchanged.
    void push(std::size_t symbol);

    std::size_t length() const noexcept { return length_; }

    /// Best path for the observations pushed so far.
    DecodeResult decode() const;

private:
    std::size_t num_states_;
    std::size_t num_symbols_;
    std::vector<double> log_pi_;
    Matrix log_trans_;
    Matrix log_emit_;

    std::size_t length_ = 0;
    std::vector<double> delta_;
    std::vector<std::size_t> backpointers_;  // (length - 1) x N, psi for steps 2..length
};

DecodeResult viterbi(const HmmModel& model, std::span<const std::size_t> obs);

/// Decode-so-far over an incomplete observation prefix.
DecodeResult truncated_viterbi(const HmmModel& model, std::span<const std::size_t> obs_prefix);

}  // namespace dbn
