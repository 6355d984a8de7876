#include "dbn/decoding.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dbn/errors.hpp"

namespace dbn {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double safe_log(double p) { return p > 0.0 ? std::log(p) : kNegInf; }

Matrix log_matrix(const Matrix& m) {
    Matrix out(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.data().size(); ++i) out.data()[i] = safe_log(m.data()[i]);
    return out;
}

}  // namespace

OnlineViterbi::OnlineViterbi(const HmmModel& model)
    : num_states_(model.num_states),
      num_symbols_(model.num_symbols),
      log_trans_(log_matrix(model.trans)),
      log_emit_(log_matrix(model.emit)) {
    validate_hmm(model);
    log_pi_.reserve(num_states_);
    for (double p : model.pi) log_pi_.push_back(safe_log(p));
}

void OnlineViterbi::push(std::size_t symbol) {
    if (symbol >= num_symbols_) {
        throw ObservationError("symbol " + std::to_string(symbol) + " at t=" +
                               std::to_string(length_) + " outside alphabet of size " +
                               std::to_string(num_symbols_));
    }
    const std::size_t N = num_states_;
    std::vector<double> next(N);
    std::vector<std::size_t> psi;

    if (length_ == 0) {
        for (std::size_t j = 0; j < N; ++j) next[j] = log_pi_[j] + log_emit_(j, symbol);
    } else {
        psi.resize(N);
        for (std::size_t j = 0; j < N; ++j) {
            double best = kNegInf;
            std::size_t arg = 0;
            for (std::size_t i = 0; i < N; ++i) {
                const double score = delta_[i] + log_trans_(i, j);
                if (score > best) {
                    best = score;
                    arg = i;
                }
            }
            next[j] = best + log_emit_(j, symbol);
            psi[j] = arg;
        }
    }

    if (std::all_of(next.begin(), next.end(), [](double v) { return v == kNegInf; })) {
        throw ImpossibleObservationError(length_);
    }
    delta_ = std::move(next);
    backpointers_.insert(backpointers_.end(), psi.begin(), psi.end());
    ++length_;
}

DecodeResult OnlineViterbi::decode() const {
    DecodeResult out;
    if (length_ == 0) return out;
    const std::size_t N = num_states_;

    std::size_t state = 0;
    for (std::size_t i = 1; i < N; ++i) {
        if (delta_[i] > delta_[state]) state = i;
    }
    out.log_joint_score = delta_[state];
    out.path.resize(length_);
    out.path[length_ - 1] = state;
    for (std::size_t t = length_ - 1; t > 0; --t) {
        state = backpointers_[(t - 1) * N + state];
        out.path[t - 1] = state;
    }
    return out;
}

DecodeResult viterbi(const HmmModel& model, std::span<const std::size_t> obs) {
    validate_observations(model, obs);
    OnlineViterbi lattice(model);
    for (std::size_t y : obs) lattice.push(y);
    return lattice.decode();
}

DecodeResult truncated_viterbi(const HmmModel& model, std::span<const std::size_t> obs_prefix) {
    return viterbi(model, obs_prefix);
}

}  // namespace dbn
