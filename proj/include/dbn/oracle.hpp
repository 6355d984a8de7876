#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "dbn/decoding.hpp"
#include "dbn/matrix.hpp"
#include "dbn/model.hpp"

// Brute-force references computed by enumerating every hidden path in plain
// probability space. They share nothing with the scaled recursions and are
// only meant for small instances.
namespace dbn::oracle {

/// Guard on the number of enumerated paths, N^T.
inline constexpr std::size_t kMaxPaths = 1'000'000;

/// P(x_1..T, y_1..T) for one path.
double path_probability(const HmmModel& model, std::span<const std::size_t> states,
                        std::span<const std::size_t> obs);

/// Calls `visit(path)` for every state path of length `length` in
/// lexicographic order. Throws InstanceTooLargeError above kMaxPaths.
void for_each_path(std::size_t num_states, std::size_t length,
                   const std::function<void(std::span<const std::size_t>)>& visit);

/// P(y_1..T) as a sum over all N^T paths.
double enum_likelihood(const HmmModel& model, std::span<const std::size_t> obs);

struct EnumPosterior {
    Matrix gamma;
    std::vector<Matrix> xi;  // xi[t](i, j) = P(x_t = i, x_{t+1} = j | y)
};

EnumPosterior enum_posterior(const HmmModel& model, std::span<const std::size_t> obs);

/// Exhaustive argmax; ties resolve to the lexicographically smallest path.
DecodeResult enum_map_path(const HmmModel& model, std::span<const std::size_t> obs);

/// P(x_{T+1} | y_1..T) by enumerating paths of length T + 1 whose last step
/// carries no observation.
Distribution enum_predict_state(const HmmModel& model, std::span<const std::size_t> obs);

}  // namespace dbn::oracle
