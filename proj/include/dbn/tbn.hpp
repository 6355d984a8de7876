#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "dbn/matrix.hpp"
#include "dbn/model.hpp"

namespace dbn {

/// Parent reference inside the two-slice template. slice 0 is t-1, slice 1 is t.
struct TbnParent {
    int slice = 1;
    std::size_t var = 0;

    friend bool operator==(const TbnParent&, const TbnParent&) = default;
};

/// One template variable. CPT rows enumerate parent configurations in
/// row-major order over the listed parents; columns are this variable's values.
struct TbnVariable {
    std::size_t card = 0;
    bool observed = false;
    std::vector<std::size_t> init_parents;  // slice-1 variables of the initial network
    Matrix init_cpt;
    std::vector<TbnParent> trans_parents;
    Matrix trans_cpt;

    friend bool operator==(const TbnVariable&, const TbnVariable&) = default;
};

/// Two-slice temporal Bayes net: initial network plus transition template.
///
/// Hidden variables form the joint state. Observed variables form the joint
/// symbol and must depend only on slice-t variables, so the template unrolls
/// to a time-invariant HMM. An observed variable's initial CPT, when given,
/// has to coincide with its transition CPT.
struct Tbn2Model {
    std::vector<TbnVariable> vars;

    std::vector<std::size_t> hidden_vars() const;
    std::vector<std::size_t> observed_vars() const;

    friend bool operator==(const Tbn2Model&, const Tbn2Model&) = default;
};

void validate_tbn(const Tbn2Model& model);

/// Topological order of the slice-t dependency graph; throws CycleError.
std::vector<std::size_t> transition_order(const Tbn2Model& model);

/// Joint-state chain of the template. Joint states are row-major over the
/// hidden variables, joint symbols row-major over the observed variables.
/// Without observed variables the HMM has a single symbol emitted with
/// probability one.
HmmModel unroll_tbn(const Tbn2Model& model, std::size_t size_cap = kDefaultSizeCap);

}  // namespace dbn
