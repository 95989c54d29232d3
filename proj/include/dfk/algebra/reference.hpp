#pragma once

#include <dfk/algebra/plan.hpp>
#include <dfk/core/dataframe.hpp>

namespace dfk::algebra {

struct ReferenceOptions {
    /// Applies to every union, in addition to per-node strictness.
    bool strict_union = false;
};

/// Straightforward single-threaded evaluation of a plan, node by node, with
/// the operator kernels in ops.hpp. Used as the oracle for the engine.
auto evaluate(const PlanRef& plan, const ReferenceOptions& opts = {}) -> Dataframe;

}  // namespace dfk::algebra
