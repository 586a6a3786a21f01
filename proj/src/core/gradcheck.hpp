#pragma once

#include <functional>
#include <string>
#include <vector>

#include "tensor.hpp"

namespace timebridge {

struct FiniteDiffReport {
    double max_rel_err = 0.0;
    std::string worst_param;
    std::int64_t worst_index = -1;
    double analytic = 0.0;
    double numeric = 0.0;
    std::int64_t coords_checked = 0;
};

// Central-difference verification of tape gradients.
//
// `objective` re-evaluates the scalar objective at the current contents of
// the referenced parameter tensors; `analytic[i]` holds the tape gradient for
// `params[i]`. Each coordinate is perturbed by +/-eps in place and restored.
// The relative error uses max(|analytic|, |numeric|, 1e-8) as denominator.
//
// The comparison is only meaningful away from non-differentiable points;
// callers are expected to arrange inputs so no |.| tie or kink sits within
// eps of the evaluation point.
FiniteDiffReport finite_diff_check(
    const std::function<double()>& objective,
    const std::vector<std::pair<std::string, Tensor*>>& params,
    const std::vector<Tensor>& analytic, double eps);

}  // namespace timebridge
