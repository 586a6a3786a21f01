#include "gradcheck.hpp"

#include <cmath>

#include "error.hpp"

namespace timebridge {

FiniteDiffReport finite_diff_check(
    const std::function<double()>& objective,
    const std::vector<std::pair<std::string, Tensor*>>& params,
    const std::vector<Tensor>& analytic, double eps) {
    if (eps <= 0.0) throw config_error("finite_diff_check: eps must be > 0");
    if (params.size() != analytic.size()) {
        throw contract_error("finite_diff_check: analytic gradient count " +
                             std::to_string(analytic.size()) + " does not match parameter count " +
                             std::to_string(params.size()));
    }
    FiniteDiffReport report;
    for (std::size_t p = 0; p < params.size(); ++p) {
        Tensor& t = *params[p].second;
        if (t.numel() != analytic[p].numel()) {
            throw dimension_error("finite_diff_check: gradient shape mismatch for parameter " +
                                  params[p].first);
        }
        for (std::int64_t i = 0; i < t.numel(); ++i) {
            const double saved = t.at(i);
            t.at(i) = saved + eps;
            const double f_plus = objective();
            t.at(i) = saved - eps;
            const double f_minus = objective();
            t.at(i) = saved;
            const double numeric = (f_plus - f_minus) / (2.0 * eps);
            const double a = analytic[p].at(i);
            const double denom = std::max({std::fabs(a), std::fabs(numeric), 1e-8});
            const double rel = std::fabs(a - numeric) / denom;
            ++report.coords_checked;
            if (rel > report.max_rel_err) {
                report.max_rel_err = rel;
                report.worst_param = params[p].first;
                report.worst_index = i;
                report.analytic = a;
                report.numeric = numeric;
            }
        }
    }
    return report;
}

}  // namespace timebridge
