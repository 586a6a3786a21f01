#include "loss.hpp"

#include "error.hpp"

namespace timebridge {

namespace {

void check_pair(Tape& t, Var pred, Var target, const char* who) {
    if (!t.value(pred).same_shape(t.value(target))) {
        throw dimension_error(std::string(who) + ": shape mismatch " +
                              shape_str(t.value(pred).shape()) + " vs " +
                              shape_str(t.value(target).shape()));
    }
}

}  // namespace

Var mae_time(Tape& t, Var pred, Var target) {
    check_pair(t, pred, target, "mae_time");
    return t.mean_all(t.abs(t.sub(pred, target)));
}

Var mae_freq(Tape& t, Var pred, Var target, double eps) {
    check_pair(t, pred, target, "mae_freq");
    const int axis = static_cast<int>(t.value(pred).ndim()) - 1;
    Var re = t.sub(t.dft_real_part(pred, axis), t.dft_real_part(target, axis));
    Var im = t.sub(t.dft_imag_part(pred, axis), t.dft_imag_part(target, axis));
    return t.mean_all(t.complex_modulus(re, im, eps));
}

Var hybrid_loss(Tape& t, Var pred, Var target, double alpha, double eps) {
    if (alpha < 0.0 || alpha > 1.0) {
        throw config_error("hybrid_loss: alpha must lie in [0, 1], got " + std::to_string(alpha));
    }
    Var lt = mae_time(t, pred, target);
    Var lf = mae_freq(t, pred, target, eps);
    return t.add(t.scale(lt, 1.0 - alpha), t.scale(lf, alpha));
}

}  // namespace timebridge
