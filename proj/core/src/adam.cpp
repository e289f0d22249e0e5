#include "sysid/adam.hpp"

#include <cmath>

namespace sysid {

void adam_update(AdamState& s, Vector& params, const Vector& grads) {
    if (params.size() != grads.size() || s.m.size() != params.size() || s.v.size() != params.size()) {
        throw Error("adam: parameter, gradient and moment lengths differ");
    }
    for (Eigen::Index i = 0; i < grads.size(); ++i) {
        if (!std::isfinite(grads[i])) throw NumericalError("adam: non-finite gradient", static_cast<std::size_t>(i));
    }
    s.t += 1;
    s.m = s.beta1 * s.m + (1.0 - s.beta1) * grads;
    s.v = s.beta2 * s.v + (1.0 - s.beta2) * grads.cwiseAbs2();
    const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.t));
    const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.t));
    params.array() -= s.lr * (s.m.array() / c1) / ((s.v.array() / c2).sqrt() + s.eps);
}

AdamStep adam_step(const AdamState& state, const Vector& params, const Vector& grads) {
    AdamStep out{params, state};
    adam_update(out.state, out.params, grads);
    return out;
}

}  // namespace sysid
