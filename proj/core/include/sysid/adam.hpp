#pragma once

#include "sysid/common.hpp"

namespace sysid {

/// Optimizer state for bias-corrected ADAM.
struct AdamState {
    Vector m;
    Vector v;
    long t = 0;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    static AdamState zeros(Eigen::Index n, double lr) {
        AdamState s;
        s.m = Vector::Zero(n);
        s.v = Vector::Zero(n);
        s.lr = lr;
        return s;
    }
};

struct AdamStep {
    Vector params;
    AdamState state;
};

/// One ADAM update. Pure: the input state is left untouched.
/// Throws NumericalError at the first non-finite gradient entry.
AdamStep adam_step(const AdamState& state, const Vector& params, const Vector& grads);

/// In-place variant for training loops.
void adam_update(AdamState& state, Vector& params, const Vector& grads);

}  // namespace sysid
