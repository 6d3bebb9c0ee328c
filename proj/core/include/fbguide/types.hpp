#pragma once

#include "fbguide/linalg.hpp"

namespace fbguide {

/// A point in the D-dimensional latent space.
using LatentVector = Vec;

/// An H-step sequence of m-dimensional actions, flattened time-major:
/// entry (k, j) lives at k * action_dim + j.
struct ActionChunk {
    int horizon = 0;
    int action_dim = 0;
    Vec a;

    ActionChunk() = default;
    ActionChunk(int horizon_, int action_dim_)
        : horizon(horizon_), action_dim(action_dim_),
          a(static_cast<size_t>(horizon_) * action_dim_, 0.0) {}

    int size() const { return horizon * action_dim; }

    double& at(int step, int dim) { return a[static_cast<size_t>(step) * action_dim + dim]; }
    double at(int step, int dim) const { return a[static_cast<size_t>(step) * action_dim + dim]; }

    /// Copy with every entry clamped to [-a_max, a_max].
    ActionChunk clipped(double a_max) const {
        ActionChunk out = *this;
        for (double& v : out.a) v = v < -a_max ? -a_max : (v > a_max ? a_max : v);
        return out;
    }
};

}  // namespace fbguide
