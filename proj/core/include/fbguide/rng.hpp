#pragma once

#include <cstdint>

namespace fbguide {

/// Counter-free splittable generator built on the SplitMix64 finalizer
/// (constants 0x9E3779B97F4A7C15, 0xBF58476D1CE4E5B9, 0x94D049BB133111EB).
/// Two streams constructed with the same (seed, stream_id) produce identical
/// draw sequences on any platform; distinct stream ids decorrelate streams
/// sharing a seed.
class RngStream {
public:
    RngStream(uint64_t seed, uint64_t stream_id);

    uint64_t seed() const { return seed_; }
    uint64_t stream_id() const { return stream_id_; }

    uint64_t next_u64();

    /// Uniform in [0, 1).
    double uniform();
    /// Uniform in [lo, hi).
    double uniform(double lo, double hi);
    /// Uniform integer in [0, n).
    int uniform_int(int n);
    /// Standard normal via Box-Muller; the paired draw is cached.
    double normal();

private:
    uint64_t seed_;
    uint64_t stream_id_;
    uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace fbguide
