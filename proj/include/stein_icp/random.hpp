#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace stein_icp {

/// Seeded random stream. Streams keyed by (seed, stream id) are independent of each
/// other and of thread scheduling. Draws are implemented here rather than through the
/// std distributions so sequences do not depend on the standard library vendor.
class RandomStream {
public:
    RandomStream(std::uint64_t seed, std::uint64_t stream_id);

    std::uint64_t next() { return engine_(); }

    /// Uniform integer in [0, n), n > 0.
    std::size_t uniform_index(std::size_t n);

    /// Uniform double in [0, 1).
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    double normal();

    /// von Mises draw with mean mu and concentration kappa (Best-Fisher).
    double von_mises(double mu, double kappa);

private:
    std::mt19937_64 engine_;
};

}  // namespace stein_icp
