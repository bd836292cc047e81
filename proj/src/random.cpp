#include "stein_icp/random.hpp"

#include "stein_icp/geometry.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace stein_icp {

namespace {

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream_id) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream_id), static_cast<std::uint32_t>(stream_id >> 32),
                      0x5eedu};
    return std::mt19937_64(seq);
}

}  // namespace

RandomStream::RandomStream(std::uint64_t seed, std::uint64_t stream_id) : engine_(make_engine(seed, stream_id)) {}

std::size_t RandomStream::uniform_index(std::size_t n) {
    const std::uint64_t bound = n;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t r = 0;
    do {
        r = engine_();
    } while (r >= limit);
    return static_cast<std::size_t>(r % bound);
}

double RandomStream::normal() {
    // Box-Muller; one variate per call keeps the stream position simple to reason about.
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double RandomStream::von_mises(double mu, double kappa) {
    if (kappa < 1e-8) return wrap_angle(mu + uniform(-std::numbers::pi, std::numbers::pi));
    const double tau = 1.0 + std::sqrt(1.0 + 4.0 * kappa * kappa);
    const double rho = (tau - std::sqrt(2.0 * tau)) / (2.0 * kappa);
    const double r = (1.0 + rho * rho) / (2.0 * rho);
    while (true) {
        const double u1 = uniform01();
        const double z = std::cos(std::numbers::pi * u1);
        const double f = (1.0 + r * z) / (r + z);
        const double c = kappa * (r - f);
        const double u2 = uniform01();
        if (c * (2.0 - c) - u2 > 0.0 || std::log(c / u2) + 1.0 - c >= 0.0) {
            const double u3 = uniform01();
            const double theta = (u3 > 0.5 ? 1.0 : -1.0) * std::acos(f);
            return wrap_angle(mu + theta);
        }
    }
}

}  // namespace stein_icp
