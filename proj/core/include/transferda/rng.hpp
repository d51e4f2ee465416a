#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace tda {

// Deterministic random stream. mt19937_64 has a pinned bit sequence per seed;
// the uniform mapping and Box-Muller below avoid std::*_distribution, whose
// algorithms are implementation-defined, so draws are reproducible across
// standard libraries and platforms.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    // uniform on [0,1) with 53 random mantissa bits
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        have_spare_ = true;
        return radius * std::cos(angle);
    }

    std::uint64_t raw() { return gen_(); }

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace tda
