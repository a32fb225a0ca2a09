#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "bridgelab/vec.hpp"

namespace bridgelab {

// Deterministic random source. std::mt19937_64 is fully specified by the
// standard, but std::normal_distribution is not, and the reporting pipeline
// promises byte-identical artifacts for identical seeds. So the normal and
// uniform mappings are spelled out here instead of delegated.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    // Uniform in [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller. Draws are made in pairs and the
    // spare is cached, so a fixed seed yields a fixed stream.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * M_PI * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    Vec normal_vec(std::size_t d) {
        Vec z(d);
        for (std::size_t i = 0; i < d; ++i) z[i] = normal();
        return z;
    }

    // Index in [0, n) proportional to the given nonnegative weights.
    std::size_t categorical(const std::vector<double>& weights) {
        double total = 0.0;
        for (double w : weights) total += w;
        double u = uniform() * total;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            u -= weights[i];
            if (u < 0.0) return i;
        }
        return weights.size() - 1;
    }

    std::uint64_t raw() { return gen_(); }

private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace bridgelab
