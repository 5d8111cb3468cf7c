#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include <Eigen/Core>

namespace grc {

// Deterministic stream of standard normal draws. Box-Muller on top of
// mt19937_64 so a given seed yields the same sequence on every platform;
// std::normal_distribution makes no such guarantee across implementations.
class GaussianStream {
public:
    explicit GaussianStream(std::uint64_t seed) : engine_(seed) {}

    double next() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform01();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    Eigen::VectorXd next(Eigen::Index n) {
        Eigen::VectorXd v(n);
        for (Eigen::Index i = 0; i < n; ++i) v[i] = next();
        return v;
    }

private:
    // 53-bit draw shifted into the open interval (0, 1)
    double uniform01() {
        return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1p-53;
    }

    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace grc
