#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "ham/tensor.hpp"

namespace ham {

// Seeded RNG with a hand-rolled Box-Muller normal so that streams are
// identical across standard libraries (std::normal_distribution is
// implementation-defined).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    // uniform in [0, 1)
    double uniform() {
        return static_cast<double>(gen_()) / 4294967296.0;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    std::uint32_t uniform_int(std::uint32_t n) {
        // modulo bias negligible for toy-scale n
        return gen_() % n;
    }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1, u2;
        do {
            u1 = uniform();
        } while (u1 <= 1e-12);
        u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    template <class T>
    TensorT<T> normal_tensor(std::vector<std::size_t> shape, double stddev = 1.0) {
        TensorT<T> t(std::move(shape));
        for (auto& v : t.data) v = static_cast<T>(normal() * stddev);
        return t;
    }

private:
    std::mt19937 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

} // namespace ham
