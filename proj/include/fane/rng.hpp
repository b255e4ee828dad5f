#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "fane/mat.hpp"

namespace fane {

// mt19937_64 with hand-rolled distributions so streams are identical across
// standard library implementations.
class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    double uniform() {  // [0, 1)
        return static_cast<double>(gen_() >> 11) * (1.0 / 9007199254740992.0);
    }

    double normal() {  // Box-Muller, one draw per call
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    int uniform_int(int lo, int hi) {  // inclusive range
        const uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
        return lo + static_cast<int>(gen_() % span);
    }

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) {
            const int j = uniform_int(0, i);
            std::swap(v[i], v[j]);
        }
    }

    // n distinct values from [0, limit), order randomized
    std::vector<int> sample_without_replacement(int limit, int n) {
        std::vector<int> pool(limit);
        for (int i = 0; i < limit; ++i) pool[i] = i;
        shuffle(pool);
        pool.resize(n);
        return pool;
    }

    Mat normal_mat(int r, int c, double stddev) {
        Mat m(r, c);
        for (double& v : m.data) v = normal() * stddev;
        return m;
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace fane
