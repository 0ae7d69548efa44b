#include "sfc/sampling.hpp"

#include <cmath>
#include <random>

namespace sfc {

namespace {

double radical_inverse(std::uint64_t index, unsigned base) {
    double inv = 1.0 / base;
    double f = inv;
    double value = 0.0;
    while (index > 0) {
        value += f * static_cast<double>(index % base);
        index /= base;
        f *= inv;
    }
    return value;
}

template <std::size_t D>
std::vector<std::array<double, D>> halton(std::size_t count, std::uint64_t seed) {
    static constexpr unsigned bases[3] = {2, 3, 5};
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::array<double, D> shift{};
    for (auto& s : shift) s = unit(rng);
    std::vector<std::array<double, D>> out(count);
    for (std::size_t i = 0; i < count; ++i) {
        for (std::size_t d = 0; d < D; ++d) {
            double v = radical_inverse(i + 1, bases[d]) + shift[d];
            out[i][d] = v - std::floor(v);
        }
    }
    return out;
}

}  // namespace

std::vector<std::array<double, 3>> halton3(std::size_t count, std::uint64_t seed) { return halton<3>(count, seed); }

std::vector<std::array<double, 2>> halton2(std::size_t count, std::uint64_t seed) { return halton<2>(count, seed); }

std::vector<Vec3> b1_grid(std::size_t count, std::uint64_t seed) {
    std::vector<Vec3> pts;
    pts.reserve(count);
    // Rim of the cylinder and the axis, where the quotient bounds are usually tightest.
    constexpr int kRim = 16;
    for (int k = 0; k < kRim && pts.size() < count; ++k) {
        const double th = kTwoPi * k / kRim;
        const double x3 = (k % 2 == 0) ? 1.0 : -1.0;
        pts.push_back({std::cos(th), std::sin(th), x3});
    }
    for (double x3 : {1.0, -1.0, 0.5}) {
        if (pts.size() < count) pts.push_back({0.0, 0.0, x3});
    }
    const auto h = halton3(count - pts.size(), seed);
    for (const auto& u : h) {
        const double r = std::sqrt(u[0]);
        const double th = kTwoPi * u[1];
        pts.push_back({r * std::cos(th), r * std::sin(th), 2.0 * u[2] - 1.0});
    }
    return pts;
}

}  // namespace sfc
