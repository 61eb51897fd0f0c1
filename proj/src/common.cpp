#include "appropo/common.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

namespace appropo {

std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t stream) {
    return mix_seed(mix_seed(parent) ^ (stream * 0xd1b54a32d192ed03ULL));
}

std::size_t Rng::index(std::size_t n) {
    if (n == 0) throw InvalidArgument("Rng::index: empty range");
    auto i = static_cast<std::size_t>(uniform() * static_cast<double>(n));
    return i < n ? i : n - 1;
}

double Rng::normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::string format_double(double x) {
    char buf[40];
    if (x == 0.0) x = 0.0;  // drop the sign of negative zero
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

bool all_finite(const Vec& v) { return v.allFinite(); }

}  // namespace appropo
