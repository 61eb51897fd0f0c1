#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace appropo {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Inconsistent sizes between two objects that must agree.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Invalid argument or violated precondition.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Mixes a 64-bit value (splitmix64 finalizer). Used to derive child seeds.
std::uint64_t mix_seed(std::uint64_t x);

/// Derives a child seed from a parent seed and a stream index.
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t stream);

/**
 * Seeded random source. Every random draw in the library goes through this
 * class so that results depend only on the seed.
 */
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Uniform integer in [0, n).
    std::size_t index(std::size_t n);
    /// Standard normal via Box-Muller.
    double normal();
    /// Draws an index from unnormalized nonnegative weights.
    template <class Weights>
    std::size_t categorical(const Weights& w, std::size_t n) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) total += w[i];
        double u = uniform() * total;
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            acc += w[i];
            if (u < acc) return i;
        }
        // rounding: return the last index with positive weight
        for (std::size_t i = n; i-- > 0;)
            if (w[i] > 0.0) return i;
        return n - 1;
    }
    std::uint64_t next() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

/// Formats a double with 17 significant digits (round-trip exact).
std::string format_double(double x);

bool all_finite(const Vec& v);

}  // namespace appropo
