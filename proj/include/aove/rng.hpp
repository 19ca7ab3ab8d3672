#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include <Eigen/Dense>

namespace aove {

/// Seeded random source. Every stream is derived from a 64-bit master seed and
/// a tag plus up to two indices, so parallel workers never share state and the
/// draws do not depend on scheduling.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    static Rng substream(std::uint64_t master, std::string_view tag, std::uint64_t i = 0,
                         std::uint64_t j = 0);

    double normal() { return normal_(engine_); }
    double uniform() { return uniform_(engine_); }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    std::uint64_t next_u64() { return engine_(); }
    std::size_t index(std::size_t n) { return static_cast<std::size_t>(next_u64() % n); }

    Eigen::VectorXd normal_vector(Eigen::Index n);

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view text);

}  // namespace aove
