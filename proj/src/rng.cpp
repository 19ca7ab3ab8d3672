#include "aove/rng.hpp"

namespace aove {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view text) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

Rng Rng::substream(std::uint64_t master, std::string_view tag, std::uint64_t i, std::uint64_t j) {
    std::uint64_t s = splitmix64(master);
    s = splitmix64(s ^ fnv1a64(tag));
    s = splitmix64(s ^ splitmix64(i + 1));
    s = splitmix64(s ^ splitmix64(~j));
    return Rng(s);
}

Eigen::VectorXd Rng::normal_vector(Eigen::Index n) {
    Eigen::VectorXd v(n);
    for (Eigen::Index k = 0; k < n; ++k) v(k) = normal();
    return v;
}

}  // namespace aove
