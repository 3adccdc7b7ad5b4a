#ifndef MAAR_RANDOM_HPP
#define MAAR_RANDOM_HPP

#include <cstddef>
#include <cstdint>
#include <random>

namespace maar {

// Mixes a parent seed with an index into an independent child seed (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

// Seeded pseudo-random stream. Same seed and call order give bit-identical draws.
// Not shareable between threads; derive one child per worker instead.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed);

    std::uint64_t seed() const { return seed_; }

    // Uniform on the open interval (0, 1).
    double uniform();
    double normal();
    double gamma(double shape);
    double chi_square(double df) { return 2.0 * gamma(0.5 * df); }
    bool bernoulli(double p) { return uniform() < p; }
    // Uniform integer in [0, n).
    std::size_t index(std::size_t n);

    RandomStream child(std::uint64_t index) const { return RandomStream(derive_seed(seed_, index)); }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

} // namespace maar

#endif
