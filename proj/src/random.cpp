#include "maar/random.hpp"

#include "maar/errors.hpp"

namespace maar {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

RandomStream::RandomStream(std::uint64_t seed) : seed_(seed), engine_(derive_seed(seed, 0)) {}

double RandomStream::uniform() {
    // 53 random bits, shifted off zero
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double RandomStream::normal() { return normal_(engine_); }

double RandomStream::gamma(double shape) {
    if (!(shape > 0.0)) throw DomainError("gamma shape must be positive");
    std::gamma_distribution<double> g(shape, 1.0);
    return g(engine_);
}

std::size_t RandomStream::index(std::size_t n) {
    if (n == 0) throw DomainError("index range must be nonempty");
    std::uniform_int_distribution<std::size_t> d(0, n - 1);
    return d(engine_);
}

} // namespace maar
