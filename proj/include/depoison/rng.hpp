#pragma once

#include <cmath>
#include <cstdint>

namespace depoison {

// Seeded deterministic generator (splitmix64 core). All randomness in the
// toolkit flows through this class so that results are reproducible across
// platforms; std:: distributions are implementation-defined and avoided.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1)
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform integer in [0, n), n > 0
    std::uint64_t uniform_int(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    // standard normal via Box-Muller; caches the sine branch
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 1.0 - uniform();  // (0, 1], log is safe
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double t = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(t);
        have_spare_ = true;
        return r * std::cos(t);
    }

    double gaussian(double mean, double stddev) {
        return mean + stddev * gaussian();
    }

    // Independent stream for item `index` of a parallel job. Never shares
    // state with the parent stream.
    static Rng for_item(std::uint64_t seed, std::uint64_t index) {
        Rng r(seed ^ (0x9e3779b97f4a7c15ULL * (index + 1)));
        r.next_u64();
        return r;
    }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace depoison
