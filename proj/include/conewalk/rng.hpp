#pragma once

#include <cmath>
#include <cstdint>

namespace conewalk {

namespace detail {
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}
}  // namespace detail

/// Counter-based random stream keyed by (master seed, worker id, trajectory id).
/// Output i depends only on (key, i): reproducible and order-independent
/// across workers.
class RngStream {
public:
    RngStream(std::uint64_t master_seed, std::uint64_t worker_id = 0,
              std::uint64_t trajectory_id = 0)
        : key_(derive_key(master_seed, worker_id, trajectory_id)), ctr_(0) {}

    std::uint64_t next_u64() { return detail::mix64(key_ + 0x9e3779b97f4a7c15ULL * ctr_++); }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform in (0, 1].
    double uniform_pos() { return 1.0 - uniform(); }

    double exponential() { return -std::log(uniform_pos()); }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        // multiply-shift; bias is negligible for n << 2^64
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    std::uint64_t key() const { return key_; }

private:
    static std::uint64_t derive_key(std::uint64_t seed, std::uint64_t worker, std::uint64_t traj) {
        std::uint64_t k = detail::mix64(seed);
        k = detail::mix64(k ^ (worker + 0x6a09e667f3bcc909ULL));
        k = detail::mix64(k ^ (traj + 0xbb67ae8584caa73bULL));
        return k;
    }

    std::uint64_t key_;
    std::uint64_t ctr_;
};

}  // namespace conewalk
