#pragma once

#include <cstdint>
#include <initializer_list>

namespace cawi {

/// SplitMix64 finalizer; bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Folds a sequence of words into one key. Order matters.
constexpr std::uint64_t mix64(std::initializer_list<std::uint64_t> parts) noexcept {
    std::uint64_t h = 0x6a09e667f3bcc909ULL;
    for (auto p : parts) h = mix64(h ^ mix64(p));
    return h;
}

/// Purpose tags used when deriving substreams.
enum class StreamPurpose : std::uint64_t {
    fold_split = 1,
    tau_subsample = 2,
    weights = 3,
    bias = 4,
    copula_extra = 5,
    timing = 6,
    synthetic = 7,
};

/// Counter-based generator: draw k is mix64(key + k * golden), so a stream is
/// fully described by (key, counter) and never depends on other streams.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id) noexcept
        : key_(mix64({seed, stream_id})), stream_id_(stream_id) {}

    /// Substream for (master seed, purpose, fold, grid index).
    static RngStream derive(std::uint64_t master_seed, StreamPurpose purpose,
                            std::uint64_t fold_index = 0, std::uint64_t grid_index = 0) noexcept {
        return RngStream(master_seed,
                         mix64({static_cast<std::uint64_t>(purpose), fold_index, grid_index}));
    }

    /// Child stream keyed off this stream's identity (not its position).
    RngStream child(std::uint64_t tag) const noexcept {
        RngStream s(*this);
        s.key_ = mix64({key_, tag});
        s.counter_ = 0;
        return s;
    }

    std::uint64_t next_u64() noexcept {
        ++counter_;
        return mix64(key_ + counter_ * 0x9e3779b97f4a7c15ULL);
    }

    /// Uniform on the open interval (0,1), 53-bit resolution.
    double uniform() noexcept {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Uniform integer in [0, n). n must be > 0.
    std::uint64_t below(std::uint64_t n) noexcept {
        // Lemire's multiply-shift with rejection.
        auto x = next_u64();
        unsigned __int128 m = static_cast<unsigned __int128>(x) * n;
        auto low = static_cast<std::uint64_t>(m);
        if (low < n) {
            const std::uint64_t t = -n % n;
            while (low < t) {
                x = next_u64();
                m = static_cast<unsigned __int128>(x) * n;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    std::uint64_t stream_id() const noexcept { return stream_id_; }
    std::uint64_t position() const noexcept { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t stream_id_;
    std::uint64_t counter_ = 0;
};

}  // namespace cawi
