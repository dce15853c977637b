#pragma once

#include <cstdint>
#include <random>

namespace repauth
{

/// What a random substream is used for. The numeric value enters the seed derivation.
enum class StreamPurpose : std::uint64_t
{
    Schedule = 1, // base-station signature sampling
    Channel = 2,  // per-client downlink losses
    Trust = 3,    // per-client trusted-set sampling
};

/**
 * Seed of substream (purpose, index) under `master`:
 *
 *     mix(master + mix((purpose << 48) ^ index))
 *
 * where mix is the splitmix64 finalizer. Streams depend only on their own
 * coordinates, so adding clients never perturbs existing streams.
 */
std::uint64_t substream_seed(std::uint64_t master, StreamPurpose purpose, std::uint64_t index);

/**
 * mt19937_64 engine with platform-independent conversions. The standard
 * distributions are implementation-defined, so they are not used for anything
 * that has to be bit-reproducible.
 */
class Stream
{
  public:
    explicit Stream(std::uint64_t seed) : engine_(seed) {}
    Stream(std::uint64_t master, StreamPurpose purpose, std::uint64_t index)
        : engine_(substream_seed(master, purpose, index))
    {
    }

    std::uint64_t next() { return engine_(); }

    /// Uniform on [0, 1) with 53 bits of resolution.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Always consumes exactly one draw.
    bool bernoulli(double p) { return uniform() < p; }

    /// Uniform on [0, n) by rejection; n > 0.
    std::uint64_t below(std::uint64_t n)
    {
        const std::uint64_t threshold = (0 - n) % n;
        for (;;)
        {
            const std::uint64_t x = engine_();
            if (x >= threshold)
                return x % n;
        }
    }

  private:
    std::mt19937_64 engine_;
};

} // namespace repauth
