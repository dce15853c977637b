#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace repauth
{

inline constexpr std::size_t kHeaderBytes = 80;
inline constexpr std::size_t kSignatureBytes = 64;
inline constexpr std::size_t kTagBytes = 54; // 432 bits of signature material
inline constexpr std::uint32_t kHeaderBits = kHeaderBytes * 8;
inline constexpr std::uint32_t kSignatureBits = kSignatureBytes * 8;

using Digest = std::array<std::uint8_t, 32>;
using SignatureTag = std::array<std::uint8_t, kTagBytes>;
using ServerId = std::uint16_t;

/// Bitcoin-layout block header. All integers big-endian on the wire.
struct WireBlockHeader
{
    std::uint32_t version = 0;
    Digest parent_hash{};
    Digest merkle_root{};
    std::uint32_t timestamp = 0;
    std::uint32_t difficulty_bits = 0;
    std::uint32_t nonce = 0;

    bool operator==(const WireBlockHeader&) const = default;
};

/// server_id (16) | height (64) | tag (432), big-endian.
struct WireSignature
{
    ServerId server_id = 0;
    std::uint64_t height = 0;
    SignatureTag tag{};

    bool operator==(const WireSignature&) const = default;
};

std::array<std::uint8_t, kHeaderBytes> encode_header(const WireBlockHeader& header);
std::array<std::uint8_t, kSignatureBytes> encode_signature(const WireSignature& sig);

/// Throw BadLength unless the buffer is exactly 80 / 64 bytes.
WireBlockHeader decode_header(std::span<const std::uint8_t> bytes);
WireSignature decode_signature(std::span<const std::uint8_t> bytes);

/**
 * Non-cryptographic 256-bit digest. Four 64-bit lanes seeded with fixed constants
 * absorb the input as big-endian 64-bit words (last word zero-padded), then the
 * byte length; each absorption runs the murmur3 finalizer on every lane followed
 * by a rotate-xor cross-lane diffusion. Four blank rounds finalize, and the lanes
 * are emitted big-endian. Stable across platforms.
 */
Digest digest256(std::span<const std::uint8_t> bytes);

/// Digest of the 80-byte encoding.
Digest header_digest(const WireBlockHeader& header);

std::string to_hex(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> from_hex(std::string_view hex);

/**
 * Pluggable signature scheme keyed by server id. Implementations own their key
 * table, which is immutable after construction.
 */
class SignatureScheme
{
  public:
    virtual ~SignatureScheme() = default;

    virtual SignatureTag sign(ServerId server, const Digest& message) const = 0;
    virtual bool verify(ServerId server, const Digest& message, const SignatureTag& tag) const = 0;
};

/**
 * Deterministic keyed-digest stand-in for public-key signatures.
 *
 * Server secrets are digest256("repauth/mock-key" | BE64(key_seed) | BE16(id)) for
 * ids 1..servers. A tag is digest256(secret | message | BE32(0)) followed by
 * digest256(secret | message | BE32(1)), truncated to 54 bytes.
 */
class MockSignatureScheme final : public SignatureScheme
{
  public:
    MockSignatureScheme(std::uint32_t servers, std::uint64_t key_seed);

    /// Throws UnknownServer for ids outside 1..servers.
    SignatureTag sign(ServerId server, const Digest& message) const override;
    bool verify(ServerId server, const Digest& message, const SignatureTag& tag) const override;

    std::uint32_t servers() const { return static_cast<std::uint32_t>(secrets_.size()); }

  private:
    const Digest& secret(ServerId server) const;

    std::vector<Digest> secrets_;
};

} // namespace repauth
