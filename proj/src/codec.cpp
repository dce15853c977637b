#include "repauth/codec.hpp"

#include <algorithm>
#include <bit>
#include <cstring>

#include "repauth/error.hpp"

namespace repauth
{

namespace
{

constexpr std::array<std::uint64_t, 4> kLaneSeeds = {
    0x6a09e667f3bcc908ULL, 0xbb67ae8584caa73bULL, 0x3c6ef372fe94f82bULL, 0xa54ff53a5f1d36f1ULL};
constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

std::uint64_t fmix64(std::uint64_t x)
{
    x ^= x >> 33;
    x *= 0xff51afd7ed558ccdULL;
    x ^= x >> 33;
    x *= 0xc4ceb9fe1a85ec53ULL;
    x ^= x >> 33;
    return x;
}

void absorb(std::array<std::uint64_t, 4>& lanes, std::uint64_t word)
{
    for (std::size_t i = 0; i < lanes.size(); ++i)
        lanes[i] = fmix64(lanes[i] ^ (word + i * kGolden));
    const std::uint64_t first = lanes[0];
    lanes[0] ^= std::rotl(lanes[1], 17);
    lanes[1] ^= std::rotl(lanes[2], 31);
    lanes[2] ^= std::rotl(lanes[3], 47);
    lanes[3] ^= std::rotl(first, 13);
}

class Writer
{
  public:
    explicit Writer(std::span<std::uint8_t> out) : out_(out) {}

    template <typename UInt> void put(UInt v)
    {
        for (std::size_t i = 0; i < sizeof(UInt); ++i)
            out_[pos_++] = static_cast<std::uint8_t>(v >> (8 * (sizeof(UInt) - 1 - i)));
    }

    void put_bytes(std::span<const std::uint8_t> bytes)
    {
        std::copy(bytes.begin(), bytes.end(), out_.begin() + pos_);
        pos_ += bytes.size();
    }

  private:
    std::span<std::uint8_t> out_;
    std::size_t pos_ = 0;
};

class Reader
{
  public:
    explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

    template <typename UInt> UInt get()
    {
        UInt v = 0;
        for (std::size_t i = 0; i < sizeof(UInt); ++i)
            v = static_cast<UInt>((v << 8) | in_[pos_++]);
        return v;
    }

    template <std::size_t N> std::array<std::uint8_t, N> get_bytes()
    {
        std::array<std::uint8_t, N> out{};
        std::copy_n(in_.begin() + pos_, N, out.begin());
        pos_ += N;
        return out;
    }

  private:
    std::span<const std::uint8_t> in_;
    std::size_t pos_ = 0;
};

void require_length(std::span<const std::uint8_t> bytes, std::size_t expected, const char* what)
{
    if (bytes.size() != expected)
        throw Error(Errc::BadLength, std::string(what) + " needs " + std::to_string(expected) +
                                         " bytes, got " + std::to_string(bytes.size()));
}

} // namespace

std::array<std::uint8_t, kHeaderBytes> encode_header(const WireBlockHeader& header)
{
    std::array<std::uint8_t, kHeaderBytes> out{};
    Writer w(out);
    w.put(header.version);
    w.put_bytes(header.parent_hash);
    w.put_bytes(header.merkle_root);
    w.put(header.timestamp);
    w.put(header.difficulty_bits);
    w.put(header.nonce);
    return out;
}

std::array<std::uint8_t, kSignatureBytes> encode_signature(const WireSignature& sig)
{
    std::array<std::uint8_t, kSignatureBytes> out{};
    Writer w(out);
    w.put(sig.server_id);
    w.put(sig.height);
    w.put_bytes(sig.tag);
    return out;
}

WireBlockHeader decode_header(std::span<const std::uint8_t> bytes)
{
    require_length(bytes, kHeaderBytes, "block header");
    Reader r(bytes);
    WireBlockHeader h;
    h.version = r.get<std::uint32_t>();
    h.parent_hash = r.get_bytes<32>();
    h.merkle_root = r.get_bytes<32>();
    h.timestamp = r.get<std::uint32_t>();
    h.difficulty_bits = r.get<std::uint32_t>();
    h.nonce = r.get<std::uint32_t>();
    return h;
}

WireSignature decode_signature(std::span<const std::uint8_t> bytes)
{
    require_length(bytes, kSignatureBytes, "signature");
    Reader r(bytes);
    WireSignature s;
    s.server_id = r.get<std::uint16_t>();
    s.height = r.get<std::uint64_t>();
    s.tag = r.get_bytes<kTagBytes>();
    return s;
}

Digest digest256(std::span<const std::uint8_t> bytes)
{
    std::array<std::uint64_t, 4> lanes = kLaneSeeds;
    std::size_t pos = 0;
    while (pos < bytes.size())
    {
        std::uint64_t word = 0;
        for (std::size_t i = 0; i < 8; ++i)
        {
            const std::uint8_t byte = pos + i < bytes.size() ? bytes[pos + i] : 0;
            word = (word << 8) | byte;
        }
        absorb(lanes, word);
        pos += 8;
    }
    absorb(lanes, static_cast<std::uint64_t>(bytes.size()));
    for (int round = 0; round < 4; ++round)
        absorb(lanes, 0);

    Digest out{};
    Writer w(out);
    for (auto lane : lanes)
        w.put(lane);
    return out;
}

Digest header_digest(const WireBlockHeader& header)
{
    const auto encoded = encode_header(header);
    return digest256(encoded);
}

std::string to_hex(std::span<const std::uint8_t> bytes)
{
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (auto b : bytes)
    {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0xF]);
    }
    return out;
}

std::vector<std::uint8_t> from_hex(std::string_view hex)
{
    auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        return -1;
    };
    if (hex.size() % 2 != 0)
        throw Error(Errc::BadLength, "odd-length hex string");
    std::vector<std::uint8_t> out(hex.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i)
    {
        const int hi = nibble(hex[2 * i]);
        const int lo = nibble(hex[2 * i + 1]);
        if (hi < 0 || lo < 0)
            throw Error(Errc::InvalidParams, "invalid hex digit");
        out[i] = static_cast<std::uint8_t>((hi << 4) | lo);
    }
    return out;
}

MockSignatureScheme::MockSignatureScheme(std::uint32_t servers, std::uint64_t key_seed)
{
    if (servers > 0xFFFF)
        throw Error(Errc::InvalidParams, "server ids are 16-bit");
    static constexpr std::string_view label = "repauth/mock-key";
    secrets_.reserve(servers);
    for (std::uint32_t id = 1; id <= servers; ++id)
    {
        std::array<std::uint8_t, label.size() + 8 + 2> buf{};
        std::memcpy(buf.data(), label.data(), label.size());
        Writer w(std::span<std::uint8_t>(buf).subspan(label.size()));
        w.put(key_seed);
        w.put(static_cast<std::uint16_t>(id));
        secrets_.push_back(digest256(buf));
    }
}

const Digest& MockSignatureScheme::secret(ServerId server) const
{
    if (server < 1 || server > secrets_.size())
        throw Error(Errc::UnknownServer, "server " + std::to_string(server) + " has no key");
    return secrets_[server - 1];
}

SignatureTag MockSignatureScheme::sign(ServerId server, const Digest& message) const
{
    const Digest& key = secret(server);
    std::array<std::uint8_t, 32 + 32 + 4> buf{};
    Writer w(buf);
    w.put_bytes(key);
    w.put_bytes(message);

    SignatureTag tag{};
    for (std::uint32_t counter = 0; counter < 2; ++counter)
    {
        Writer(std::span<std::uint8_t>(buf).subspan(64)).put(counter);
        const Digest block = digest256(buf);
        const std::size_t offset = counter * block.size();
        const std::size_t n = std::min(block.size(), tag.size() - offset);
        std::copy_n(block.begin(), n, tag.begin() + offset);
    }
    return tag;
}

bool MockSignatureScheme::verify(ServerId server, const Digest& message, const SignatureTag& tag) const
{
    return sign(server, message) == tag;
}

} // namespace repauth
