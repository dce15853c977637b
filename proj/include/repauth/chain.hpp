#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "repauth/codec.hpp"

namespace repauth
{

/// A header together with its height. The digest is computed once on construction.
class BlockHeader
{
  public:
    BlockHeader(std::uint64_t height, const WireBlockHeader& wire);

    /// Height 0 with every wire field zero.
    static BlockHeader genesis();

    std::uint64_t height() const { return height_; }
    const WireBlockHeader& wire() const { return wire_; }
    const Digest& parent_hash() const { return wire_.parent_hash; }
    const Digest& hash() const { return hash_; }

    bool operator==(const BlockHeader& other) const
    {
        return height_ == other.height_ && wire_ == other.wire_;
    }

  private:
    std::uint64_t height_;
    WireBlockHeader wire_;
    Digest hash_;
};

struct SignatureRecord
{
    ServerId server_id = 0;
    std::uint64_t height = 0;
    SignatureTag tag{};

    WireSignature to_wire() const { return {server_id, height, tag}; }
    static SignatureRecord from_wire(const WireSignature& w) { return {w.server_id, w.height, w.tag}; }
};

SignatureRecord sign_header(const SignatureScheme& scheme, ServerId server, const BlockHeader& header);

/// Throws HeightMismatch unless child is exactly one above parent.
bool verify_link(const BlockHeader& child, const BlockHeader& parent);

/**
 * The base station's authoritative header chain. Payload fields are derived
 * deterministically from (seed, height); only the parent link carries meaning.
 */
class HeaderChain
{
  public:
    explicit HeaderChain(std::uint64_t seed = 0);

    const BlockHeader& append();
    const BlockHeader& at(std::uint64_t height) const;
    std::uint64_t tip() const { return base_ + headers_.size() - 1; }

    /// Copies of heights lo..hi inclusive.
    std::vector<BlockHeader> range(std::uint64_t lo, std::uint64_t hi) const;

    /// Drop headers below `height`, keeping at least the tip.
    void prune_below(std::uint64_t height);

  private:
    std::uint64_t seed_;
    std::uint64_t base_ = 0;
    std::vector<BlockHeader> headers_;
};

struct Lags
{
    std::uint64_t received = 0;      // d^r
    std::uint64_t authenticated = 0; // d^a

    bool operator==(const Lags&) const = default;
};

/**
 * Per-client view of the chain. Tracks which headers are held and linked, which of
 * them are covered by a trusted signature, and the resulting received and
 * authenticated lags behind the latest known height.
 *
 * A trusted signature at height g authenticates every held block from the last
 * authenticated one up to g, provided all of them are held and linked. Signatures
 * that arrive before their chain is complete are buffered (at most d+1, newest
 * kept) and applied once it closes. Signatures from untrusted servers are dropped.
 *
 * Not thread-safe; one tracker per client. The scheme must outlive the tracker.
 */
class AuthTracker
{
  public:
    AuthTracker(const SignatureScheme& scheme, std::vector<ServerId> trusted, ServerId registered,
                std::uint32_t max_delay, const BlockHeader& genesis = BlockHeader::genesis());

    /// Throws BadLink when a held neighbour does not link to the header.
    Lags record_block(const BlockHeader& header);

    /// Returns the authenticated lag. Throws BadSignature when a trusted signature fails to verify.
    std::uint64_t record_signature(const SignatureRecord& sig);

    /**
     * Apply a unicast re-synchronization: consecutive linked headers and a signature
     * on the newest one from the registered server. Gaps below the window are
     * abandoned; the window becomes the new chain anchor.
     */
    void resync(std::span<const BlockHeader> headers, const SignatureRecord& sig);

    /// The system height advanced (a block exists even if this client missed it).
    void observe_height(std::uint64_t height);

    bool needs_feedback(std::uint32_t max_delay) const { return authenticated_lag() > max_delay; }

    std::uint64_t received_lag() const { return height_ - chained_tip_; }
    std::uint64_t authenticated_lag() const { return height_ - auth_tip_; }
    Lags lags() const { return {received_lag(), authenticated_lag()}; }

    std::uint64_t height() const { return height_; }
    std::uint64_t chained_tip() const { return chained_tip_; }
    std::uint64_t auth_tip() const { return auth_tip_; }
    ServerId registered_server() const { return registered_; }
    bool trusts(ServerId server) const;
    bool holds(std::uint64_t height) const { return blocks_.contains(height); }

    std::size_t held_blocks() const { return blocks_.size(); }
    std::size_t buffered_signatures() const { return pending_.size(); }
    std::uint64_t rejected_signatures() const { return rejected_; }

  private:
    struct Pending
    {
        SignatureRecord sig;
        bool verified = false;
    };

    void advance_chain();
    void apply_pending();
    void prune();

    const SignatureScheme* scheme_;
    std::vector<ServerId> trusted_; // sorted
    ServerId registered_;
    std::uint32_t max_delay_;

    std::map<std::uint64_t, BlockHeader> blocks_;
    std::map<std::uint64_t, Pending> pending_;
    std::uint64_t chained_tip_ = 0;
    std::uint64_t auth_tip_ = 0;
    std::uint64_t height_ = 0;
    std::uint64_t rejected_ = 0;
};

} // namespace repauth
