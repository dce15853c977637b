#include "repauth/chain.hpp"

#include <algorithm>
#include <string>

#include "repauth/error.hpp"

namespace repauth
{

namespace
{

std::uint64_t mix(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

} // namespace

BlockHeader::BlockHeader(std::uint64_t height, const WireBlockHeader& wire)
    : height_(height), wire_(wire), hash_(header_digest(wire))
{
}

BlockHeader BlockHeader::genesis()
{
    return BlockHeader(0, WireBlockHeader{});
}

SignatureRecord sign_header(const SignatureScheme& scheme, ServerId server, const BlockHeader& header)
{
    return {server, header.height(), scheme.sign(server, header.hash())};
}

bool verify_link(const BlockHeader& child, const BlockHeader& parent)
{
    if (child.height() != parent.height() + 1)
        throw Error(Errc::HeightMismatch, "child at " + std::to_string(child.height()) +
                                              " cannot link to parent at " + std::to_string(parent.height()));
    return child.parent_hash() == parent.hash();
}

HeaderChain::HeaderChain(std::uint64_t seed) : seed_(seed)
{
    headers_.push_back(BlockHeader::genesis());
}

const BlockHeader& HeaderChain::append()
{
    const BlockHeader& parent = headers_.back();
    const std::uint64_t height = parent.height() + 1;

    WireBlockHeader wire;
    wire.version = 1;
    wire.parent_hash = parent.hash();
    std::array<std::uint8_t, 16> commitment{};
    for (int i = 0; i < 8; ++i)
    {
        commitment[i] = static_cast<std::uint8_t>(seed_ >> (56 - 8 * i));
        commitment[8 + i] = static_cast<std::uint8_t>(height >> (56 - 8 * i));
    }
    wire.merkle_root = digest256(commitment);
    wire.timestamp = static_cast<std::uint32_t>(height * 600);
    wire.difficulty_bits = 0x1d00ffff;
    wire.nonce = static_cast<std::uint32_t>(mix(seed_ ^ height));

    headers_.emplace_back(height, wire);
    return headers_.back();
}

const BlockHeader& HeaderChain::at(std::uint64_t height) const
{
    if (height < base_ || height > tip())
        throw Error(Errc::HeightMismatch, "height " + std::to_string(height) + " not held by the chain");
    return headers_[height - base_];
}

std::vector<BlockHeader> HeaderChain::range(std::uint64_t lo, std::uint64_t hi) const
{
    if (lo > hi || lo < base_ || hi > tip())
        throw Error(Errc::HeightMismatch, "range " + std::to_string(lo) + ".." + std::to_string(hi) +
                                              " not held by the chain");
    return {headers_.begin() + static_cast<std::ptrdiff_t>(lo - base_),
            headers_.begin() + static_cast<std::ptrdiff_t>(hi - base_ + 1)};
}

void HeaderChain::prune_below(std::uint64_t height)
{
    height = std::min(height, tip());
    if (height <= base_)
        return;
    headers_.erase(headers_.begin(), headers_.begin() + static_cast<std::ptrdiff_t>(height - base_));
    base_ = height;
}

AuthTracker::AuthTracker(const SignatureScheme& scheme, std::vector<ServerId> trusted,
                         ServerId registered, std::uint32_t max_delay, const BlockHeader& genesis)
    : scheme_(&scheme), trusted_(std::move(trusted)), registered_(registered), max_delay_(max_delay)
{
    std::sort(trusted_.begin(), trusted_.end());
    trusted_.erase(std::unique(trusted_.begin(), trusted_.end()), trusted_.end());
    if (trusted_.empty())
        throw Error(Errc::InvalidParams, "a client must trust at least one server");
    if (!trusts(registered_))
        throw Error(Errc::InvalidParams, "registered server must be trusted");

    blocks_.emplace(genesis.height(), genesis);
    chained_tip_ = auth_tip_ = height_ = genesis.height();
}

bool AuthTracker::trusts(ServerId server) const
{
    return std::binary_search(trusted_.begin(), trusted_.end(), server);
}

void AuthTracker::observe_height(std::uint64_t height)
{
    height_ = std::max(height_, height);
}

Lags AuthTracker::record_block(const BlockHeader& header)
{
    const std::uint64_t h = header.height();
    observe_height(h);
    if (h <= chained_tip_ || blocks_.contains(h))
        return lags();

    if (auto parent = blocks_.find(h - 1); parent != blocks_.end() && !verify_link(header, parent->second))
        throw Error(Errc::BadLink, "block " + std::to_string(h) + " does not link to its held parent");
    if (auto child = blocks_.find(h + 1); child != blocks_.end() && !verify_link(child->second, header))
        throw Error(Errc::BadLink, "held block " + std::to_string(h + 1) + " does not link to block " +
                                       std::to_string(h));

    blocks_.emplace(h, header);
    if (h == chained_tip_ + 1)
    {
        advance_chain();
        apply_pending();
        prune();
    }
    return lags();
}

std::uint64_t AuthTracker::record_signature(const SignatureRecord& sig)
{
    if (!trusts(sig.server_id))
        return authenticated_lag();
    observe_height(sig.height);
    if (sig.height <= auth_tip_)
        return authenticated_lag();

    auto held = blocks_.find(sig.height);
    const bool verifiable = held != blocks_.end();
    if (verifiable && !scheme_->verify(sig.server_id, held->second.hash(), sig.tag))
        throw Error(Errc::BadSignature, "signature by server " + std::to_string(sig.server_id) +
                                            " on block " + std::to_string(sig.height) + " does not verify");

    if (sig.height <= chained_tip_)
    {
        auth_tip_ = sig.height;
        apply_pending();
        prune();
        return authenticated_lag();
    }

    pending_.try_emplace(sig.height, Pending{sig, verifiable});
    while (pending_.size() > max_delay_ + 1)
        pending_.erase(pending_.begin());
    return authenticated_lag();
}

void AuthTracker::resync(std::span<const BlockHeader> headers, const SignatureRecord& sig)
{
    if (headers.empty())
        throw Error(Errc::BadLink, "resync carries no headers");
    for (std::size_t i = 1; i < headers.size(); ++i)
        if (!verify_link(headers[i], headers[i - 1]))
            throw Error(Errc::BadLink, "resync headers do not chain at height " +
                                           std::to_string(headers[i].height()));

    const BlockHeader& newest = headers.back();
    if (sig.server_id != registered_ || sig.height != newest.height() ||
        !scheme_->verify(sig.server_id, newest.hash(), sig.tag))
        throw Error(Errc::BadSignature, "resync signature does not cover block " +
                                            std::to_string(newest.height()));

    const std::uint64_t lo = headers.front().height();
    for (const BlockHeader& header : headers)
    {
        auto held = blocks_.find(header.height());
        if (held != blocks_.end() && !(held->second == header))
            throw Error(Errc::BadLink, "resync conflicts with held block " + std::to_string(header.height()));
    }
    if (auto parent = blocks_.find(lo - 1); lo > 0 && parent != blocks_.end() &&
                                            !verify_link(headers.front(), parent->second))
        throw Error(Errc::BadLink, "resync window does not link to held block " + std::to_string(lo - 1));

    if (lo > chained_tip_ + 1)
    {
        // The signed window is the new anchor; the unfilled gap below it is abandoned.
        blocks_.erase(blocks_.begin(), blocks_.lower_bound(lo));
    }
    for (const BlockHeader& header : headers)
        blocks_.try_emplace(header.height(), header);

    observe_height(newest.height());
    chained_tip_ = std::max(chained_tip_, newest.height());
    advance_chain();
    auth_tip_ = std::max(auth_tip_, newest.height());
    apply_pending();
    prune();
}

void AuthTracker::advance_chain()
{
    for (auto it = blocks_.find(chained_tip_ + 1); it != blocks_.end() && it->first == chained_tip_ + 1; ++it)
        ++chained_tip_;
}

void AuthTracker::apply_pending()
{
    while (!pending_.empty())
    {
        auto it = pending_.begin();
        const std::uint64_t h = it->first;
        if (h <= auth_tip_)
        {
            pending_.erase(it);
            continue;
        }
        if (h > chained_tip_)
            break;
        Pending entry = it->second;
        pending_.erase(it);
        if (!entry.verified &&
            !scheme_->verify(entry.sig.server_id, blocks_.at(h).hash(), entry.sig.tag))
        {
            ++rejected_;
            continue;
        }
        auth_tip_ = h;
    }
}

void AuthTracker::prune()
{
    const std::uint64_t horizon = height_ > max_delay_ + 1 ? height_ - max_delay_ - 1 : 0;
    const std::uint64_t keep_from = std::min(auth_tip_, horizon);
    blocks_.erase(blocks_.begin(), blocks_.lower_bound(keep_from));
}

} // namespace repauth
