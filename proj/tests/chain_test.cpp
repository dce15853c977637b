#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "repauth/chain.hpp"
#include "repauth/error.hpp"

using namespace repauth;

namespace
{

class ChainFixture : public ::testing::Test
{
  protected:
    ChainFixture() : scheme(5, 11), chain(1)
    {
        for (int i = 0; i < 40; ++i)
            chain.append();
    }

    const BlockHeader& block(std::uint64_t h) const { return chain.at(h); }
    SignatureRecord sig(ServerId server, std::uint64_t h) const { return sign_header(scheme, server, block(h)); }
    AuthTracker tracker(std::uint32_t d = 10, std::vector<ServerId> trusted = {1}) const
    {
        const ServerId registered = trusted.front();
        return AuthTracker(scheme, std::move(trusted), registered, d);
    }

    MockSignatureScheme scheme;
    HeaderChain chain;
};

BlockHeader forged_child(const BlockHeader& honest)
{
    WireBlockHeader w = honest.wire();
    w.parent_hash[0] ^= 0x80;
    return BlockHeader(honest.height(), w);
}

} // namespace

TEST_F(ChainFixture, VerifyLink)
{
    EXPECT_TRUE(verify_link(block(1), block(0)));
    EXPECT_FALSE(verify_link(forged_child(block(1)), block(0)));
    for (std::uint64_t h = 1; h <= 10; ++h)
        EXPECT_TRUE(verify_link(block(h), block(h - 1)));
    try
    {
        verify_link(block(3), block(1));
        FAIL();
    }
    catch (const Error& e)
    {
        EXPECT_EQ(e.code(), Errc::HeightMismatch);
    }
}

TEST_F(ChainFixture, GenesisHasZeroParent)
{
    EXPECT_EQ(block(0).parent_hash(), Digest{});
    EXPECT_EQ(block(0), BlockHeader::genesis());
}

// One server, three clients. After block 1 goes out unsigned, block 2 reaches
// client 1 without a signature, client 2 with one, and client 3 only as a signature.
TEST_F(ChainFixture, AmortizationThreeClients)
{
    auto c1 = tracker(), c2 = tracker(), c3 = tracker();
    for (auto* c : {&c1, &c2, &c3})
    {
        c->record_block(block(1));
        EXPECT_EQ(c->lags(), (Lags{0, 1}));
    }

    c1.record_block(block(2));
    c2.record_block(block(2));
    c2.record_signature(sig(1, 2));
    c3.observe_height(2);
    c3.record_signature(sig(1, 2));

    EXPECT_EQ(c1.lags(), (Lags{0, 2}));
    EXPECT_EQ(c2.lags(), (Lags{0, 0})); // block 1 authenticated through the chain
    EXPECT_EQ(c3.lags(), (Lags{1, 2})); // the signature cannot chain without block 2

    // The buffered signature applies once the gap closes.
    EXPECT_EQ(c3.buffered_signatures(), 1u);
    c3.record_block(block(2));
    EXPECT_EQ(c3.lags(), (Lags{0, 0}));
}

// Three clients at h = 5 with lags (0,1), (4,4) and (5,5).
TEST_F(ChainFixture, ProcessSnapshot)
{
    auto c1 = tracker(4), c2 = tracker(4), c3 = tracker(4);

    for (std::uint64_t h = 1; h <= 5; ++h)
        c1.record_block(block(h));
    c1.record_signature(sig(1, 4));

    c2.record_block(block(1));
    c2.record_signature(sig(1, 1));
    for (std::uint64_t h = 3; h <= 5; ++h)
        c2.record_block(block(h));
    c2.record_signature(sig(1, 5));

    for (std::uint64_t h = 2; h <= 5; ++h)
    {
        c3.record_block(block(h));
        c3.record_signature(sig(1, h));
    }

    EXPECT_EQ(c1.lags(), (Lags{0, 1}));
    EXPECT_EQ(c2.lags(), (Lags{4, 4}));
    EXPECT_EQ(c3.lags(), (Lags{5, 5}));

    EXPECT_FALSE(c1.needs_feedback(4));
    EXPECT_FALSE(c2.needs_feedback(4));
    EXPECT_TRUE(c3.needs_feedback(4));

    // Unicast of blocks h-d..h and a registered-server signature.
    const auto window = chain.range(1, 5);
    c3.resync(window, sig(1, 5));
    EXPECT_EQ(c3.lags(), (Lags{0, 0}));
    EXPECT_EQ(c3.chained_tip(), 5u);
    EXPECT_EQ(c3.auth_tip(), 5u);

    auto full = tracker(4);
    for (std::uint64_t h = 1; h <= 5; ++h)
        full.record_block(block(h));
    full.record_signature(sig(1, 5));
    EXPECT_EQ(c3.lags(), full.lags());
    EXPECT_EQ(c3.auth_tip(), full.auth_tip());
}

TEST_F(ChainFixture, GapDoesNotChain)
{
    auto c = tracker();
    c.record_block(block(1));
    c.record_block(block(3));
    EXPECT_EQ(c.chained_tip(), 1u);
    EXPECT_EQ(c.lags(), (Lags{2, 3}));
}

TEST_F(ChainFixture, UntrustedSignatureIgnored)
{
    auto c = tracker(10, {2});
    c.record_block(block(1));
    const auto before = c.lags();
    c.record_signature(sig(3, 1));
    EXPECT_EQ(c.lags(), before);
    EXPECT_EQ(c.buffered_signatures(), 0u);
}

TEST_F(ChainFixture, BadSignatureRejected)
{
    auto c = tracker();
    c.record_block(block(1));
    auto s = sig(1, 1);
    s.tag[5] ^= 1;
    try
    {
        c.record_signature(s);
        FAIL();
    }
    catch (const Error& e)
    {
        EXPECT_EQ(e.code(), Errc::BadSignature);
    }
    EXPECT_EQ(c.auth_tip(), 0u);
}

TEST_F(ChainFixture, BufferedBadSignatureDropped)
{
    auto c = tracker();
    auto s = sig(1, 1);
    s.tag[0] ^= 1;
    c.record_signature(s);
    c.record_block(block(1));
    EXPECT_EQ(c.auth_tip(), 0u);
    EXPECT_EQ(c.rejected_signatures(), 1u);
}

TEST_F(ChainFixture, BadLinkRejected)
{
    auto c = tracker();
    c.record_block(block(1));
    try
    {
        c.record_block(forged_child(block(2)));
        FAIL();
    }
    catch (const Error& e)
    {
        EXPECT_EQ(e.code(), Errc::BadLink);
    }

    // A held child that does not link back is also caught.
    auto d = tracker();
    d.record_block(block(3));
    WireBlockHeader w = block(2).wire();
    w.nonce ^= 1;
    EXPECT_THROW(d.record_block(BlockHeader(2, w)), Error);
}

TEST_F(ChainFixture, ResyncErrors)
{
    auto c = tracker(4, {1, 2});
    const auto window = chain.range(1, 5);
    EXPECT_THROW(c.resync(window, sig(2, 5)), Error); // trusted but not registered
    EXPECT_THROW(c.resync(window, sig(1, 4)), Error); // does not cover the newest header

    std::vector<BlockHeader> broken = window;
    broken[2] = forged_child(broken[2]);
    try
    {
        c.resync(broken, sig(1, 5));
        FAIL();
    }
    catch (const Error& e)
    {
        EXPECT_EQ(e.code(), Errc::BadLink);
    }
}

TEST_F(ChainFixture, ResyncAcrossAbandonedGap)
{
    const std::uint32_t d = 4;
    auto c = tracker(d);
    c.record_block(block(1));
    c.record_block(block(3));
    c.observe_height(10);
    EXPECT_TRUE(c.needs_feedback(d));
    c.resync(chain.range(6, 10), sig(1, 10));
    EXPECT_EQ(c.lags(), (Lags{0, 0}));
    EXPECT_FALSE(c.holds(3));

    // The chain continues from the new anchor.
    c.record_block(block(11));
    c.observe_height(11);
    EXPECT_EQ(c.lags(), (Lags{0, 1}));
}

TEST_F(ChainFixture, ImmuneForDPeriodsAfterResync)
{
    const std::uint32_t d = 6;
    auto c = tracker(d);
    c.observe_height(8);
    c.resync(chain.range(2, 8), sig(1, 8));
    for (std::uint64_t h = 9; h <= 8 + d; ++h)
    {
        c.observe_height(h);
        EXPECT_FALSE(c.needs_feedback(d)) << h;
    }
    c.observe_height(8 + d + 1);
    EXPECT_TRUE(c.needs_feedback(d));
}

TEST_F(ChainFixture, NeedsFeedbackIsStrict)
{
    const std::uint32_t d = 4;
    auto c = tracker(d);
    c.observe_height(d);
    EXPECT_FALSE(c.needs_feedback(d));
    c.observe_height(d + 1);
    EXPECT_TRUE(c.needs_feedback(d));
}

TEST_F(ChainFixture, AmortizationProperty)
{
    for (std::uint64_t lo = 1; lo <= 8; ++lo)
        for (std::uint64_t hi = lo; hi <= 12; ++hi)
        {
            auto c = tracker(20);
            for (std::uint64_t h = 1; h < lo; ++h)
                c.record_block(block(h));
            c.record_signature(sig(1, lo - 1 == 0 ? 1 : lo - 1)); // prefix authenticated
            for (std::uint64_t h = lo; h <= hi; ++h)
                c.record_block(block(h));
            c.record_signature(sig(1, hi));
            EXPECT_EQ(c.auth_tip(), hi);

            // Same history with one block of lo..hi missing.
            for (std::uint64_t missing = lo; missing <= hi; ++missing)
            {
                auto m = tracker(20);
                for (std::uint64_t h = 1; h < lo; ++h)
                    m.record_block(block(h));
                if (lo > 1)
                    m.record_signature(sig(1, lo - 1));
                for (std::uint64_t h = lo; h <= hi; ++h)
                    if (h != missing)
                        m.record_block(block(h));
                m.record_signature(sig(1, hi));
                EXPECT_LT(m.auth_tip(), lo);
            }
        }
}

TEST_F(ChainFixture, IntraPeriodOrderIndependence)
{
    std::mt19937_64 rng(17);
    const std::uint32_t d = 6, k = 3;
    for (int trial = 0; trial < 300; ++trial)
    {
        // Random history up to period t-1, then one period's deliveries in two orders.
        const std::uint64_t t = 8 + rng() % 20;
        auto base = tracker(d, {1, 2});
        for (std::uint64_t p = 1; p < t; ++p)
        {
            base.observe_height(p);
            if (base.needs_feedback(d))
                base.resync(chain.range(p - d, p), sig(1, p));
            for (std::uint64_t h = p + 1 > k ? p + 1 - k : 0; h <= p; ++h)
                if (rng() % 3)
                    base.record_block(block(h));
            if (rng() % 3 == 0)
                base.record_signature(sig(1 + rng() % 2, p));
        }
        base.observe_height(t);

        enum Kind { B, S };
        std::vector<std::pair<Kind, std::uint64_t>> deliveries;
        for (std::uint64_t h = t + 1 - k; h <= t; ++h)
            if (rng() % 2)
                deliveries.push_back({B, h});
        for (ServerId s = 1; s <= 4; ++s)
            if (rng() % 2)
                deliveries.push_back({S, s});

        auto replay = [&](AuthTracker c) {
            for (auto [kind, v] : deliveries)
            {
                if (kind == B)
                    c.record_block(block(v));
                else
                    c.record_signature(sig(static_cast<ServerId>(v), t));
            }
            return c;
        };
        const auto first = replay(base);
        for (int perm = 0; perm < 5; ++perm)
        {
            std::shuffle(deliveries.begin(), deliveries.end(), rng);
            const auto other = replay(base);
            ASSERT_EQ(other.lags(), first.lags());
        }
        ASSERT_LE(first.auth_tip(), first.chained_tip());
        ASSERT_LE(first.chained_tip(), first.height());
    }
}

TEST_F(ChainFixture, TipsMonotoneAndBounded)
{
    std::mt19937_64 rng(23);
    const std::uint32_t d = 5;
    auto c = tracker(d, {1, 3});
    std::uint64_t last_chained = 0, last_auth = 0;
    for (std::uint64_t p = 1; p <= 40; ++p)
    {
        c.observe_height(p);
        if (c.needs_feedback(d))
            c.resync(chain.range(p - d, p), sig(1, p));
        for (std::uint64_t h = p >= 2 ? p - 2 : 0; h <= p; ++h)
            if (rng() % 4)
                c.record_block(block(h));
        if (rng() % 4 == 0)
            c.record_signature(sig(static_cast<ServerId>(1 + rng() % 4), p));

        ASSERT_LE(c.auth_tip(), c.chained_tip());
        ASSERT_LE(c.chained_tip(), c.height());
        ASSERT_GE(c.chained_tip(), last_chained);
        ASSERT_GE(c.auth_tip(), last_auth);
        ASSERT_LE(c.held_blocks(), 2 * d + 4);
        ASSERT_LE(c.buffered_signatures(), d + 1);
        last_chained = c.chained_tip();
        last_auth = c.auth_tip();
    }
}

TEST_F(ChainFixture, RegisteredMustBeTrusted)
{
    EXPECT_THROW(AuthTracker(scheme, {2}, 1, 4), Error);
    EXPECT_THROW(AuthTracker(scheme, {}, 1, 4), Error);
}

TEST(HeaderChain, RangeAndPrune)
{
    HeaderChain chain(5);
    for (int i = 0; i < 20; ++i)
        chain.append();
    EXPECT_EQ(chain.tip(), 20u);
    EXPECT_EQ(chain.range(3, 7).size(), 5u);
    chain.prune_below(10);
    EXPECT_THROW(chain.at(9), Error);
    EXPECT_EQ(chain.at(10).height(), 10u);
    EXPECT_EQ(chain.append().height(), 21u);
    EXPECT_TRUE(verify_link(chain.at(21), chain.at(20)));
}
