#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "repauth/analysis.hpp"
#include "repauth/chain.hpp"
#include "repauth/codec.hpp"
#include "repauth/rng.hpp"

namespace repauth
{

struct SimConfig
{
    SystemParams params;
    /// One list per client; the first id is the server registered with the base
    /// station. Left empty, each client samples V_u servers uniformly once.
    std::vector<std::vector<ServerId>> trusted_sets;
    std::uint64_t periods = 200'000; // total, warm-up included
    std::optional<std::uint64_t> warmup; // defaults to 10*d
    std::uint64_t seed = 1;
    std::uint64_t key_seed = 0x5eed;

    std::uint64_t effective_warmup() const { return warmup.value_or(10ULL * params.max_delay); }

    /// Throws InvalidParams unless periods > warmup >= d and the trusted sets are well-formed.
    void validate() const;
};

struct PeriodSchedule
{
    std::uint64_t period = 0;
    std::vector<std::uint64_t> block_heights;  // oldest first
    std::vector<ServerId> signature_servers;   // distinct, all signing block `period`
};

/// Blocks max(0, t-k+1)..t and s servers sampled without replacement.
PeriodSchedule schedule_period(std::uint64_t period, const SystemParams& params, Stream& rng);

enum class PacketKind
{
    Block,
    Signature,
};

/// One independent Bernoulli draw against the packet's loss probability.
bool deliver(PacketKind kind, const ChannelProbs& channel, Stream& rng);

/// Identifies a single per-client reception for scripted loss patterns.
struct DeliveryEvent
{
    std::uint64_t period;
    std::uint32_t client;
    PacketKind kind;
    std::uint64_t height;
    ServerId server; // zero for blocks
};

/// Returns the forced outcome, or nullopt to fall back to the random channel.
using ChannelOverride = std::function<std::optional<bool>(const DeliveryEvent&)>;

struct PeriodStats
{
    std::uint64_t period = 0;
    std::uint32_t failures = 0; // feedback bits received by the base station
    std::uint32_t resyncs = 0;
    std::vector<std::uint32_t> failed_clients;
};

/**
 * Discrete-time model of one base station cell. Each period:
 *   1. the base station appends block t and every client learns h = t;
 *   2. clients with d^a > d send one feedback bit, answered in the same period by
 *      a reliable unicast of blocks t-d..t plus a registered-server signature;
 *   3. the multicast schedule is delivered to every client through its own lossy
 *      channel into its AuthTracker.
 * Period 0 multicasts the genesis block, which every client already holds.
 */
class Simulation
{
  public:
    explicit Simulation(SimConfig config, ChannelOverride override = {});
    Simulation(const Simulation&) = delete;
    Simulation& operator=(const Simulation&) = delete;

    PeriodStats step();

    std::uint64_t next_period() const { return next_period_; }
    std::uint32_t signatures() const { return signatures_; }
    const ChannelProbs& channel() const { return channel_; }
    const SimConfig& config() const { return config_; }
    const AuthTracker& client(std::size_t u) const { return clients_.at(u); }
    std::size_t client_count() const { return clients_.size(); }
    const std::vector<std::vector<ServerId>>& trusted_sets() const { return trusted_sets_; }
    const PeriodSchedule& last_schedule() const { return schedule_; }

  private:
    void multicast(std::uint64_t t);

    SimConfig config_;
    ChannelOverride override_;
    std::uint32_t signatures_;
    ChannelProbs channel_;
    MockSignatureScheme scheme_;
    HeaderChain chain_;
    Stream schedule_rng_;
    std::vector<Stream> channel_rngs_;
    std::vector<std::vector<ServerId>> trusted_sets_;
    std::vector<AuthTracker> clients_;
    PeriodSchedule schedule_;
    std::uint64_t next_period_ = 0;
};

struct SimReport
{
    double phi_empirical = 0.0;
    double ci95 = 0.0;
    std::vector<std::uint32_t> per_period_failures; // measured periods only
    std::uint64_t resync_count = 0;                 // measured periods only
    std::uint64_t measured_periods = 0;
    std::uint64_t periods = 0;
    std::uint64_t warmup = 0;
    std::uint64_t seed = 0;
    SystemParams params;
    std::uint32_t signatures = 0;
    std::string failure_rule = "d_a > d";

    /// Stable key order and number formatting, for byte comparisons.
    std::string to_json() const;
};

/// Throws InsufficientBudget or InvalidParams before simulating anything.
SimReport run(const SimConfig& config);

} // namespace repauth
