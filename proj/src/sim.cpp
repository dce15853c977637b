#include "repauth/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json.hpp"

#include "repauth/error.hpp"

namespace repauth
{

namespace
{

std::uint64_t splitmix_finalize(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// First `count` entries of a uniformly shuffled 1..servers.
std::vector<ServerId> sample_servers(std::uint32_t servers, std::uint32_t count, Stream& rng)
{
    std::vector<ServerId> pool(servers);
    std::iota(pool.begin(), pool.end(), ServerId{1});
    for (std::uint32_t i = 0; i < count; ++i)
    {
        const auto j = i + rng.below(servers - i);
        std::swap(pool[i], pool[j]);
    }
    pool.resize(count);
    return pool;
}

} // namespace

std::uint64_t substream_seed(std::uint64_t master, StreamPurpose purpose, std::uint64_t index)
{
    const auto tag = (static_cast<std::uint64_t>(purpose) << 48) ^ index;
    return splitmix_finalize(master + splitmix_finalize(tag));
}

void SimConfig::validate() const
{
    params.validate();
    const auto warm = effective_warmup();
    if (warm < params.max_delay)
        throw Error(Errc::InvalidParams, "warm-up must be at least d periods");
    if (periods <= warm)
        throw Error(Errc::InvalidParams, "periods must exceed the warm-up");
    if (!trusted_sets.empty())
    {
        if (trusted_sets.size() != params.clients)
            throw Error(Errc::InvalidParams, "need one trusted set per client");
        for (const auto& set : trusted_sets)
        {
            if (set.empty())
                throw Error(Errc::InvalidParams, "trusted sets must be nonempty");
            for (ServerId id : set)
                if (id < 1 || id > params.servers)
                    throw Error(Errc::InvalidParams, "trusted server id outside 1..V");
        }
    }
}

PeriodSchedule schedule_period(std::uint64_t period, const SystemParams& params, Stream& rng)
{
    PeriodSchedule schedule;
    schedule.period = period;
    const std::uint64_t first = period + 1 >= params.repetitions ? period + 1 - params.repetitions : 0;
    for (std::uint64_t h = first; h <= period; ++h)
        schedule.block_heights.push_back(h);
    schedule.signature_servers = sample_servers(params.servers, signatures_per_period(params), rng);
    return schedule;
}

bool deliver(PacketKind kind, const ChannelProbs& channel, Stream& rng)
{
    const double loss = kind == PacketKind::Block ? channel.block_loss : channel.signature_loss;
    return !rng.bernoulli(loss);
}

Simulation::Simulation(SimConfig config, ChannelOverride override)
    : config_(std::move(config)),
      override_(std::move(override)),
      signatures_((config_.validate(), signatures_per_period(config_.params))),
      channel_(packet_loss_probs(config_.params.bit_error, config_.params.block_bits,
                                 config_.params.signature_bits)),
      scheme_(config_.params.servers, config_.key_seed),
      chain_(config_.seed),
      schedule_rng_(config_.seed, StreamPurpose::Schedule, 0)
{
    const SystemParams& p = config_.params;
    trusted_sets_ = config_.trusted_sets;
    if (trusted_sets_.empty())
    {
        for (std::uint32_t u = 0; u < p.clients; ++u)
        {
            Stream trust_rng(config_.seed, StreamPurpose::Trust, u);
            trusted_sets_.push_back(sample_servers(p.servers, p.trusted_per_client, trust_rng));
        }
    }

    channel_rngs_.reserve(p.clients);
    clients_.reserve(p.clients);
    for (std::uint32_t u = 0; u < p.clients; ++u)
    {
        channel_rngs_.emplace_back(config_.seed, StreamPurpose::Channel, u);
        clients_.emplace_back(scheme_, trusted_sets_[u], trusted_sets_[u].front(), p.max_delay);
    }
}

PeriodStats Simulation::step()
{
    const std::uint64_t t = next_period_++;
    const std::uint32_t d = config_.params.max_delay;

    if (t > 0)
        chain_.append();
    for (auto& client : clients_)
        client.observe_height(t);

    PeriodStats stats;
    stats.period = t;
    for (std::uint32_t u = 0; u < clients_.size(); ++u)
    {
        AuthTracker& client = clients_[u];
        if (!client.needs_feedback(d))
            continue;
        ++stats.failures;
        stats.failed_clients.push_back(u);

        const std::uint64_t lo = t > d ? t - d : 0;
        const auto window = chain_.range(lo, t);
        client.resync(window, sign_header(scheme_, client.registered_server(), chain_.at(t)));
        ++stats.resyncs;
    }

    multicast(t);

    const std::uint64_t keep = std::uint64_t{d} + config_.params.repetitions + 1;
    if (t > keep)
        chain_.prune_below(t - keep);
    return stats;
}

void Simulation::multicast(std::uint64_t t)
{
    schedule_ = schedule_period(t, config_.params, schedule_rng_);

    const BlockHeader& newest = chain_.at(t);
    std::vector<SignatureRecord> sigs;
    sigs.reserve(schedule_.signature_servers.size());
    for (ServerId server : schedule_.signature_servers)
        sigs.push_back(sign_header(scheme_, server, newest));

    for (std::uint32_t u = 0; u < clients_.size(); ++u)
    {
        AuthTracker& client = clients_[u];
        Stream& rng = channel_rngs_[u];
        auto received = [&](PacketKind kind, std::uint64_t height, ServerId server) {
            if (override_)
                if (auto forced = override_(DeliveryEvent{t, u, kind, height, server}))
                    return *forced;
            return deliver(kind, channel_, rng);
        };

        for (std::uint64_t h : schedule_.block_heights)
            if (received(PacketKind::Block, h, 0))
                client.record_block(chain_.at(h));
        for (const SignatureRecord& sig : sigs)
            if (received(PacketKind::Signature, sig.height, sig.server_id))
                client.record_signature(sig);
    }
}

std::string SimReport::to_json() const
{
    nlohmann::json j;
    j["phi_empirical"] = phi_empirical;
    j["ci95"] = ci95;
    j["per_period_failures"] = per_period_failures;
    j["resync_count"] = resync_count;
    j["measured_periods"] = measured_periods;
    j["periods"] = periods;
    j["warmup"] = warmup;
    j["seed"] = seed;
    j["signatures"] = signatures;
    j["failure_rule"] = failure_rule;
    j["params"] = {
        {"V", params.servers},        {"U", params.clients},
        {"b", params.budget_bits},    {"k", params.repetitions},
        {"d", params.max_delay},      {"l_b", params.block_bits},
        {"l_s", params.signature_bits}, {"P_bit", params.bit_error},
        {"V_u", params.trusted_per_client},
    };
    return j.dump();
}

SimReport run(const SimConfig& config)
{
    Simulation sim(config);

    SimReport report;
    report.params = config.params;
    report.seed = config.seed;
    report.periods = config.periods;
    report.warmup = config.effective_warmup();
    report.signatures = sim.signatures();
    report.measured_periods = config.periods - report.warmup;
    report.per_period_failures.reserve(report.measured_periods);

    for (std::uint64_t t = 0; t < config.periods; ++t)
    {
        const PeriodStats stats = sim.step();
        if (t < report.warmup)
            continue;
        report.per_period_failures.push_back(stats.failures);
        report.resync_count += stats.resyncs;
    }

    const double n = static_cast<double>(report.measured_periods);
    double sum = 0.0;
    for (auto f : report.per_period_failures)
        sum += f;
    const double mean = sum / n;
    double sq = 0.0;
    for (auto f : report.per_period_failures)
        sq += (f - mean) * (f - mean);
    const double sd = n > 1 ? std::sqrt(sq / (n - 1)) : 0.0;
    report.phi_empirical = mean;
    report.ci95 = 1.96 * sd / std::sqrt(n);
    return report;
}

} // namespace repauth
