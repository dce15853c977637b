#include "repauth/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "repauth/error.hpp"

namespace repauth
{

namespace
{

bool is_probability(double x)
{
    return x >= 0.0 && x <= 1.0; // false for NaN
}

void require_probability(double x, const char* name)
{
    if (!is_probability(x))
        throw Error(Errc::InvalidParams, std::string(name) + " must lie in [0,1]");
}

void require_window(std::uint32_t repetitions, std::uint32_t max_delay)
{
    if (repetitions < 1 || repetitions > max_delay)
        throw Error(Errc::InvalidParams, "need 1 <= k <= d, got k=" + std::to_string(repetitions) +
                                             " d=" + std::to_string(max_delay));
}

// Blocks are indexed 1..d from the oldest in the window.
std::uint32_t transmissions(std::uint32_t index, std::uint32_t repetitions, std::uint32_t max_delay)
{
    return std::min(repetitions, max_delay - index + 1);
}

__extension__ typedef unsigned __int128 uint128;

std::uint64_t exact_binomial(std::uint32_t n, std::uint32_t r)
{
    r = std::min(r, n - r);
    uint128 acc = 1;
    for (std::uint32_t i = 1; i <= r; ++i)
        acc = acc * (n - r + i) / i; // exact: acc is C(n-r+i, i) after each step
    return static_cast<std::uint64_t>(acc);
}

} // namespace

void SystemParams::validate() const
{
    if (servers < 1)
        throw Error(Errc::InvalidParams, "V must be >= 1");
    if (clients < 1)
        throw Error(Errc::InvalidParams, "U must be >= 1");
    if (trusted_per_client < 1 || trusted_per_client > servers)
        throw Error(Errc::InvalidParams, "need 1 <= V_u <= V");
    if (budget_bits == 0 || block_bits == 0 || signature_bits == 0)
        throw Error(Errc::InvalidParams, "b, l_b and l_s must be positive");
    require_window(repetitions, max_delay);
    require_probability(bit_error, "P_bit");
}

std::uint32_t signatures_per_period(std::uint32_t budget_bits, std::uint32_t repetitions,
                                    std::uint32_t block_bits, std::uint32_t signature_bits)
{
    if (budget_bits == 0 || block_bits == 0 || signature_bits == 0 || repetitions < 1)
        throw Error(Errc::InvalidParams, "b, l_b, l_s and k must be positive");
    const std::int64_t spare = std::int64_t{budget_bits} - std::int64_t{repetitions} * block_bits;
    const std::int64_t s = spare < 0 ? -1 : spare / signature_bits;
    if (s < 1)
        throw Error(Errc::InsufficientBudget,
                    "budget of " + std::to_string(budget_bits) + " bits leaves no signature after " +
                        std::to_string(repetitions) + " block repetitions");
    return static_cast<std::uint32_t>(s);
}

std::uint32_t signatures_per_period(const SystemParams& params)
{
    const auto s = signatures_per_period(params.budget_bits, params.repetitions, params.block_bits,
                                         params.signature_bits);
    return std::min(s, params.servers);
}

ChannelProbs packet_loss_probs(double bit_error, std::uint32_t block_bits,
                               std::uint32_t signature_bits)
{
    require_probability(bit_error, "P_bit");
    auto loss = [bit_error](std::uint32_t bits) {
        if (bit_error == 1.0)
            return 1.0;
        // 1 - (1-P)^l without cancellation for small P
        return -std::expm1(bits * std::log1p(-bit_error));
    };
    return {loss(block_bits), loss(signature_bits)};
}

double binomial(std::uint32_t n, std::uint32_t r)
{
    if (r > n)
        return 0.0;
    if (n <= 64)
        return static_cast<double>(exact_binomial(n, r));
    return std::exp(std::lgamma(n + 1.0) - std::lgamma(r + 1.0) - std::lgamma(n - r + 1.0));
}

namespace
{

// P(J = j) for J trusted among `sent` drawn from `servers`, in extended precision.
long double weight_ld(std::uint32_t servers, std::uint32_t trusted, std::uint32_t sent, std::uint32_t j)
{
    if (j > trusted || j > sent || sent - j > servers - trusted)
        return 0.0L;
    if (servers <= 64)
    {
        const long double num = static_cast<long double>(exact_binomial(trusted, j)) *
                                static_cast<long double>(exact_binomial(servers - trusted, sent - j));
        return num / static_cast<long double>(exact_binomial(servers, sent));
    }
    auto log_binom = [](long double n, long double r) {
        return std::lgamma(n + 1.0L) - std::lgamma(r + 1.0L) - std::lgamma(n - r + 1.0L);
    };
    return std::exp(log_binom(trusted, j) + log_binom(servers - trusted, sent - j) - log_binom(servers, sent));
}

} // namespace

double hypergeometric_weight(std::uint32_t servers, std::uint32_t trusted, std::uint32_t sent,
                             std::uint32_t trusted_sent)
{
    return static_cast<double>(weight_ld(servers, trusted, sent, trusted_sent));
}

double trusted_signature_prob(std::uint32_t servers, std::uint32_t trusted, std::uint32_t sent,
                              double signature_loss)
{
    if (trusted < 1 || trusted > servers)
        throw Error(Errc::InvalidParams, "need 1 <= V_u <= V");
    if (sent < 1 || sent > servers)
        throw Error(Errc::InvalidParams, "need 1 <= s <= V");
    require_probability(signature_loss, "p_es");

    if (signature_loss == 1.0)
        return 0.0;
    // 1 - E[p_es^J], with J = 0 the case where no trusted server was picked
    long double miss = 0.0L;
    for (std::uint32_t j = 0; j <= std::min(trusted, sent); ++j)
        miss += weight_ld(servers, trusted, sent, j) * std::pow(static_cast<long double>(signature_loss), j);
    return std::clamp(static_cast<double>(1.0L - miss), 0.0, 1.0);
}

std::vector<double> transition_probs(double p_s, double block_loss, std::uint32_t repetitions,
                                     std::uint32_t max_delay)
{
    require_window(repetitions, max_delay);
    require_probability(p_s, "p_s");
    require_probability(block_loss, "p_eb");

    const std::uint32_t d = max_delay;
    const std::uint32_t full = d - repetitions + 1; // blocks that got all k repetitions
    const double block_ok = 1.0 - std::pow(block_loss, static_cast<double>(repetitions));

    std::vector<double> p(d + 1, 0.0);
    for (std::uint32_t j = 1; j <= d; ++j)
    {
        const double first_sig = p_s * std::pow(1.0 - p_s, static_cast<double>(j - 1));
        if (j <= full)
        {
            p[j] = first_sig * std::pow(block_ok, static_cast<double>(j));
        }
        else
        {
            double chained = std::pow(block_ok, static_cast<double>(full));
            for (std::uint32_t i = full + 1; i <= j; ++i)
                chained *= 1.0 - std::pow(block_loss, static_cast<double>(d - i + 1));
            p[j] = first_sig * chained;
        }
    }
    const double reached = std::accumulate(p.begin() + 1, p.end(), 0.0);
    p[0] = 1.0 - reached;
    return p;
}

std::vector<double> enumerate_transition_probs(double p_s, double block_loss,
                                               std::uint32_t repetitions, std::uint32_t max_delay,
                                               std::uint32_t max_window)
{
    require_window(repetitions, max_delay);
    require_probability(p_s, "p_s");
    require_probability(block_loss, "p_eb");
    if (max_delay > max_window)
        throw Error(Errc::TooLarge, "enumeration over d=" + std::to_string(max_delay) +
                                        " exceeds bound " + std::to_string(max_window));

    const std::uint32_t d = max_delay;
    std::vector<double> block_rx(d + 1);
    for (std::uint32_t i = 1; i <= d; ++i)
        block_rx[i] = 1.0 - std::pow(block_loss, static_cast<double>(transmissions(i, repetitions, d)));

    // Bit i-1 of `sigs` / `blocks` marks reception in window slot i.
    std::vector<double> p(d + 1, 0.0);
    const std::uint64_t outcomes = std::uint64_t{1} << d;
    for (std::uint64_t sigs = 0; sigs < outcomes; ++sigs)
    {
        for (std::uint64_t blocks = 0; blocks < outcomes; ++blocks)
        {
            double prob = 1.0;
            for (std::uint32_t i = 1; i <= d; ++i)
            {
                const bool s_rx = (sigs >> (i - 1)) & 1U;
                const bool b_rx = (blocks >> (i - 1)) & 1U;
                prob *= s_rx ? p_s : 1.0 - p_s;
                prob *= b_rx ? block_rx[i] : 1.0 - block_rx[i];
            }
            if (prob == 0.0)
                continue;

            // Oldest signature whose block and all older window blocks are held.
            std::uint32_t state = 0;
            for (std::uint32_t i = 1; i <= d; ++i)
            {
                if (!((blocks >> (i - 1)) & 1U))
                    break;
                if ((sigs >> (i - 1)) & 1U)
                {
                    state = i;
                    break;
                }
            }
            p[state] += prob;
        }
    }
    return p;
}

GroupedChain grouped_chain(std::span<const double> p)
{
    if (p.size() < 2)
        throw Error(Errc::InvalidParams, "transition vector needs at least p[0] and p[1]");
    const double grouped = std::accumulate(p.begin() + 2, p.end(), 0.0);

    GroupedChain chain;
    chain.P[0] = {0.0, 1.0, 0.0};
    chain.P[1] = {p[0], p[1], grouped};
    chain.P[2] = {0.0, 1.0, 0.0};
    chain.visits = {p[0], 1.0, grouped};
    return chain;
}

double time_in_state_one(std::span<const double> p, std::uint32_t max_delay)
{
    if (p.size() != max_delay + 1)
        throw Error(Errc::InvalidParams, "transition vector must have d+1 entries");
    double cycle = max_delay * p[0];
    for (std::uint32_t j = 1; j <= max_delay; ++j)
        cycle += j * p[j];
    return 1.0 / cycle;
}

double average_failures(std::uint32_t clients, double time_in_one, double p_fail)
{
    if (clients < 1)
        throw Error(Errc::InvalidParams, "U must be >= 1");
    return std::clamp(clients * time_in_one * p_fail, 0.0, static_cast<double>(clients));
}

TransitionModel qos(const SystemParams& params)
{
    params.validate();

    TransitionModel model;
    model.signatures = signatures_per_period(params);
    model.single_signature = model.signatures == 1;
    model.valid_region = params.servers > std::uint64_t{params.max_delay} * model.signatures;
    model.channel = packet_loss_probs(params.bit_error, params.block_bits, params.signature_bits);
    model.p_s = trusted_signature_prob(params.servers, params.trusted_per_client, model.signatures,
                                       model.channel.signature_loss);
    model.p = transition_probs(model.p_s, model.channel.block_loss, params.repetitions, params.max_delay);
    // 1 - sum can round a hair below zero
    model.p[0] = std::max(model.p[0], 0.0);
    model.T = time_in_state_one(model.p, params.max_delay);
    model.phi = average_failures(params.clients, model.T, model.p_fail());
    return model;
}

} // namespace repauth
