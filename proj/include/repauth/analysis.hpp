#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "repauth/codec.hpp"

namespace repauth
{

/**
 * Scalar parameters of a multicast cell: V servers feeding one base station that
 * multicasts to U clients over a lossy downlink with a fixed per-period bit budget.
 * The defaults are the Bitcoin-sized configuration used throughout the presets.
 */
struct SystemParams
{
    std::uint32_t servers = 20;             // V
    std::uint32_t clients = 20;             // U
    std::uint32_t budget_bits = 8000;       // b, multicast bits per block period
    std::uint32_t repetitions = 2;          // k, periods each block is repeated
    std::uint32_t max_delay = 10;           // d, tolerated authentication lag
    std::uint32_t block_bits = kHeaderBits;
    std::uint32_t signature_bits = kSignatureBits;
    double bit_error = 4e-4;                // P_bit
    std::uint32_t trusted_per_client = 1;   // V_u

    /// Throws InvalidParams when an invariant is violated. Does not check the budget.
    void validate() const;
};

struct ChannelProbs
{
    double block_loss = 0.0;     // p_eb
    double signature_loss = 0.0; // p_es
};

/**
 * Stationary model of one client's authentication process. `p[j]` is the probability
 * of moving from the "may fail" state to state j; p[0] is the failure (resync) branch.
 */
struct TransitionModel
{
    std::vector<double> p;
    std::uint32_t signatures = 0; // s after clamping to V
    ChannelProbs channel;
    double p_s = 0.0;
    double T = 0.0;
    double phi = 0.0;
    bool valid_region = false;     // V/s > d
    bool single_signature = false; // s == 1, accepted with a warning

    double p_fail() const { return p.front(); }
};

/// floor((b - k*l_b) / l_s). Throws InsufficientBudget when below one.
std::uint32_t signatures_per_period(std::uint32_t budget_bits, std::uint32_t repetitions,
                                    std::uint32_t block_bits, std::uint32_t signature_bits);

/// Same, clamped to V since the base station only holds V distinct signatures.
std::uint32_t signatures_per_period(const SystemParams& params);

ChannelProbs packet_loss_probs(double bit_error, std::uint32_t block_bits,
                               std::uint32_t signature_bits);

/// C(n, r) as a double. Integer-exact for n <= 64, log-gamma beyond. Zero if r > n.
double binomial(std::uint32_t n, std::uint32_t r);

/// Probability that exactly `trusted_sent` of the s sampled signatures are trusted ones.
double hypergeometric_weight(std::uint32_t servers, std::uint32_t trusted, std::uint32_t sent,
                             std::uint32_t trusted_sent);

/// Probability of receiving at least one trusted signature in a period.
double trusted_signature_prob(std::uint32_t servers, std::uint32_t trusted, std::uint32_t sent,
                              double signature_loss);

/**
 * Closed-form transition vector p[0..d]. Blocks in the window are indexed 1..d from
 * the oldest; block i has been repeated min(k, d-i+1) times by the time it is checked.
 */
std::vector<double> transition_probs(double p_s, double block_loss, std::uint32_t repetitions,
                                     std::uint32_t max_delay);

/**
 * Independent oracle for transition_probs: sums over all 4^d joint outcomes of
 * per-period signature and block reception. Throws TooLarge when d > max_window.
 */
std::vector<double> enumerate_transition_probs(double p_s, double block_loss,
                                               std::uint32_t repetitions, std::uint32_t max_delay,
                                               std::uint32_t max_window = 10);

/// Three-state chain over {0, 1, G}. `visits` is the unnormalized relative visit vector.
struct GroupedChain
{
    std::array<std::array<double, 3>, 3> P{};
    std::array<double, 3> visits{};
};

GroupedChain grouped_chain(std::span<const double> p);

/// Long-run fraction of periods spent in the "may fail" state.
double time_in_state_one(std::span<const double> p, std::uint32_t max_delay);

double average_failures(std::uint32_t clients, double time_in_one, double p_fail);

/// Full pipeline from SystemParams to Phi. Propagates InsufficientBudget.
TransitionModel qos(const SystemParams& params);

} // namespace repauth
