#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "repauth/analysis.hpp"
#include "repauth/sim.hpp"

namespace repauth
{

enum class Mode
{
    Analyze,
    Simulate,
    Compare,
};

/**
 * A parameter sweep. Each axis is a list; the grid is their Cartesian product,
 * materialized in ascending (V, U, V_u, k, P_bit) order. An empty `clients` axis
 * ties U to V.
 *
 * JSON keys: mode, p_bit, k, V, U, V_u, b, d, l_b, l_s, periods, warmup, seeds,
 * analysis_d, jobs, out. Axes accept a number or a list. `periods` counts measured
 * periods; the warm-up is simulated on top of it.
 */
struct ExperimentSpec
{
    Mode mode = Mode::Analyze;
    std::vector<double> bit_errors{4e-4};
    std::vector<std::uint32_t> repetitions{2};
    std::vector<std::uint32_t> servers{20};
    std::vector<std::uint32_t> clients; // empty: U = V
    std::vector<std::uint32_t> trusted{1};
    std::uint32_t budget_bits = 8000;
    std::uint32_t max_delay = 10;
    std::uint32_t block_bits = kHeaderBits;
    std::uint32_t signature_bits = kSignatureBits;

    std::uint64_t periods = 200'000;
    std::optional<std::uint64_t> warmup;
    std::vector<std::uint64_t> seeds{1};
    /// Evaluate the analytical side of `compare` at this d instead (negative control).
    std::optional<std::uint32_t> analysis_max_delay;

    unsigned jobs = 1;
    std::string out; // empty: stdout

    /// Throws Error(Config) on unknown keys or ill-typed values.
    static ExperimentSpec from_json_text(const std::string& text);

    std::vector<SystemParams> grid() const;
};

/// Header row plus preformatted cells. Floating point cells carry 12 significant digits.
struct CsvTable
{
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    /// A non-empty `comment` is written first as "# <comment>".
    std::string render(const std::string& comment = {}) const;
};

CsvTable analyze_table(const ExperimentSpec& spec);
CsvTable simulate_table(const ExperimentSpec& spec);

struct CompareOutcome
{
    CsvTable table;
    std::size_t checked = 0; // rows without an error code
    std::size_t failed = 0;
};

/// |phi_sim - phi_an| <= max(0.10 * phi_an, 3 * ci95)
bool within_tolerance(double analytical, double empirical, double ci95);

CompareOutcome compare_table(const ExperimentSpec& spec);

/// V = U in {10, 20, 40}, k in {2, 5}, V_u = 1, P_bit in {1..10} x 1e-4.
ExperimentSpec fig7_spec();

/// V = U = 100, k in 1..10, V_u in {1, 5}, P_bit = 4e-4.
ExperimentSpec fig8_spec();

/// gnuplot script drawing analytical lines and simulated points from a compare CSV.
std::string fig7_plot_script(const std::string& csv_path);
std::string fig8_plot_script(const std::string& csv_path);

std::string format_number(double value);

} // namespace repauth
