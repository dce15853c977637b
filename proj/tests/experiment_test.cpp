#include <gtest/gtest.h>

#include "repauth/error.hpp"
#include "repauth/experiment.hpp"

using namespace repauth;

namespace
{

std::size_t column(const CsvTable& t, const std::string& name)
{
    const auto it = std::find(t.columns.begin(), t.columns.end(), name);
    if (it == t.columns.end())
        throw std::runtime_error("no column " + name);
    return static_cast<std::size_t>(it - t.columns.begin());
}

const std::string& cell(const CsvTable& t, std::size_t row, const std::string& name)
{
    return t.rows.at(row).at(column(t, name));
}

} // namespace

TEST(Config, ParsesAxesAndScalars)
{
    const auto spec = ExperimentSpec::from_json_text(R"({
        "mode": "compare", "p_bit": [2e-4, 1e-4], "k": 5, "V": [20, 10], "V_u": [1, 5],
        "b": 9000, "d": 8, "periods": 1000, "warmup": 80, "seeds": [3, 4],
        "analysis_d": 7, "jobs": 2, "out": "x.csv"})");
    EXPECT_EQ(spec.mode, Mode::Compare);
    EXPECT_EQ(spec.bit_errors, (std::vector<double>{2e-4, 1e-4}));
    EXPECT_EQ(spec.repetitions, (std::vector<std::uint32_t>{5}));
    EXPECT_EQ(spec.budget_bits, 9000u);
    EXPECT_EQ(spec.max_delay, 8u);
    EXPECT_EQ(spec.periods, 1000u);
    EXPECT_EQ(spec.warmup, 80u);
    EXPECT_EQ(spec.seeds, (std::vector<std::uint64_t>{3, 4}));
    EXPECT_EQ(spec.analysis_max_delay, 7u);
    EXPECT_EQ(spec.jobs, 2u);
    EXPECT_EQ(spec.out, "x.csv");
}

TEST(Config, RejectsBadConfigs)
{
    for (const char* text : {"{", "[1,2]", R"({"bogus": 1})", R"({"mode": "plot"})", R"({"k": "two"})",
                             R"({"V": [1, "x"]})", R"({"d": -3})"})
    {
        try
        {
            ExperimentSpec::from_json_text(text);
            ADD_FAILURE() << text;
        }
        catch (const Error& e)
        {
            EXPECT_EQ(e.code(), Errc::Config) << text;
        }
    }
}

TEST(Config, GridOrderAndDefaults)
{
    ExperimentSpec spec;
    spec.servers = {20, 10};
    spec.repetitions = {5, 2};
    spec.bit_errors = {2e-4, 1e-4};
    const auto grid = spec.grid();
    ASSERT_EQ(grid.size(), 8u);
    EXPECT_EQ(grid[0].servers, 10u);
    EXPECT_EQ(grid[0].clients, 10u); // U follows V
    EXPECT_EQ(grid[0].repetitions, 2u);
    EXPECT_EQ(grid[0].bit_error, 1e-4);
    EXPECT_EQ(grid[1].bit_error, 2e-4);
    EXPECT_EQ(grid[2].repetitions, 5u);
    EXPECT_EQ(grid[4].servers, 20u);
    EXPECT_EQ(grid[4].clients, 20u);

    spec.clients = {7};
    for (const auto& p : spec.grid())
        EXPECT_EQ(p.clients, 7u);

    spec.bit_errors.clear();
    EXPECT_TRUE(spec.grid().empty());
}

TEST(Analyze, KnownRows)
{
    ExperimentSpec spec;
    spec.servers = {20};
    spec.repetitions = {2, 5};
    spec.bit_errors = {0.0, 4e-4};
    const auto t = analyze_table(spec);
    ASSERT_EQ(t.rows.size(), 4u);
    EXPECT_EQ(t.columns.front(), "V");
    EXPECT_EQ(t.columns.back(), "error");
    EXPECT_EQ(cell(t, 0, "s"), "13");
    EXPECT_EQ(cell(t, 2, "s"), "9");
    EXPECT_EQ(cell(t, 0, "p_eb"), "0");
    // A single trusted server can still go unsampled for d+1 periods.
    EXPECT_NE(cell(t, 0, "phi"), "0");
    EXPECT_EQ(cell(t, 1, "p_eb"), "0.225897676834");
    EXPECT_EQ(cell(t, 1, "p_es"), "0.185223120678");
    EXPECT_EQ(cell(t, 1, "valid"), "false"); // 20 <= 10 * 13
    EXPECT_EQ(cell(t, 1, "error"), "");

    spec.trusted = {20};
    EXPECT_EQ(cell(analyze_table(spec), 0, "phi"), "0");
}

TEST(Analyze, ErrorRowsKeepTheirPlace)
{
    ExperimentSpec spec;
    spec.servers = {20};
    spec.repetitions = {2, 11}; // k > d
    const auto t = analyze_table(spec);
    ASSERT_EQ(t.rows.size(), 2u);
    EXPECT_EQ(cell(t, 0, "error"), "");
    EXPECT_EQ(cell(t, 1, "error"), "InvalidParams");
    EXPECT_EQ(cell(t, 1, "phi"), "");

    spec.repetitions = {2};
    spec.budget_bits = 1000;
    const auto poor = analyze_table(spec);
    EXPECT_EQ(cell(poor, 0, "error"), "InsufficientBudget");
    for (const auto& row : poor.rows)
        EXPECT_EQ(row.size(), poor.columns.size());
}

TEST(Analyze, RendersCsv)
{
    ExperimentSpec spec;
    const auto t = analyze_table(spec);
    const auto text = t.render("generated now");
    EXPECT_EQ(text.rfind("# generated now\nV,U,V_u,k,d,b,l_b,l_s,p_bit,s,", 0), 0u);
    EXPECT_EQ(t.render().rfind("V,U,", 0), 0u);
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 3);
}

TEST(Simulate, DeterministicAndParallelSafe)
{
    ExperimentSpec spec;
    spec.mode = Mode::Simulate;
    spec.servers = {10};
    spec.repetitions = {2, 5};
    spec.bit_errors = {8e-4};
    spec.periods = 2'000;
    spec.seeds = {1, 2};
    const auto serial = simulate_table(spec).render();
    spec.jobs = 3;
    EXPECT_EQ(simulate_table(spec).render(), serial);

    const auto t = simulate_table(spec);
    ASSERT_EQ(t.rows.size(), 4u);
    EXPECT_EQ(cell(t, 0, "seed"), "1");
    EXPECT_EQ(cell(t, 1, "seed"), "2");
    EXPECT_EQ(cell(t, 0, "periods"), "2000");
    EXPECT_EQ(cell(t, 0, "warmup"), "100");
}

TEST(Compare, PassesAtMatchingDelay)
{
    ExperimentSpec spec;
    spec.mode = Mode::Compare;
    spec.servers = {10};
    spec.repetitions = {2};
    spec.bit_errors = {6e-4};
    spec.periods = 20'000;
    const auto outcome = compare_table(spec);
    EXPECT_EQ(outcome.checked, 1u);
    EXPECT_EQ(outcome.failed, 0u);
    EXPECT_EQ(cell(outcome.table, 0, "pass"), "true");
}

TEST(Compare, MismatchedDelayIsCaught)
{
    ExperimentSpec spec;
    spec.mode = Mode::Compare;
    spec.servers = {10};
    spec.repetitions = {2};
    spec.bit_errors = {6e-4};
    spec.periods = 20'000;
    spec.analysis_max_delay = 3;
    const auto outcome = compare_table(spec);
    EXPECT_EQ(outcome.checked, 1u);
    EXPECT_EQ(outcome.failed, 1u);
    EXPECT_EQ(cell(outcome.table, 0, "pass"), "false");
}

TEST(Compare, ErrorRowsAreNotChecked)
{
    ExperimentSpec spec;
    spec.mode = Mode::Compare;
    spec.budget_bits = 1000;
    spec.periods = 500;
    const auto outcome = compare_table(spec);
    EXPECT_EQ(outcome.checked, 0u);
    EXPECT_EQ(outcome.failed, 0u);
    EXPECT_EQ(cell(outcome.table, 0, "error"), "InsufficientBudget");

    spec.bit_errors.clear();
    EXPECT_TRUE(compare_table(spec).table.rows.empty());
}

TEST(Tolerance, Rule)
{
    EXPECT_TRUE(within_tolerance(1.0, 1.09, 0.0));
    EXPECT_FALSE(within_tolerance(1.0, 1.11, 0.0));
    EXPECT_TRUE(within_tolerance(1.0, 1.2, 0.07));
    EXPECT_TRUE(within_tolerance(0.0, 0.0, 0.0));
    EXPECT_FALSE(within_tolerance(0.0, 0.01, 0.0));
}

TEST(Presets, Fig7)
{
    const auto spec = fig7_spec();
    const auto grid = spec.grid();
    EXPECT_EQ(grid.size(), 60u);
    for (const auto& p : grid)
    {
        EXPECT_EQ(p.clients, p.servers);
        EXPECT_EQ(p.trusted_per_client, 1u);
        EXPECT_EQ(p.max_delay, 10u);
        EXPECT_EQ(p.budget_bits, 8000u);
    }
    EXPECT_GE(spec.periods, 200'000u);
    EXPECT_NE(fig7_plot_script("out.csv").find("'out.csv'"), std::string::npos);
}

TEST(Presets, Fig8PointsInValidRegion)
{
    const auto spec = fig8_spec();
    std::size_t valid = 0;
    for (const auto& p : spec.grid())
    {
        EXPECT_EQ(p.bit_error, 4e-4);
        const auto s = signatures_per_period(p);
        if (p.repetitions >= 5)
        {
            EXPECT_GT(p.servers, p.max_delay * s);
            ++valid;
        }
    }
    EXPECT_EQ(valid, 12u);
}

TEST(Format, TwelveSignificantDigits)
{
    EXPECT_EQ(format_number(0.1), "0.1");
    EXPECT_EQ(format_number(1.0 / 3.0), "0.333333333333");
    EXPECT_EQ(format_number(1e-4), "0.0001");
    EXPECT_EQ(format_number(0.0), "0");
}
