// repauth: sweeps over the analytical QoS model and the multicast simulator.
//
//   repauth analyze  --config sweep.json --out phi.csv
//   repauth simulate --config sweep.json --seeds 1..5 --jobs 4
//   repauth compare  --config sweep.json          (exit 2 on any out-of-tolerance point)
//   repauth fig7 --plot fig7.gp --out fig7.csv
//   repauth fig8 --periods 20000

#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "repauth/error.hpp"
#include "repauth/experiment.hpp"

using namespace repauth;

namespace
{

struct Overrides
{
    std::string config;
    std::string out;
    std::string plot;
    std::optional<std::uint64_t> seed;
    std::string seeds;
    std::optional<std::uint64_t> periods;
    std::optional<std::uint64_t> warmup;
    std::optional<unsigned> jobs;
    bool no_timestamp = false;
};

std::string read_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(Errc::Io, "cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_output(const std::string& path, const std::string& text)
{
    if (path.empty())
    {
        std::cout << text;
        return;
    }
    std::ofstream out(path);
    if (!out || !(out << text))
        throw Error(Errc::Io, "cannot write " + path);
}

std::vector<std::uint64_t> parse_seed_range(const std::string& text)
{
    const auto dots = text.find("..");
    try
    {
        if (dots == std::string::npos)
            return {std::stoull(text)};
        const auto lo = std::stoull(text.substr(0, dots));
        const auto hi = std::stoull(text.substr(dots + 2));
        if (hi < lo)
            throw Error(Errc::Config, "empty seed range " + text);
        std::vector<std::uint64_t> seeds;
        for (auto s = lo; s <= hi; ++s)
            seeds.push_back(s);
        return seeds;
    }
    catch (const std::logic_error&)
    {
        throw Error(Errc::Config, "bad seed range '" + text + "', expected N..M");
    }
}

std::string timestamp_comment()
{
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm utc{};
    gmtime_r(&now, &utc);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &utc);
    return std::string("generated ") + buf;
}

ExperimentSpec resolve(ExperimentSpec spec, const Overrides& o)
{
    if (!o.config.empty())
        spec = ExperimentSpec::from_json_text(read_file(o.config));
    if (!o.out.empty()) spec.out = o.out;
    if (o.seed) spec.seeds = {*o.seed};
    if (!o.seeds.empty()) spec.seeds = parse_seed_range(o.seeds);
    if (o.periods) spec.periods = *o.periods;
    if (o.warmup) spec.warmup = *o.warmup;
    if (o.jobs) spec.jobs = *o.jobs;
    return spec;
}

void add_common(CLI::App* cmd, Overrides& o, bool with_plot)
{
    cmd->add_option("--config", o.config, "JSON sweep description");
    cmd->add_option("--out", o.out, "CSV output path (default stdout)");
    cmd->add_option("--seed", o.seed, "single simulation seed");
    cmd->add_option("--seeds", o.seeds, "seed range N..M");
    cmd->add_option("--periods", o.periods, "measured periods per simulated point");
    cmd->add_option("--warmup", o.warmup, "warm-up periods (default 10*d)");
    cmd->add_option("--jobs", o.jobs, "parallel grid points");
    cmd->add_flag("--no-timestamp", o.no_timestamp, "omit the '# generated' header line");
    if (with_plot)
        cmd->add_option("--plot", o.plot, "also write a gnuplot script here");
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Repeat-authenticate multicast: analytical QoS and Monte Carlo simulation"};
    app.require_subcommand(1);

    Overrides o;
    auto* analyze = app.add_subcommand("analyze", "closed-form Phi over a parameter grid");
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo Phi over a parameter grid");
    auto* compare = app.add_subcommand("compare", "join both engines and check the tolerance");
    auto* fig7 = app.add_subcommand("fig7", "Phi versus P_bit for V in {10,20,40}, k in {2,5}");
    auto* fig8 = app.add_subcommand("fig8", "Phi versus k for V_u in {1,5} at P_bit = 4e-4");
    add_common(analyze, o, false);
    add_common(simulate, o, false);
    add_common(compare, o, false);
    add_common(fig7, o, true);
    add_common(fig8, o, true);

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e)
    {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try
    {
        const std::string comment = o.no_timestamp ? "" : timestamp_comment();
        if (analyze->parsed())
        {
            const auto spec = resolve({}, o);
            write_output(spec.out, analyze_table(spec).render(comment));
            return 0;
        }
        if (simulate->parsed())
        {
            const auto spec = resolve({}, o);
            write_output(spec.out, simulate_table(spec).render(comment));
            return 0;
        }
        if (compare->parsed())
        {
            const auto spec = resolve({}, o);
            const auto outcome = compare_table(spec);
            write_output(spec.out, outcome.table.render(comment));
            std::cerr << "compare: " << outcome.checked - outcome.failed << "/" << outcome.checked
                      << " points within tolerance\n";
            return outcome.failed > 0 ? 2 : 0;
        }

        const bool is7 = fig7->parsed();
        const auto spec = resolve(is7 ? fig7_spec() : fig8_spec(), o);
        const auto outcome = compare_table(spec);
        write_output(spec.out, outcome.table.render(comment));
        if (!o.plot.empty())
        {
            const std::string csv = spec.out.empty() ? "fig.csv" : spec.out;
            write_output(o.plot, is7 ? fig7_plot_script(csv) : fig8_plot_script(csv));
        }
        std::cerr << (is7 ? "fig7" : "fig8") << ": " << outcome.checked - outcome.failed << "/"
                  << outcome.checked << " points within tolerance\n";
        return 0;
    }
    catch (const Error& e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
