#include "repauth/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <set>
#include <sstream>
#include <thread>
#include <type_traits>

#include "json.hpp"

#include "repauth/error.hpp"

namespace repauth
{

namespace
{

using nlohmann::json;

// nlohmann converts negative numbers to unsigned types silently.
template <typename T> void require_type(const json& value, const char* key)
{
    bool ok = true;
    if constexpr (std::is_unsigned_v<T>)
        ok = value.is_number_unsigned();
    else if constexpr (std::is_floating_point_v<T>)
        ok = value.is_number();
    if (!ok)
        throw Error(Errc::Config, std::string("bad value for '") + key + "': " + value.dump());
}

template <typename T> std::vector<T> axis(const json& value, const char* key)
{
    try
    {
        if (value.is_array())
        {
            for (const auto& item : value)
                require_type<T>(item, key);
            return value.get<std::vector<T>>();
        }
        require_type<T>(value, key);
        return {value.get<T>()};
    }
    catch (const json::exception& e)
    {
        throw Error(Errc::Config, std::string("bad value for '") + key + "': " + e.what());
    }
}

template <typename T> T scalar(const json& value, const char* key)
{
    require_type<T>(value, key);
    try
    {
        return value.get<T>();
    }
    catch (const json::exception& e)
    {
        throw Error(Errc::Config, std::string("bad value for '") + key + "': " + e.what());
    }
}

// Runs fn(i) for i in [0, n) on up to `jobs` threads; results land by index.
void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn)
{
    jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(n)));
    if (jobs <= 1)
    {
        for (std::size_t i = 0; i < n; ++i)
            fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    for (unsigned w = 0; w < jobs; ++w)
        workers.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++)
                fn(i);
        });
    for (auto& worker : workers)
        worker.join();
}

std::vector<std::string> point_cells(const SystemParams& p)
{
    return {std::to_string(p.servers),     std::to_string(p.clients),     std::to_string(p.trusted_per_client),
            std::to_string(p.repetitions), std::to_string(p.max_delay),   std::to_string(p.budget_bits),
            std::to_string(p.block_bits),  std::to_string(p.signature_bits), format_number(p.bit_error)};
}

const std::vector<std::string> kPointColumns = {"V", "U", "V_u", "k", "d", "b", "l_b", "l_s", "p_bit"};

std::vector<std::string> with_point(std::vector<std::string> tail)
{
    std::vector<std::string> cols = kPointColumns;
    cols.insert(cols.end(), tail.begin(), tail.end());
    return cols;
}

std::string flag(bool b)
{
    return b ? "true" : "false";
}

/// With V_u = 1 and U <= V, client u trusts server u+1 alone. Otherwise sets are sampled.
SimConfig sim_config(const SystemParams& params, const ExperimentSpec& spec, std::uint64_t seed)
{
    SimConfig config;
    config.params = params;
    config.seed = seed;
    config.warmup = spec.warmup;
    config.periods = config.effective_warmup() + spec.periods;
    if (params.trusted_per_client == 1 && params.clients <= params.servers)
        for (std::uint32_t u = 0; u < params.clients; ++u)
            config.trusted_sets.push_back({static_cast<ServerId>(u + 1)});
    return config;
}

struct Job
{
    SystemParams params;
    std::uint64_t seed;
};

std::vector<Job> sim_jobs(const ExperimentSpec& spec)
{
    std::vector<Job> jobs;
    for (const auto& params : spec.grid())
        for (auto seed : spec.seeds)
            jobs.push_back({params, seed});
    return jobs;
}

} // namespace

std::string format_number(double value)
{
    if (std::isinf(value))
        return value > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", value);
    return buf;
}

ExperimentSpec ExperimentSpec::from_json_text(const std::string& text)
{
    json doc;
    try
    {
        doc = json::parse(text);
    }
    catch (const json::parse_error& e)
    {
        throw Error(Errc::Config, std::string("config is not valid JSON: ") + e.what());
    }
    if (!doc.is_object())
        throw Error(Errc::Config, "config must be a JSON object");

    ExperimentSpec spec;
    for (const auto& [key, value] : doc.items())
    {
        if (key == "mode")
        {
            const auto mode = scalar<std::string>(value, "mode");
            if (mode == "analyze") spec.mode = Mode::Analyze;
            else if (mode == "simulate") spec.mode = Mode::Simulate;
            else if (mode == "compare") spec.mode = Mode::Compare;
            else throw Error(Errc::Config, "unknown mode '" + mode + "'");
        }
        else if (key == "p_bit") spec.bit_errors = axis<double>(value, "p_bit");
        else if (key == "k") spec.repetitions = axis<std::uint32_t>(value, "k");
        else if (key == "V") spec.servers = axis<std::uint32_t>(value, "V");
        else if (key == "U") spec.clients = axis<std::uint32_t>(value, "U");
        else if (key == "V_u") spec.trusted = axis<std::uint32_t>(value, "V_u");
        else if (key == "b") spec.budget_bits = scalar<std::uint32_t>(value, "b");
        else if (key == "d") spec.max_delay = scalar<std::uint32_t>(value, "d");
        else if (key == "l_b") spec.block_bits = scalar<std::uint32_t>(value, "l_b");
        else if (key == "l_s") spec.signature_bits = scalar<std::uint32_t>(value, "l_s");
        else if (key == "periods") spec.periods = scalar<std::uint64_t>(value, "periods");
        else if (key == "warmup") spec.warmup = scalar<std::uint64_t>(value, "warmup");
        else if (key == "seeds") spec.seeds = axis<std::uint64_t>(value, "seeds");
        else if (key == "analysis_d") spec.analysis_max_delay = scalar<std::uint32_t>(value, "analysis_d");
        else if (key == "jobs") spec.jobs = scalar<unsigned>(value, "jobs");
        else if (key == "out") spec.out = scalar<std::string>(value, "out");
        else throw Error(Errc::Config, "unknown config key '" + key + "'");
    }
    return spec;
}

std::vector<SystemParams> ExperimentSpec::grid() const
{
    auto sorted = [](auto values) {
        std::sort(values.begin(), values.end());
        values.erase(std::unique(values.begin(), values.end()), values.end());
        return values;
    };
    const auto vs = sorted(servers);
    const auto vus = sorted(trusted);
    const auto ks = sorted(repetitions);
    const auto ps = sorted(bit_errors);

    std::vector<SystemParams> points;
    for (auto v : vs)
    {
        const auto us = clients.empty() ? std::vector<std::uint32_t>{v} : sorted(clients);
        for (auto u : us)
            for (auto vu : vus)
                for (auto k : ks)
                    for (auto p : ps)
                    {
                        SystemParams params;
                        params.servers = v;
                        params.clients = u;
                        params.trusted_per_client = vu;
                        params.repetitions = k;
                        params.bit_error = p;
                        params.budget_bits = budget_bits;
                        params.max_delay = max_delay;
                        params.block_bits = block_bits;
                        params.signature_bits = signature_bits;
                        points.push_back(params);
                    }
    }
    return points;
}

std::string CsvTable::render(const std::string& comment) const
{
    std::ostringstream out;
    if (!comment.empty())
        out << "# " << comment << '\n';
    auto line = [&out](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i)
            out << (i ? "," : "") << cells[i];
        out << '\n';
    };
    line(columns);
    for (const auto& row : rows)
        line(row);
    return out.str();
}

CsvTable analyze_table(const ExperimentSpec& spec)
{
    CsvTable table;
    table.columns = with_point({"s", "p_eb", "p_es", "p_s", "p_10", "T", "phi", "valid", "error"});
    for (const auto& params : spec.grid())
    {
        auto row = point_cells(params);
        try
        {
            const TransitionModel m = qos(params);
            for (const auto& cell :
                 {std::to_string(m.signatures), format_number(m.channel.block_loss),
                  format_number(m.channel.signature_loss), format_number(m.p_s), format_number(m.p_fail()),
                  format_number(m.T), format_number(m.phi), flag(m.valid_region), std::string{}})
                row.push_back(cell);
        }
        catch (const Error& e)
        {
            row.insert(row.end(), 8, "");
            row.emplace_back(errc_name(e.code()));
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

CsvTable simulate_table(const ExperimentSpec& spec)
{
    CsvTable table;
    table.columns = with_point(
        {"seed", "s", "periods", "warmup", "phi_empirical", "ci95", "resync_count", "error"});

    const auto jobs = sim_jobs(spec);
    table.rows.resize(jobs.size());
    parallel_for(jobs.size(), spec.jobs, [&](std::size_t i) {
        const Job& job = jobs[i];
        auto row = point_cells(job.params);
        row.push_back(std::to_string(job.seed));
        try
        {
            const SimReport r = run(sim_config(job.params, spec, job.seed));
            for (const auto& cell :
                 {std::to_string(r.signatures), std::to_string(r.measured_periods), std::to_string(r.warmup),
                  format_number(r.phi_empirical), format_number(r.ci95), std::to_string(r.resync_count),
                  std::string{}})
                row.push_back(cell);
        }
        catch (const Error& e)
        {
            row.insert(row.end(), 6, "");
            row.emplace_back(errc_name(e.code()));
        }
        table.rows[i] = std::move(row);
    });
    return table;
}

bool within_tolerance(double analytical, double empirical, double ci95)
{
    return std::abs(empirical - analytical) <= std::max(0.10 * analytical, 3.0 * ci95);
}

CompareOutcome compare_table(const ExperimentSpec& spec)
{
    CompareOutcome outcome;
    outcome.table.columns = with_point({"seed", "s", "valid", "phi_analytical", "phi_empirical", "ci95",
                                        "abs_err", "rel_err", "pass", "error"});

    const auto jobs = sim_jobs(spec);
    std::vector<int> verdicts(jobs.size(), -1); // -1 error row, 0 fail, 1 pass
    outcome.table.rows.resize(jobs.size());
    parallel_for(jobs.size(), spec.jobs, [&](std::size_t i) {
        const Job& job = jobs[i];
        auto row = point_cells(job.params);
        row.push_back(std::to_string(job.seed));
        try
        {
            SystemParams analytical_params = job.params;
            if (spec.analysis_max_delay)
                analytical_params.max_delay = *spec.analysis_max_delay;
            const TransitionModel m = qos(analytical_params);
            const SimReport r = run(sim_config(job.params, spec, job.seed));

            const double abs_err = std::abs(r.phi_empirical - m.phi);
            const double rel_err = m.phi > 0 ? abs_err / m.phi
                                   : abs_err == 0 ? 0.0
                                                  : std::numeric_limits<double>::infinity();
            const bool pass = within_tolerance(m.phi, r.phi_empirical, r.ci95);
            verdicts[i] = pass ? 1 : 0;
            for (const auto& cell :
                 {std::to_string(r.signatures), flag(m.valid_region), format_number(m.phi),
                  format_number(r.phi_empirical), format_number(r.ci95), format_number(abs_err),
                  format_number(rel_err), flag(pass), std::string{}})
                row.push_back(cell);
        }
        catch (const Error& e)
        {
            row.insert(row.end(), 8, "");
            row.emplace_back(errc_name(e.code()));
        }
        outcome.table.rows[i] = std::move(row);
    });

    for (int v : verdicts)
    {
        if (v < 0)
            continue;
        ++outcome.checked;
        if (v == 0)
            ++outcome.failed;
    }
    return outcome;
}

ExperimentSpec fig7_spec()
{
    ExperimentSpec spec;
    spec.mode = Mode::Compare;
    spec.servers = {10, 20, 40};
    spec.repetitions = {2, 5};
    spec.trusted = {1};
    spec.bit_errors.clear();
    for (int i = 1; i <= 10; ++i)
        spec.bit_errors.push_back(i * 1e-4);
    spec.periods = 200'000;
    return spec;
}

ExperimentSpec fig8_spec()
{
    ExperimentSpec spec;
    spec.mode = Mode::Compare;
    spec.servers = {100};
    spec.repetitions.clear();
    for (std::uint32_t k = 1; k <= 10; ++k)
        spec.repetitions.push_back(k);
    spec.trusted = {1, 5};
    spec.bit_errors = {4e-4};
    spec.periods = 50'000;
    return spec;
}

// Compare CSV columns: 1 V, 3 V_u, 4 k, 9 p_bit, 13 phi_analytical, 14 phi_empirical, 15 ci95.
std::string fig7_plot_script(const std::string& csv_path)
{
    std::ostringstream s;
    s << "set datafile separator ','\n"
      << "set logscale y\n"
      << "set xlabel 'P_{bit}'\n"
      << "set ylabel 'Phi'\n"
      << "set key top left\n"
      << "data = '" << csv_path << "'\n"
      << "plot \\\n";
    bool first = true;
    for (int v : {10, 20, 40})
        for (int k : {2, 5})
        {
            const std::string sel = "($1==" + std::to_string(v) + " && $4==" + std::to_string(k) + " ? ";
            s << (first ? "" : ", \\\n")
              << "  data using " << sel << "$9 : 1/0):13 with lines title 'an. V=" << v << " k=" << k << "', \\\n"
              << "  data using " << sel << "$9 : 1/0):14:(3*$15) with yerrorbars title 'nu. V=" << v << " k=" << k << "'";
            first = false;
        }
    s << "\n";
    return s.str();
}

std::string fig8_plot_script(const std::string& csv_path)
{
    std::ostringstream s;
    s << "set datafile separator ','\n"
      << "set logscale y\n"
      << "set xlabel 'k'\n"
      << "set ylabel 'Phi'\n"
      << "set key top left\n"
      << "data = '" << csv_path << "'\n"
      << "plot \\\n";
    bool first = true;
    for (int vu : {1, 5})
    {
        const std::string sel = "($3==" + std::to_string(vu) + " && strcol(12) eq 'true' ? ";
        s << (first ? "" : ", \\\n")
          << "  data using " << sel << "$4 : 1/0):13 with linespoints title 'an. V_u=" << vu << "', \\\n"
          << "  data using " << sel << "$4 : 1/0):14:(3*$15) with yerrorbars title 'nu. V_u=" << vu << "'";
        first = false;
    }
    s << "\n";
    return s.str();
}

} // namespace repauth
