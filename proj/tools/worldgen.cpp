#include "worldgen/error.hpp"
#include "worldgen/parallel.hpp"
#include "worldgen/pipeline.hpp"
#include "worldgen/sample.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <cstdio>
#include <optional>

namespace
{
    namespace fs = std::filesystem;
    using namespace worldgen;

    enum Exit
    {
        exit_ok = 0,
        exit_validation = 1,
        exit_config = 2,
        exit_io = 3,
    };

    struct Options
    {
        fs::path config;
        std::optional<fs::path> out;
        std::optional<std::uint64_t> seed;
        unsigned threads {0};
        bool verbose {false};
    };

    pipeline::PipelineConfig load(const Options& o)
    {
        pipeline::PipelineConfig c = pipeline::load_config(o.config);
        if (o.out)
            c.output_dir = *o.out;
        if (o.seed)
            c.seed = *o.seed;
        return c;
    }

    int run(const Options& o)
    {
        const pipeline::Manifest m = pipeline::run_pipeline(load(o));
        if (o.verbose)
            for (const std::string& w: m.warnings)
                fmt::print(stderr, "warning: {}\n", w);
        double total = 0.0;
        for (const auto& t: m.timings)
        {
            fmt::print("{:<12} {:>8.3f} s\n", t.stage, t.seconds);
            total += t.seconds;
        }
        fmt::print("{:<12} {:>8.3f} s\n{} files, {} tile sets, {} warnings\n", "total", total, m.files.size(),
                   m.tile_sets.size(), m.warnings.size());
        return exit_ok;
    }

    int validate(const fs::path& dir, bool verbose)
    {
        const pipeline::ValidationReport r = pipeline::cmd_validate(dir);
        for (const std::string& f: r.failures)
            fmt::print("FAIL {}\n", f);
        fmt::print("{} checks, {} failures\n", r.checks, r.failures.size());
        if (verbose && r.ok())
            fmt::print("{} is valid\n", dir.string());
        return r.ok() ? exit_ok : exit_validation;
    }
} // namespace

int main(int argc, char** argv)
{
    CLI::App app {"worldgen: GIS layers to game-engine terrain tiles, meshes and data textures"};
    app.require_subcommand(1);

    Options o;
    const auto common = [&](CLI::App* sub, bool needs_config) {
        auto* c = sub->add_option("--config", o.config, "pipeline config JSON");
        if (needs_config)
            c->required()->check(CLI::ExistingFile);
        sub->add_option("--threads", o.threads, "worker threads (0 = all cores)");
        sub->add_flag("--verbose", o.verbose, "print warnings and details");
    };

    auto* run_cmd = app.add_subcommand("run", "run the pipeline");
    common(run_cmd, true);
    run_cmd->add_option("--out", o.out, "output directory (overrides the config)");
    run_cmd->add_option("--seed", o.seed, "seed (overrides the config)");

    std::vector<std::size_t> counts {1003, 4158, 8316, 12474};
    std::size_t runs = 5;
    fs::path report = "bench.json";
    auto* bench_cmd = app.add_subcommand("bench", "time tube meshing against segment instancing");
    common(bench_cmd, true);
    bench_cmd->add_option("--counts", counts, "streamline counts")->delimiter(',');
    bench_cmd->add_option("--runs", runs, "runs per count")->check(CLI::PositiveNumber);
    bench_cmd->add_option("--out", report, "report path");

    fs::path validate_dir;
    auto* validate_cmd = app.add_subcommand("validate", "re-check an output directory against its manifest");
    validate_cmd->add_option("dir", validate_dir, "output directory")->required();
    validate_cmd->add_flag("--verbose", o.verbose, "print a summary line");

    fs::path sample_dir;
    std::uint64_t sample_seed = sample::default_seed;
    auto* sample_cmd = app.add_subcommand("sample", "write the synthetic sample dataset and its config");
    sample_cmd->add_option("--out", sample_dir, "dataset directory")->required();
    sample_cmd->add_option("--seed", sample_seed, "generator seed");

    CLI11_PARSE(app, argc, argv);
    set_thread_count(o.threads);

    try
    {
        if (run_cmd->parsed())
            return run(o);
        if (bench_cmd->parsed())
        {
            const auto r = pipeline::cmd_bench(load(o), counts, runs, report);
            fmt::print("{}", r.to_table());
            return exit_ok;
        }
        if (validate_cmd->parsed())
            return validate(validate_dir, o.verbose);
        if (sample_cmd->parsed())
        {
            fmt::print("{}\n", sample::write_sample_dataset(sample_dir, sample_seed).string());
            return exit_ok;
        }
    }
    catch (const ConfigError& e)
    {
        fmt::print(stderr, "config error: {}\n", e.what());
        return exit_config;
    }
    catch (const IoError& e)
    {
        fmt::print(stderr, "io error: {}\n", e.what());
        return exit_io;
    }
    catch (const std::exception& e)
    {
        fmt::print(stderr, "error: {}\n", e.what());
        return exit_validation;
    }
    return exit_ok;
}
