#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "ergolab/cli.hpp"

namespace {

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out = "ergolab-out";
};

void add_common(CLI::App* sub, Common& c, bool config_required = true) {
    auto* opt = sub->add_option("--config", c.config, "experiment config (JSON)");
    if (config_required) opt->required();
    sub->add_option("--seed", c.seed, "override the config seed");
    sub->add_option("--out", c.out, "output directory")->capture_default_str();
}

int run(const std::string& kind, const Common& c, const ergolab::cli::ClassifyOverrides& ov) {
    using namespace ergolab;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        std::string bytes;
        std::filesystem::path base = ".";
        if (!c.config.empty()) {
            std::ifstream in(c.config, std::ios::binary);
            if (!in) throw Error(ErrorCode::ConfigError, "--config: cannot open " + c.config);
            std::ostringstream ss;
            ss << in.rdbuf();
            bytes = ss.str();
            base = std::filesystem::path(c.config).parent_path();
            if (base.empty()) base = ".";
        }
        auto [report, outcome] = cli::run_text(kind, bytes, c.seed, base, ov);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        cli::write_outputs(c.out, report, outcome, secs);
        std::cout << kind << ": " << outcome.summary << "\n" << "report: " << (std::filesystem::path(c.out) / "report.json").string() << "\n";
        return 0;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return cli::exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"ergolab: experiments on specification-like properties of dynamical systems"};
    app.set_version_flag("--version", ergolab::cli::kVersion);
    app.require_subcommand(1);

    Common common;
    ergolab::cli::ClassifyOverrides ov;
    std::string kind;
    auto leaf = [&](CLI::App* parent, const std::string& name, const std::string& id, const std::string& help, bool config_required = true) {
        auto* s = parent->add_subcommand(name, help);
        add_common(s, common, config_required);
        s->callback([&kind, id] { kind = id; });
        return s;
    };

    leaf(&app, "entropy", "entropy", "separated-set counts and entropy slopes");
    auto* trace = app.add_subcommand("trace", "tracing certificates");
    trace->require_subcommand(1);
    leaf(trace, "verify", "trace-verify", "re-check a tracing certificate");
    leaf(trace, "search", "trace-search", "search for a tracing point");
    leaf(&app, "app", "app", "approximate product property grid");
    leaf(&app, "sapp", "sapp", "strict approximate product property grid");
    leaf(&app, "spec", "spec", "periodic exact specification grid");
    leaf(&app, "unique-ergodicity", "unique-ergodicity", "Birkhoff-average spread across starts");
    auto* measures = app.add_subcommand("measures", "empirical measures");
    measures->require_subcommand(1);
    leaf(measures, "cluster", "cluster", "cluster orbit measures in the weak-* metric");
    auto* interval = app.add_subcommand("interval", "interval maps");
    interval->require_subcommand(1);
    auto* classify = leaf(interval, "classify", "interval-classify", "zero-entropy classification", false);
    classify->add_option("--map", ov.map, "zoo name or map expression in x");
    classify->add_option("--period-bound", ov.period_bound, "largest period searched");
    classify->add_option("--samples", ov.samples, "attraction samples");
    auto* family = app.add_subcommand("family", "separated families");
    family->require_subcommand(1);
    leaf(family, "build", "family-build", "build a separated family of tracers");
    leaf(family, "verify", "family-verify", "check pairwise separation of a family");
    leaf(&app, "dichotomy", "dichotomy", "entropy versus measure-multiplicity cross-check");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    if (kind == "interval-classify" && common.config.empty() && !ov.map) {
        std::cerr << "error: ConfigError: interval classify needs --config or --map\n";
        return 2;
    }
    return run(kind, common, ov);
}
