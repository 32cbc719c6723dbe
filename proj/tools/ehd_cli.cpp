// ehd: batch front end for the free boundary diagnostics.
//
//   ehd <command> [--config FILE] [--key value ...]
//
// Values come from the optional config file first and are then overridden by
// any flag given on the command line.

#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "ehd/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Two-phase free boundary diagnostics: catalog checks, monotonicity formulas, "
                 "minimization and singularity classification"};
    app.set_version_flag("--version", ehd::cli::tool_version);
    app.set_help_flag("--help", "Print this help message and exit"); // frees -h for the lattice spacing

    std::string command, config;
    app.add_option("command", command, "verify-profiles | weiss | frequency | minimize | blowup | classify | "
                                       "corner-solve | pipeline")
        ->required()
        ->check(CLI::IsMember(ehd::cli::commands()));
    app.add_option("--config", config, "key=value file; flags override its entries");

    // every remaining flag is forwarded as key=value
    struct Flag {
        const char* key;
        const char* help;
        std::string value;
    };
    std::vector<Flag> flags{
        {"input", "field file or catalog name (A1 A2 A3 A4L A4R W2 W3 W4 LINEAR)", {}},
        {"boundary", "boundary data for minimize/pipeline: catalog name or field file", {}},
        {"center", "point x1,x2", {}},
        {"kappa", "homogeneity exponent", {}},
        {"radii", "log:RMAX:COUNT or a descending list r1,r2,...", {}},
        {"h", "lattice spacing (fractions such as 1/128 accepted)", {}},
        {"half", "half-width of sampled catalog fields", {}},
        {"x2_0", "datum height", {}},
        {"variant", "corner system: unilateral-config-1 | unilateral-config-2 | bilateral | all", {}},
        {"out", "output directory", {}},
        {"seed", "initialization seed", {}},
        {"max_sweeps", "sweep limit per smoothing stage", {}},
        {"search_radius", "largest distance from center to a stagnation candidate", {}},
        {"expect", "expected classification label", {}},
    };
    std::vector<CLI::Option*> opts;
    for (auto& f : flags) opts.push_back(app.add_option(std::string("--") + f.key, f.value, f.help));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    ehd::cli::RunConfig cfg;
    try {
        if (!config.empty()) ehd::cli::apply_config_file(cfg, config);
        cfg.command = command;
        for (std::size_t k = 0; k < flags.size(); ++k)
            if (opts[k]->count() > 0) ehd::cli::set(cfg, flags[k].key, flags[k].value);
    } catch (const ehd::error& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    }
    return ehd::cli::run(cfg, std::cout);
}
