// lzsm: command-line driver for spectra, trajectories, sweeps and the canned
// figure runs.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lzsm/cli.hpp"

namespace {

struct CommonFlags {
    std::string config;
    std::vector<std::string> sets;
    std::string out;
    std::string format;
    unsigned workers = 0;
};

void add_common(CLI::App* sub, CommonFlags& f) {
    sub->add_option("--config", f.config, "key = value config file (one [section] per run)");
    sub->add_option("--set", f.sets, "override a config key, e.g. --set c=3")->take_all();
    sub->add_option("--out", f.out, "output directory");
    sub->add_option("--format", f.format, "comma-separated subset of csv,json,ppm");
    sub->add_option("--workers", f.workers, "sweep worker threads (default: LZSM_WORKERS or all cores)");
}

int execute(const std::vector<lzsm::RunConfig>& runs, unsigned workers) {
    int code = lzsm::kExitOk;
    for (const auto& rc : runs) {
        const auto res = lzsm::run(rc, workers);
        for (const auto& w : res.warnings) std::cerr << "warning: " << rc.name << ": " << w << "\n";
        for (const auto& f : res.files) std::cout << f.string() << "\n";
        if (res.exit_code != lzsm::kExitOk) {
            std::cerr << rc.name << ": sweep finished with failed cells\n";
            code = std::max(code, res.exit_code);
        }
    }
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Nonreciprocal nonlinear LZSM interferometry simulator"};
    app.require_subcommand(1);

    std::vector<CommonFlags> flags(lzsm::subcommands().size());
    std::vector<CLI::App*> subs;
    std::string figure_id, manifest_path;
    bool list_figures = false;
    for (std::size_t i = 0; i < lzsm::subcommands().size(); ++i) {
        const auto& name = lzsm::subcommands()[i];
        auto* sub = app.add_subcommand(name, name == "figure" ? "reproduce a figure from the manifest" : "run " + name);
        if (name == "figure") {
            sub->add_option("id", figure_id, "figure id, e.g. fig4c");
            sub->add_option("--manifest", manifest_path, "manifest file");
            sub->add_flag("--list", list_figures, "list figure ids");
            sub->add_option("--out", flags[i].out, "output directory");
            sub->add_option("--workers", flags[i].workers, "sweep worker threads");
        } else {
            add_common(sub, flags[i]);
        }
        subs.push_back(sub);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : lzsm::kExitConfig;
    }

    try {
        for (std::size_t i = 0; i < subs.size(); ++i) {
            if (!subs[i]->parsed()) continue;
            const auto& name = lzsm::subcommands()[i];
            const CommonFlags& f = flags[i];
            const unsigned workers = f.workers > 0 ? f.workers : lzsm::default_workers();

            if (name == "figure") {
                const auto manifest =
                    manifest_path.empty() ? lzsm::load_manifest() : lzsm::load_manifest(manifest_path);
                if (list_figures) {
                    for (const auto& id : manifest.figure_ids()) std::cout << id << "\n";
                    return lzsm::kExitOk;
                }
                if (figure_id.empty()) throw lzsm::Error(lzsm::ErrorCode::ConfigInvalid, "figure needs an id");
                std::optional<std::string> out;
                if (!f.out.empty()) out = f.out;
                return execute(lzsm::figure_config(manifest, figure_id, out), workers);
            }

            std::vector<std::string> overrides = f.sets;
            if (!f.out.empty()) overrides.push_back("out=" + f.out);
            if (!f.format.empty()) overrides.push_back("format=" + f.format);
            const std::vector<std::string> defaults{"subcommand=" + name};
            const auto runs = f.config.empty() ? lzsm::parse_config_text("", "<flags>", overrides, defaults)
                                               : lzsm::parse_config(f.config, overrides, defaults);
            for (const auto& rc : runs)
                if (rc.subcommand != name)
                    throw lzsm::Error(lzsm::ErrorCode::ConfigInvalid,
                                      "config run '" + rc.name + "' is a " + rc.subcommand + " run, not " + name);
            return execute(runs, workers);
        }
    } catch (const lzsm::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return lzsm::exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return lzsm::kExitNumerical;
    }
    return lzsm::kExitOk;
}
