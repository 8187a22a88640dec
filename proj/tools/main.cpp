#include "dispersal/acceptance.hpp"
#include "dispersal/config.hpp"
#include "dispersal/runner.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

int report_error(const std::string& kind, const std::string& message) {
    nlohmann::json err{{"error", {{"type", kind}, {"message", message}}}};
    std::cerr << err.dump() << '\n';
    return 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Local versus nonlocal dispersal: experiments and acceptance suite"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    auto* run = app.add_subcommand("run", "Run the experiment described by a JSON config");
    run->add_option("config", config_path, "Experiment config (JSON)")->required();
    auto* out_opt = run->add_option("--out", out_dir, "Output directory");
    auto* seed_opt = run->add_option("--seed", seed, "Seed, overriding the config");

    bool fast = false;
    std::uint64_t acc_seed = 20240601;
    auto* acc = app.add_subcommand("acceptance", "Run the acceptance suite");
    acc->add_flag("--fast", fast, "Rerun only the seeded criteria for the determinism check");
    acc->add_option("--seed", acc_seed, "Seed for the randomized checks");

    CLI11_PARSE(app, argc, argv);

    if (*acc) {
        dispersal::AcceptanceOptions opt;
        opt.fast = fast;
        opt.seed = acc_seed;
        opt.log = &std::cout;
        const auto rep = dispersal::run_acceptance(opt);
        int passed = 0;
        for (const auto& c : rep.criteria) passed += c.passed ? 1 : 0;
        std::cout << passed << "/" << rep.criteria.size() << " criteria passed in " << rep.seconds << " s\n";
        return rep.all_passed() ? 0 : 1;
    }

    std::ifstream in(config_path);
    if (!in) return report_error("config_error", "cannot open " + config_path);
    std::stringstream text;
    text << in.rdbuf();
    dispersal::ExperimentConfig cfg;
    dispersal::RunOptions opt;
    try {
        cfg = dispersal::parse_config(text.str());
        dispersal::validate_for_experiment(cfg);
    } catch (const std::exception& e) {
        return report_error("config_error", e.what());
    }
    if (*out_opt) opt.out = out_dir;
    if (*seed_opt) opt.seed = seed;
    opt.log = &std::cout;
    return dispersal::run_experiment(cfg, opt);
}
