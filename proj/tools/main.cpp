#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "dicekit/errors.hpp"
#include "dicekit/scenario.hpp"

namespace {

std::string scenario_blurb(const std::string& name) {
    if (name == "verify-consistency")
        return "Sweep the projective consistency identities of the rate family";
    if (name == "verify-exchangeability")
        return "Check generator invariance under permutations of the chain labels";
    if (name == "simulate-dice")
        return "Simulate the n-chain system by the graphical construction";
    if (name == "frequency-sde")
        return "Simulate the limiting frequency process (drift plus coordination jumps)";
    if (name == "duality-check")
        return "Monte Carlo check of the moment duality between frequencies and the dual";
    if (name == "convergence-check")
        return "Compare empirical n-chain frequencies against the limit law as n grows";
    if (name == "coalescent")
        return "Simulate the typed coalescent with mergers and type switching";
    if (name == "coalescent-consistency")
        return "Statistical check that restriction commutes with the coalescent dynamics";
    return name;
}

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw dicekit::config_error("cannot read config file '" + path + "'");
    std::ostringstream buf;
    buf << f.rdbuf();
    return buf.str();
}

std::string now_utc() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"dicekit: simulate and verify consistent systems of interacting Markov chains"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_flag;
    std::uint64_t seed_flag = 0;
    std::int64_t paths_flag = 0;
    double epsilon_flag = 0.0;
    bool have_seed = false;
    bool have_out = false;
    bool have_paths = false;
    bool have_epsilon = false;

    for (const std::string& name : dicekit::scenario_names()) {
        CLI::App* sub = app.add_subcommand(name, scenario_blurb(name));
        sub->add_option("--config", config_path, "JSON config file")
            ->required()
            ->check(CLI::ExistingFile);
        sub->add_option("--seed", seed_flag, "RNG seed (overrides the config)")
            ->each([&](const std::string&) { have_seed = true; });
        sub->add_option("--out", out_flag, "output directory (overrides config and DICEKIT_OUT)")
            ->each([&](const std::string&) { have_out = true; });
        sub->add_option("--paths", paths_flag, "Monte Carlo path count (overrides the config)")
            ->each([&](const std::string&) { have_paths = true; });
        sub->add_option("--epsilon", epsilon_flag,
                        "coordination truncation threshold (overrides the config)")
            ->each([&](const std::string&) { have_epsilon = true; });
    }

    CLI11_PARSE(app, argc, argv);

    try {
        const std::string scenario = app.get_subcommands().front()->get_name();
        dicekit::ScenarioConfig cfg = dicekit::parse_config(read_file(config_path));
        if (cfg.scenario != scenario)
            throw dicekit::config_error("config file is for scenario '" + cfg.scenario +
                                        "' but the command line asked for '" + scenario + "'");

        if (have_seed) cfg.seed = seed_flag;
        if (have_paths) cfg.paths = paths_flag;
        if (have_epsilon) cfg.epsilon = epsilon_flag;
        if (have_out) {
            cfg.out_dir = out_flag;
        } else if (!cfg.out_from_config) {
            if (const char* env = std::getenv("DICEKIT_OUT")) cfg.out_dir = env;
        }

        if (!cfg.seed && dicekit::scenario_uses_seed(scenario)) {
            if (std::getenv("DICEKIT_REQUIRE_SEED"))
                throw dicekit::config_error(
                    "no seed given and DICEKIT_REQUIRE_SEED is set; pass --seed or add "
                    "\"seed\" to the config");
            std::random_device entropy;
            std::uint64_t drawn =
                (static_cast<std::uint64_t>(entropy()) << 32) ^ entropy();
            cfg.seed = drawn;
            std::cerr << "note: no seed given; drew " << drawn
                      << " from system entropy (pass --seed " << drawn << " to reproduce)\n";
        }

        dicekit::ScenarioResult result = dicekit::run_scenario(cfg);
        auto paths = dicekit::write_artifacts(result, cfg.out_dir);

        std::cout << scenario << ": " << dicekit::verdict_name(result.verdict) << " ("
                  << result.summary << ")\n";
        for (const auto& p : paths) std::cout << "  wrote " << p << "\n";
        std::cerr << "run finished at " << now_utc() << "\n";
        return dicekit::verdict_exit_code(result.verdict);
    } catch (const dicekit::error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
