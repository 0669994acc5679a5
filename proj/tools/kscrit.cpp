// Command-line driver: kscrit <command> [--config file] [--out dir] [--quiet]
#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "kscrit/errors.hpp"
#include "kscrit/experiments.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Critical-mass grow-up experiments for u_t = x u_xx + 2 u u_x"};
    app.require_subcommand(1, 1);

    std::string config_path, out_dir = "out";
    bool quiet = false;
    app.add_option("--config", config_path, "INI file with [special] [match] [certify] [solve] [rate] [profile] [sandwich]")
        ->check(CLI::ExistingFile);
    app.add_option("--out", out_dir, "output directory")->capture_default_str();
    app.add_flag("--quiet", quiet, "only print the final verdict");

    const std::map<std::string, std::string> commands{
        {"tabulate", "special-function tables, operator round trip and asymptotics"},
        {"match", "matching ODE for a(t) and its deviation from exp(5/2 + sqrt(2t))"},
        {"certify", "sign scans and boundary matching for both barriers"},
        {"solve", "critical run; snapshots and run manifest"},
        {"rate", "d(t) = log u_x(0,t) - sqrt(2t) and the L1 ratio"},
        {"profile", "profile error E(t)"},
        {"sandwich", "time shifts ordering the barriers around the solution"},
        {"all", "every command, sharing one critical run"}};
    for (const auto& [name, help] : commands) app.add_subcommand(name, help)->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    kscrit::ExperimentConfig cfg;
    try {
        if (!config_path.empty()) cfg = kscrit::ExperimentConfig::load(config_path);
    } catch (const kscrit::Error& e) {
        std::cerr << e.what() << '\n';
        return 2;
    }

    kscrit::RunContext ctx;
    ctx.out_dir = out_dir;
    ctx.quiet = quiet;

    const std::string cmd = app.get_subcommands().front()->get_name();
    kscrit::CommandResult r;
    if (cmd == "tabulate") r = kscrit::cmd_tabulate(cfg, ctx);
    else if (cmd == "match") r = kscrit::cmd_match(cfg, ctx);
    else if (cmd == "certify") r = kscrit::cmd_certify(cfg, ctx);
    else if (cmd == "solve") r = kscrit::cmd_solve(cfg, ctx);
    else if (cmd == "rate") r = kscrit::cmd_rate(cfg, ctx);
    else if (cmd == "profile") r = kscrit::cmd_profile(cfg, ctx);
    else if (cmd == "sandwich") r = kscrit::cmd_sandwich(cfg, ctx);
    else r = kscrit::cmd_all(cfg, ctx);

    const char* verdict = r.status == 0 ? "PASS" : r.status == 1 ? "FAIL (scientific)" : "FAIL (numerical/config)";
    std::cout << cmd << ": " << verdict << '\n';
    return r.status;
}
