// fermitherm.cpp — Command-line front end for the thermometry sweeps

#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fermitherm/cli.hpp"

namespace fc = fermitherm::cli;

namespace {

std::string join(const std::vector<std::string>& parts) {
    std::string out;
    for (const auto& p : parts) out += (out.empty() ? "" : ",") + p;
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Thermometry with a strongly coupled fermionic probe"};
    app.set_version_flag("--version", fermitherm::version);
    app.require_subcommand(1, 1);
    app.set_config("--config", "", "Optional key=value file; command-line flags take precedence");

    fc::RunConfig cfg;
    // Lists arrive as one token from the command line but as several from a
    // config file; they are rejoined with commas before parsing.
    std::vector<std::string> t_grid, gamma_grid, T_grid, epsilons;
    std::string format = "csv";
    double rel_tol = cfg.quad.rel_tol, abs_tol = cfg.quad.abs_tol;

    // Options live on the top-level app so that a plain key=value config file
    // applies to every command; fallthrough lets them follow the command name.
    app.fallthrough();
    {
        CLI::App* sub = &app;
        sub->add_option("--epsilon", cfg.epsilon, "Probe energy")->capture_default_str();
        sub->add_option("--mu", cfg.mu, "Bath chemical potential")->capture_default_str();
        sub->add_option("--gamma", cfg.gamma, "Coupling rate Gamma")->capture_default_str();
        sub->add_option("--temperature", cfg.temperature, "Bath temperature")->capture_default_str();
        sub->add_option("--p0", cfg.p0, "Initial occupation")->capture_default_str();
        sub->add_option("--t-grid", t_grid, "Time axis min:max:n[:lin|log] or a comma list");
        sub->add_option("--gamma-grid", gamma_grid, "Gamma axis min:max:n[:lin|log] or a comma list");
        sub->add_option("--T-grid", T_grid, "Temperature axis min:max:n[:lin|log] or a comma list");
        sub->add_option("--epsilons", epsilons, "Two-probe energies e1,e2 (default mu, mu+1)");
        sub->add_flag("--steady", cfg.steady, "multi-additivity: use the steady state");
        sub->add_option("--out", cfg.out, "Output data file")->capture_default_str();
        sub->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
        sub->add_option("--rel-tol", rel_tol, "Quadrature relative tolerance")->capture_default_str();
        sub->add_option("--abs-tol", abs_tol, "Quadrature absolute tolerance")->capture_default_str();
        sub->add_option("--jobs", cfg.jobs, "Worker threads (0 = all cores)")->capture_default_str();
    }
    const std::map<std::string, std::string> about{
        {"equilibrium-sweep", "Steady-state occupation and noise-to-signal over T and Gamma"},
        {"transient-fi", "Exact and Markovian occupation and Fisher information over time"},
        {"fi-rate", "Fisher information per unit time on a Gamma t grid"},
        {"tstar-contour", "Optimal interrogation time over a (Gamma, T) grid"},
        {"gamma-opt", "Optimal coupling for the steady QFI and for the best FI rate"},
        {"multi-additivity", "Two-probe common-bath QFI against the independent-bath sum"},
        {"verify", "Self-checks of the library invariants"}};
    for (const auto& [name, command] : fc::command_names()) {
        CLI::App* sub = app.add_subcommand(name, about.at(name));
        sub->callback([&cfg, command = command] { cfg.command = command; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? fc::exit_ok : fc::exit_config;
    }

    try {
        if (!t_grid.empty()) cfg.t_grid = fc::parse_axis(join(t_grid), "--t-grid");
        if (!gamma_grid.empty()) cfg.gamma_grid = fc::parse_axis(join(gamma_grid), "--gamma-grid");
        if (!T_grid.empty()) cfg.T_grid = fc::parse_axis(join(T_grid), "--T-grid");
        if (!epsilons.empty()) cfg.epsilons = fc::parse_list(join(epsilons), "--epsilons");
    } catch (const fermitherm::Error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return fc::exit_config;
    }
    cfg.format = format == "json" ? fc::Format::json : fc::Format::csv;
    cfg.quad.rel_tol = rel_tol;
    cfg.quad.abs_tol = abs_tol;
    if (auto* opt = app.get_option_no_throw("--config"); opt && opt->count() > 0) cfg.config_file = opt->as<std::string>();
    return fc::run(cfg, std::cerr);
}
