// Command-line driver: convolve / verify / oracle subcommands over measure
// spec files. See README.md for the file format and report schemas.

#include <complex>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "freeconv/cli.hpp"

namespace {

freeconv::Complex parse_z(const std::string& text) {
    const auto comma = text.find(',');
    if (comma == std::string::npos)
        freeconv::raise(freeconv::ErrorKind::Validation,
                        "--z entries must be re,im pairs, got '" + text + "'");
    try {
        const double re = std::stod(text.substr(0, comma));
        const double im = std::stod(text.substr(comma + 1));
        return {re, im};
    } catch (const std::exception&) {
        freeconv::raise(freeconv::ErrorKind::Validation,
                        "--z entries must be re,im pairs, got '" + text + "'");
    }
}

void add_run_options(CLI::App* cmd, freeconv::RunConfig& config,
                     std::vector<double>& grid, std::vector<double>& ladder) {
    cmd->add_option("--grid", grid, "grid as: min max points")->expected(3);
    cmd->add_option("--ladder", ladder, "boundary ladder as: y0 ratio levels")->expected(3);
    cmd->add_option("--tol", config.tol, "fixed-point tolerance");
    cmd->add_option("--max-iter", config.maxIter, "fixed-point iteration cap");
    cmd->add_option("--mass-tol", config.densityMassTol, "mass deficit tolerance");
    cmd->add_option("--atom-exclusion", config.atomExclusionRadius,
                    "radius around atoms excluded from density sampling");
    cmd->add_option("--out-csv", config.densityCsv, "density table output path");
    cmd->add_option("--out-json", config.reportJson, "report output path");
}

void apply_run_options(freeconv::RunConfig& config, const std::vector<double>& grid,
                       const std::vector<double>& ladder) {
    if (!grid.empty()) {
        config.gridMin = grid[0];
        config.gridMax = grid[1];
        const double points = grid[2];
        if (!(points >= 2) || points != static_cast<int>(points))
            freeconv::raise(freeconv::ErrorKind::Validation,
                            "--grid points must be an integer >= 2");
        config.gridPoints = static_cast<int>(points);
    }
    if (!ladder.empty()) {
        config.yLadder.y0 = ladder[0];
        config.yLadder.ratio = ladder[1];
        const double levels = ladder[2];
        if (!(levels >= 3) || levels != static_cast<int>(levels))
            freeconv::raise(freeconv::ErrorKind::Validation,
                            "--ladder levels must be an integer >= 3");
        config.yLadder.levels = static_cast<int>(levels);
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"free additive convolution of measures on the real line"};
    app.require_subcommand(1);

    std::string muPath, nuPath;
    freeconv::RunConfig config;
    std::vector<double> gridArgs, ladderArgs;
    std::vector<std::string> zArgs;

    CLI::App* convolve = app.add_subcommand("convolve", "atoms, density and mass report");
    convolve->add_option("--mu", muPath, "measure spec file")->required();
    convolve->add_option("--nu", nuPath, "measure spec file")->required();
    add_run_options(convolve, config, gridArgs, ladderArgs);

    CLI::App* verify = app.add_subcommand("verify", "run the invariant families");
    verify->add_option("--mu", muPath, "measure spec file")->required();
    verify->add_option("--nu", nuPath, "measure spec file")->required();
    add_run_options(verify, config, gridArgs, ladderArgs);

    CLI::App* oracle = app.add_subcommand("oracle", "closed form vs engine, two-atom inputs");
    oracle->add_option("--mu", muPath, "measure spec file")->required();
    oracle->add_option("--nu", nuPath, "measure spec file")->required();
    oracle->add_option("--z", zArgs, "evaluation points as re,im pairs")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        apply_run_options(config, gridArgs, ladderArgs);
        if (convolve->parsed()) return freeconv::cmd_convolve(muPath, nuPath, config);
        if (verify->parsed()) return freeconv::cmd_verify(muPath, nuPath, config);
        std::vector<freeconv::Complex> zList;
        zList.reserve(zArgs.size());
        for (const auto& z : zArgs) zList.push_back(parse_z(z));
        return freeconv::cmd_oracle(muPath, nuPath, zList);
    } catch (const freeconv::Error& e) {
        std::cerr << e.what() << "\n";
        return freeconv::detail::exit_code_for(e);
    }
}
