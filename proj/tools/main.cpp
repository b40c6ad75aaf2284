#include <CLI11.hpp>

#include <iostream>

#include "commands.hpp"
#include "slipflow/version.hpp"

int main(int argc, char** argv) {
  using namespace slipflow::cli;

  CLI::App app{"Stokes and Navier-Stokes with Navier slip on the ball: spectra, Galerkin runs, decay certificates"};
  app.set_version_flag("--version", slipflow::kVersion);
  app.require_subcommand(1);

  GlobalOptions global;
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  app.add_option("--config", config, "Experiment config (INI)")->check(CLI::ExistingFile);
  app.add_option("--out", out, "Output directory (overrides [output] directory)");
  app.add_option("--seed", seed, "Random seed (overrides [run] seed)");
  app.add_flag("--plot", global.plot, "Write an SVG decay plot");

  auto* geometry = app.add_subcommand("geometry", "Classify rigid motions tangent to the boundary");
  auto* spectrum = app.add_subcommand("spectrum", "Stokes eigenvalues and Poincare constants");
  auto* simulate = app.add_subcommand("simulate", "Integrate the Galerkin system and check energy laws");
  auto* verify = app.add_subcommand("verify", "Check the integral Gronwall hypothesis on a sampled series");

  VerifyOptions vo;
  std::string series;
  std::string manifest;
  std::string column;
  double k = 0.0;
  double ypp = 0.0;
  verify->add_option("--series", series, "CSV with a t column")->required()->check(CLI::ExistingFile);
  auto* k_opt = verify->add_option("--K", k, "Decay constant");
  auto* m_opt = verify->add_option("--manifest", manifest, "Take K from derived.decay_rate of a run manifest")
                    ->check(CLI::ExistingFile);
  k_opt->excludes(m_opt);
  verify->add_option("--column", column, "Value column (default E_dev if present, else E)");
  auto* ypp_opt = verify->add_option("--ypp", ypp, "Bound on |y''| for the trapezoid allowance (default: estimated from the samples)");
  verify->add_option("--rule", vo.rule, "Quadrature of the integral term")
      ->check(CLI::IsMember({"trapezoid", "right_endpoint"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return exit_code::kConfig;
  }

  if (!config.empty()) global.config = config;
  if (!out.empty()) global.out = out;
  if (app.count("--seed") > 0) global.seed = seed;

  if (geometry->parsed()) return cmd_geometry(global);
  if (spectrum->parsed()) return cmd_spectrum(global);
  if (simulate->parsed()) return cmd_simulate(global);

  vo.series = series;
  if (k_opt->count() > 0) vo.k = k;
  if (!manifest.empty()) vo.manifest = manifest;
  if (!column.empty()) vo.column = column;
  if (ypp_opt->count() > 0) vo.ypp = ypp;
  return cmd_verify(global, vo);
}
