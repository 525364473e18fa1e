// Command-line front end: windows, run, sweep, analyze, plot, verify,
// oracle-diffusion.
//
// Exit codes: 0 success, 2 config error, 3 numerical failure,
// 4 verification mismatch.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>

#include "fermi/classical.hpp"
#include "fermi/config.hpp"
#include "fermi/errors.hpp"
#include "fermi/io.hpp"
#include "fermi/model.hpp"
#include "fermi/runner.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitVerify = 4;

int report_run(const fermi::RunResult& r) {
  std::size_t failed = 0;
  for (const auto& p : r.points) {
    if (p.status != "completed") ++failed;
  }
  std::cout << "output: " << r.dir.string() << "  points: " << r.points.size() << "  failed: " << failed << "\n";
  return failed ? kExitNumerical : 0;
}

void print_point(const fermi::PointOutcome& p) {
  std::cout << fermi::lambda_tag(p.lambda) << "  " << p.status;
  if (p.row) {
    std::cout << "  dp=" << fermi::format_double(p.row->dp) << "  alpha=" << fermi::format_double(p.row->alpha)
              << "  contrast=" << fermi::format_double(p.row->comb_contrast);
  }
  if (!p.error.empty()) std::cout << "  error: " << p.error;
  std::cout << "\n";
  for (const auto& w : p.warnings) std::cout << "  warning: " << w << "\n";
  std::cout.flush();
}

int cmd_windows(double lambda_max) {
  std::printf("%4s  %18s  %18s  %18s\n", "s", "lo", "hi", "center");
  for (const fermi::Window& w : fermi::windows_up_to(lambda_max)) {
    std::printf("%4.1f  %18.15f  %18.15f  %18.15f\n", w.s(), w.lo(), w.hi(), w.center());
  }
  return 0;
}

int cmd_run(const std::string& path, std::size_t threads, bool sweep) {
  const fermi::RunConfig cfg = fermi::parse_config(path);
  if (sweep && cfg.lambdas().size() < 3) {
    throw fermi::ConfigError("sweep needs a lambda range with at least 3 points");
  }
  fermi::RunOptions opts;
  opts.threads = threads;
  opts.on_point = print_point;
  const fermi::RunResult r = fermi::run(cfg, opts);
  if (sweep && cfg.engine != fermi::Engine::standard_map) {
    const fermi::AnalysisReport rep = fermi::analyze_directory(r.dir);
    if (rep.sweep) {
      for (const auto& w : rep.sweep->windows) {
        std::cout << "window s=" << w.window.s() << "  center=" << fermi::format_double(w.window.center());
        if (w.nearest_maximum) std::cout << "  nearest maximum=" << fermi::format_double(*w.nearest_maximum);
        std::cout << "\n";
      }
    } else if (!rep.sweep_error.empty()) {
      std::cout << "sweep analysis: " << rep.sweep_error << "\n";
    }
  }
  return report_run(r);
}

int cmd_analyze(const std::string& dir) {
  const fermi::AnalysisReport rep = fermi::analyze_directory(dir);
  for (const auto& [lambda, c] : rep.combs) {
    std::cout << fermi::lambda_tag(lambda) << "  peaks=" << c.peaks.size()
              << "  spacing=" << fermi::format_double(c.median_spacing)
              << "  contrast=" << fermi::format_double(c.contrast) << "\n";
  }
  if (rep.sweep) {
    std::cout << "local maxima:";
    for (double m : rep.sweep->local_maxima) std::cout << " " << fermi::format_double(m);
    std::cout << "\n";
  }
  if (!rep.sweep_error.empty()) std::cout << "sweep analysis: " << rep.sweep_error << "\n";
  std::cout << "wrote " << (std::filesystem::path(dir) / "analysis.json").string() << "\n";
  return 0;
}

int cmd_plot(std::string kind, const std::string& dir) {
  if (kind.rfind("fig", 0) == 0) kind = kind.substr(3);
  if (kind.size() != 1 || kind[0] < '1' || kind[0] > '4') {
    throw fermi::ConfigError("--kind must be fig1, fig2, fig3 or fig4");
  }
  const auto path = fermi::plot_directory(dir, kind[0] - '0');
  std::cout << "wrote " << path.string() << "\n";
  return 0;
}

int cmd_verify(const std::string& dir) {
  const auto issues = fermi::verify_directory(dir);
  for (const auto& i : issues) std::cout << "MISMATCH " << i.name << ": " << i.problem << "\n";
  if (!issues.empty()) return kExitVerify;
  std::cout << "OK " << dir << "\n";
  return 0;
}

int cmd_oracle(double k, std::size_t n, std::size_t steps, std::uint64_t seed, std::size_t threads) {
  const double measured = fermi::standard_map_diffusion(k, n, steps, seed, threads);
  const fermi::DiffusionLaw law = fermi::diffusion_coefficient_for_kick(k);
  std::cout << "K=" << fermi::format_double(k) << "  particles=" << n << "  steps=" << steps << "\n"
            << "D measured    " << fermi::format_double(measured) << "\n"
            << "D law         " << fermi::format_double(law.d_lambda) << "\n"
            << "D0 = K^2/2    " << fermi::format_double(law.d0) << "\n"
            << "relative diff " << fermi::format_double((measured - law.d_lambda) / law.d_lambda) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Modulated atom-mirror accelerator: simulation and analysis"};
  app.set_version_flag("--version", std::string(fermi::kVersion));
  app.require_subcommand(1);

  double lambda_max = 5.0;
  auto* windows = app.add_subcommand("windows", "print acceleration windows up to --lambda-max");
  windows->add_option("--lambda-max", lambda_max, "upper lambda")->required();

  std::string config;
  std::size_t threads = 0;
  auto* run = app.add_subcommand("run", "run a config");
  run->add_option("-c,--config", config, "JSON config")->required()->check(CLI::ExistingFile);
  run->add_option("-j,--threads", threads, "worker threads (0: all cores)");
  auto* sweep = app.add_subcommand("sweep", "run a lambda sweep and analyze it");
  sweep->add_option("-c,--config", config, "JSON config")->required()->check(CLI::ExistingFile);
  sweep->add_option("-j,--threads", threads, "worker threads (0: all cores)");

  std::string dir;
  auto* analyze = app.add_subcommand("analyze", "comb and sweep diagnostics for a run directory");
  analyze->add_option("dir", dir, "run directory")->required()->check(CLI::ExistingDirectory);

  std::string kind;
  auto* plot = app.add_subcommand("plot", "write figN.svg for a run directory");
  plot->add_option("--kind", kind, "fig1 | fig2 | fig3 | fig4")->required();
  plot->add_option("dir", dir, "run directory")->required()->check(CLI::ExistingDirectory);

  auto* verify = app.add_subcommand("verify", "re-hash every file listed in the manifest");
  verify->add_option("dir", dir, "run directory")->required();

  double kick = 0.0;
  std::size_t particles = 100000;
  std::size_t steps = 500;
  std::uint64_t seed = 0;
  auto* oracle = app.add_subcommand("oracle-diffusion", "standard map diffusion against the Bessel law");
  oracle->add_option("--k", kick, "kick strength K")->required();
  oracle->add_option("--n", particles, "particles");
  oracle->add_option("--steps", steps, "map iterations");
  oracle->add_option("--seed", seed, "seed");
  oracle->add_option("-j,--threads", threads, "worker threads (0: all cores)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*windows) return cmd_windows(lambda_max);
    if (*run) return cmd_run(config, threads, false);
    if (*sweep) return cmd_run(config, threads, true);
    if (*analyze) return cmd_analyze(dir);
    if (*plot) return cmd_plot(kind, dir);
    if (*verify) return cmd_verify(dir);
    if (*oracle) return cmd_oracle(kick, particles, steps, seed, threads);
  } catch (const fermi::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const fermi::InvalidParameter& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitConfig;
  } catch (const fermi::DomainError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitConfig;
  } catch (const fermi::VerificationError& e) {
    std::cerr << "verification: " << e.what() << "\n";
    return kExitVerify;
  } catch (const fermi::Error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return 0;
}
