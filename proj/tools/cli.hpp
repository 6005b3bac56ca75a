#pragma once

// Batch front end: command-line/config parsing and the four commands.

#include <CLI11.hpp>
#include <fmt/format.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "mfcluster/mfcluster.hpp"

namespace mfcluster::cli {

namespace fs = std::filesystem;

enum ExitCode : int { kOk = 0, kConfigError = 2, kSolverError = 3 };

struct RunConfig {
  std::string command;
  // A distribution name or a position,weight CSV path; empty means uniform,
  // or all four for reproduce.
  std::string distribution;
  std::size_t n = 1000;
  double support_lo = -4.995;
  double support_hi = 4.995;
  std::string t = "auto";  // "auto" = safety / (lambda1 + L1)
  double safety = 0.9;
  long max_rounds = 100000;
  double coalesce_eps = 0.005;
  double cluster_gap = 0.25;
  double picard_tol = 1e-10;
  double fixed_tol = 1e-9;
  std::size_t trajectory_stride = 1;
  std::string output_dir = "out";
  unsigned long seed = 0;
};

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"solve", "iterate", "stability", "reproduce"};
  return names;
}

/// Binds every RunConfig field to a flag; `--config FILE` reads the same keys
/// from `key = value` lines (`#` starts a comment).
inline void configure_app(CLI::App& app, RunConfig& cfg) {
  app.set_config("--config", "", "Read key = value settings from FILE");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.add_option("--command", cfg.command, "solve | iterate | stability | reproduce")
      ->required()
      ->check(CLI::IsMember(command_names()));
  app.add_option("--distribution", cfg.distribution,
                 "uniform | semicircle | triangular | inverted-semicircle | path to a position,weight CSV "
                 "(default: uniform; reproduce runs all four)");
  app.add_option("--n", cfg.n, "Number of grid atoms")->check(CLI::PositiveNumber);
  app.add_option("--support-lo", cfg.support_lo, "Left end of the initial grid");
  app.add_option("--support-hi", cfg.support_hi, "Right end of the initial grid");
  app.add_option("--t", cfg.t, "Horizon per round, or 'auto'");
  app.add_option("--safety", cfg.safety, "Fraction of the uniqueness bound used by t = auto")
      ->check(CLI::Range(0.0, 1.0));
  app.add_option("--max-rounds", cfg.max_rounds, "Round limit for iterate/reproduce")->check(CLI::PositiveNumber);
  app.add_option("--coalesce-eps", cfg.coalesce_eps, "Coalescence radius")->check(CLI::PositiveNumber);
  app.add_option("--cluster-gap", cfg.cluster_gap, "Single-linkage gap for cluster detection")
      ->check(CLI::PositiveNumber);
  app.add_option("--picard-tol", cfg.picard_tol, "Certified accuracy of each equilibrium")
      ->check(CLI::PositiveNumber);
  app.add_option("--fixed-tol", cfg.fixed_tol, "Tolerance of the fixed-point test in stability")
      ->check(CLI::PositiveNumber);
  app.add_option("--trajectory-stride", cfg.trajectory_stride, "Write every k-th round to trajectory.csv");
  app.add_option("--out", cfg.output_dir, "Output directory");
  app.add_option("--seed", cfg.seed, "Seed recorded with the outputs");
}

namespace detail {

inline std::optional<DistributionTag> parse_tag(const std::string& name) {
  for (DistributionTag tag : {DistributionTag::Uniform, DistributionTag::SemiCircle, DistributionTag::Triangular,
                              DistributionTag::InvertedSemiCircle}) {
    if (name == to_string(tag)) return tag;
  }
  return std::nullopt;
}

inline EmpiricalMeasure load_initial(const RunConfig& cfg) {
  if (const auto tag = parse_tag(cfg.distribution.empty() ? "uniform" : cfg.distribution)) {
    return initial_distribution({*tag, {cfg.support_lo, cfg.support_hi}}, cfg.n);
  }
  std::ifstream in(cfg.distribution);
  if (!in) throw Error(ErrorCode::Io, "cannot open distribution file '" + cfg.distribution + "'");
  return io::read_measure_csv(in);
}

inline double resolve_t(const RunConfig& cfg, const BumpCoupling& c) {
  const double bound = t_star(c, cfg.safety);
  if (cfg.t == "auto") return bound;
  double t = 0.0;
  try {
    std::size_t used = 0;
    t = std::stod(cfg.t, &used);
    if (used != cfg.t.size()) throw std::invalid_argument(cfg.t);
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidArgument, "t: expected a number or 'auto', got '" + cfg.t + "'");
  }
  if (!(t > 0.0 && t <= bound)) {
    throw Error(ErrorCode::InvalidArgument, fmt::format("t: {} is outside (0, {}]", t, bound));
  }
  return t;
}

inline std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p);
  if (!os) throw Error(ErrorCode::Io, "cannot write '" + p.string() + "'");
  return os;
}

inline std::string header(const RunConfig& cfg, const BumpCoupling& c, const GameConfig& game) {
  return fmt::format(
      "command: {}\ndistribution: {}\nn: {}\nt: {:.17g}\nsafety: {}\nlambda1: {:.17g}\nL1: {:.17g}\nalpha: {:.17g}\n"
      "picard_tol: {}\nseed: {}\n",
      cfg.command, cfg.distribution, cfg.n, game.t, cfg.safety, c.lambda1(), c.lipschitz(), game.alpha,
      cfg.picard_tol, cfg.seed);
}

inline void run_iterate(const RunConfig& cfg, const EmpiricalMeasure& m0, const BumpCoupling& c,
                        const GameConfig& game, const fs::path& dir) {
  fs::create_directories(dir);
  IterateOptions opts;
  opts.max_rounds = cfg.max_rounds;
  opts.coalesce_eps = cfg.coalesce_eps;
  opts.cluster_gap = cfg.cluster_gap;
  const IterationTrace trace = iterate(m0, game, c, opts);
  const ClusterReport rep = summarize_clusters(trace, cfg.cluster_gap, cfg.coalesce_eps);
  {
    auto os = open_out(dir / "trajectory.csv");
    io::write_trajectory_csv(os, trace, cfg.trajectory_stride);
  }
  {
    auto os = open_out(dir / "clusters.csv");
    io::write_clusters_csv(os, rep);
  }
  {
    auto os = open_out(dir / "final.csv");
    io::write_positions_csv(os, trace.final(), trace.weights);
  }
  auto os = open_out(dir / "summary.txt");
  os << header(cfg, c, game) << "rounds: " << trace.executed_rounds() << "\nstop: " << to_string(trace.stop_reason)
     << "\nclusters: " << rep.clusters.size() << "\n\n"
     << io::format_cluster_table(rep);
}

}  // namespace detail

/// Executes one command. Returns 0 on success, 2 on configuration or input
/// errors and 3 on solver failures; messages go to `err`.
inline int run(const RunConfig& cfg, std::ostream& err = std::cerr) {
  try {
    const BumpCoupling c = bump_coupling();
    const GameConfig game = make_game_config(c, detail::resolve_t(cfg, c), cfg.picard_tol);
    const fs::path dir(cfg.output_dir);

    if (cfg.command == "reproduce") {
      std::vector<DistributionTag> tags{DistributionTag::Uniform, DistributionTag::SemiCircle,
                                        DistributionTag::Triangular, DistributionTag::InvertedSemiCircle};
      if (!cfg.distribution.empty()) {
        const auto tag = detail::parse_tag(cfg.distribution);
        if (!tag) throw Error(ErrorCode::InvalidArgument, "reproduce: unknown distribution '" + cfg.distribution + "'");
        tags = {*tag};
      }
      for (DistributionTag tag : tags) {
        RunConfig sub = cfg;
        sub.distribution = std::string(to_string(tag));
        const EmpiricalMeasure m0 = initial_distribution({tag, {cfg.support_lo, cfg.support_hi}}, cfg.n);
        detail::run_iterate(sub, m0, c, game, dir / sub.distribution);
      }
      return kOk;
    }

    const EmpiricalMeasure m0 = detail::load_initial(cfg);
    if (cfg.command == "iterate") {
      detail::run_iterate(cfg, m0, c, game, dir);
      return kOk;
    }
    fs::create_directories(dir);
    if (cfg.command == "solve") {
      const EquilibriumResult eq = tilde_E(m0, game, c);
      IterationTrace trace;
      trace.weights = m0.weights();
      trace.rounds = {m0.positions(), eq.positions};
      {
        auto os = detail::open_out(dir / "trajectory.csv");
        io::write_trajectory_csv(os, trace);
      }
      auto os = detail::open_out(dir / "summary.txt");
      os << detail::header(cfg, c, game) << "picard_iters: " << eq.picard_iters
         << fmt::format("\ncertified_error: {:.6e}\nresidual: {:.6e}\n", eq.certified_error, eq.residual);
      return kOk;
    }
    if (cfg.command == "stability") {
      const StabilityReport rep = classify<BumpKernel>(m0.positions(), m0.weights(), game, c, cfg.fixed_tol);
      {
        auto os = detail::open_out(dir / "eigenvalues.csv");
        io::write_eigenvalues_csv(os, rep);
      }
      auto os = detail::open_out(dir / "summary.txt");
      os << detail::header(cfg, c, game) << "clusters: " << rep.cluster_sizes.size()
         << "\nspread_out: " << (rep.spread_out ? "yes" : "no")
         << fmt::format("\nrestricted_spectral_radius: {:.17g}\n", rep.restricted_spectral_radius)
         << "verdict: " << to_string(rep.verdict) << '\n';
      return kOk;
    }
    err << "error: unknown command '" << cfg.command << "'\n";
    return kConfigError;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    switch (e.code()) {
      case ErrorCode::NonConvergence:
      case ErrorCode::SingularA:
      case ErrorCode::NotSymmetric:
        return kSolverError;
      default:
        return kConfigError;
    }
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  }
}

/// Parses argv and runs. CLI11 parse failures (unknown flag or config key,
/// bad value) exit with 2.
inline int main_entry(int argc, const char* const* argv, std::ostream& err = std::cerr) {
  CLI::App app{"Iterated congregation game: equilibria, cluster formation and stability"};
  RunConfig cfg;
  configure_app(app, cfg);
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  }
  return run(cfg, err);
}

}  // namespace mfcluster::cli
