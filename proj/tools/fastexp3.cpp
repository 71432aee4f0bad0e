// fastexp3: runs regret, timing and acceptance-rate experiments and writes CSV.
//
// Exit codes: 0 success, 2 invalid configuration or arguments, 1 IO failure.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "fastexp3/harness.hpp"

namespace fe = fastexp3;

namespace {

constexpr int kExitIo = 1;
constexpr int kExitInvalid = 2;

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string backend;
  std::string algorithm;
  std::string env;
  std::optional<std::size_t> arms;
  std::optional<std::size_t> horizon;
  std::vector<std::string> settings;  // key=value
};

void add_common_flags(CLI::App& cmd, Overrides& o) {
  cmd.add_option("--config", o.config_path, "key = value config file");
  cmd.add_option("--seed", o.seed, "run a single seed");
  cmd.add_option("--out", o.out, "output path (default: stdout)");
  cmd.add_option("--backend", o.backend,
                 "naive | segtree | alias_snapshot | alias_double_buffered");
  cmd.add_option("--algorithm", o.algorithm,
                 "exp3-fixed | doubling | ftrl | delayed | exp4");
  cmd.add_option("--env", o.env,
                 "stochastic | zero | worst | adaptive | replay");
  cmd.add_option("--k", o.arms, "number of arms");
  cmd.add_option("--t", o.horizon, "horizon");
  cmd.add_option("--set", o.settings, "extra key=value override (repeatable)");
}

// Config file first, then flags on top.
fe::ExperimentConfig resolve(const Overrides& o) {
  fe::ExperimentConfig c;
  if (!o.config_path.empty()) c = fe::load_config(o.config_path);
  for (const std::string& kv : o.settings) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw fe::ConfigError("--set expects key=value, got '" + kv + "'");
    }
    fe::apply_setting(c, std::string_view(kv).substr(0, eq),
                      std::string_view(kv).substr(eq + 1));
  }
  if (!o.algorithm.empty()) fe::apply_setting(c, "algorithm", o.algorithm);
  if (!o.backend.empty()) fe::apply_setting(c, "backend", o.backend);
  if (!o.env.empty()) fe::apply_setting(c, "env", o.env);
  if (o.arms) c.arms = *o.arms;
  if (o.horizon) c.horizon = *o.horizon;
  if (o.seed) c.seeds = {*o.seed};
  if (!o.out.empty()) c.out = o.out;
  fe::validate(c);
  return c;
}

template <typename Fn>
void with_output(const std::string& path, Fn&& write) {
  if (path.empty()) {
    write(std::cout);
    std::cout.flush();
    if (!std::cout) throw std::ios_base::failure("write to stdout failed");
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::ios_base::failure("cannot open " + path);
  write(out);
  out.flush();
  if (!out) throw std::ios_base::failure("write to " + path + " failed");
}

void warn_regime(const fe::ExperimentConfig& c) {
  if (!fe::in_acceptance_regime(c.arms, c.horizon)) {
    std::cerr << "warning: T = " << c.horizon << " < 2 K ln K for K = "
              << c.arms
              << "; the rejection-attempt guarantee does not apply\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EXP3/EXP4 bandit experiments with fast sampling backends"};
  app.require_subcommand(1);

  Overrides regret_o, bench_o, accept_o, export_o;
  auto* regret = app.add_subcommand("regret", "pseudo-regret checkpoints");
  add_common_flags(*regret, regret_o);
  auto* bench = app.add_subcommand("bench", "per-round latency sweep");
  add_common_flags(*bench, bench_o);
  auto* accept =
      app.add_subcommand("accept-rate", "rejection attempts per block");
  add_common_flags(*accept, accept_o);
  auto* exp_env =
      app.add_subcommand("export-env", "write an environment's loss table");
  add_common_flags(*exp_env, export_o);

  auto* table1 = app.add_subcommand("table1", "desk-scale summary table");
  std::string table1_out;
  fe::Table1Options t1;
  table1->add_option("--out", table1_out, "output path (default: stdout)");
  table1->add_option("--timing-k", t1.timing_arms, "arms for the timing column");
  table1->add_option("--timing-rounds", t1.timing_rounds, "timed rounds");
  table1->add_option("--k", t1.regret_arms, "arms for the regret column");
  table1->add_option("--t", t1.regret_horizon, "horizon for the regret column");
  table1->add_option("--threads", t1.threads, "worker threads (0: all)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInvalid;
  }

  try {
    if (regret->parsed()) {
      const auto c = resolve(regret_o);
      warn_regime(c);
      const auto report = fe::run_regret(c);
      with_output(c.out, [&](std::ostream& os) {
        fe::write_regret_csv(c, report, os);
      });
    } else if (bench->parsed()) {
      const auto c = resolve(bench_o);
      const auto rows = fe::run_bench(c);
      with_output(c.out,
                  [&](std::ostream& os) { fe::write_bench_csv(c, rows, os); });
    } else if (accept->parsed()) {
      auto c = resolve(accept_o);
      if (accept_o.backend.empty()) c.backend = fe::Backend::kAliasSnapshot;
      warn_regime(c);
      const auto report = fe::run_accept_rate(c);
      with_output(c.out, [&](std::ostream& os) {
        fe::write_accept_csv(c, report, os);
      });
    } else if (exp_env->parsed()) {
      const auto c = resolve(export_o);
      auto env = fe::make_environment(c, c.seeds.front());
      with_output(c.out, [&](std::ostream& os) {
        fe::write_loss_table(*env, c.horizon, os);
      });
    } else if (table1->parsed()) {
      const auto rows = fe::run_table1(t1);
      with_output(table1_out,
                  [&](std::ostream& os) { fe::write_table1(rows, t1, os); });
    }
  } catch (const fe::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const fe::LoadError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  }
  return EXIT_SUCCESS;
}
