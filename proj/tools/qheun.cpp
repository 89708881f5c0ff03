#include <CLI11.hpp>

#include <iostream>

#include "qheun/cli.hpp"
#include "qheun/errors.hpp"

int main(int argc, char** argv) {
  qheun::RunConfig cfg;
  cfg.bits = qheun::default_bits();
  long bits = cfg.bits;

  CLI::App app{"q-Heun spectral polynomial: exact recursion, q -> 0 asymptotics and root verification"};
  app.require_subcommand(1, 1);

  auto add_common = [&](CLI::App* sub, bool needs_params) {
    auto* opt = sub->add_option("--params", cfg.params_path, "parameter file (key = value lines)");
    if (needs_params) opt->required();
    sub->add_option("--q", cfg.q, "q value in (0,1), repeatable");
    sub->add_option("--bits", bits, "working precision in bits")->check(CLI::Range(64L, 1L << 20));
    sub->add_option("--tol-exponent", cfg.tol_exponent, "exponent tolerance");
    sub->add_option("--tol-prefactor", cfg.tol_prefactor, "relative prefactor tolerance");
    sub->add_option("--out", cfg.out_dir, "output directory for CSV/JSON files");
  };
  add_common(app.add_subcommand("analyze", "regime classification and boundary warnings"), true);
  add_common(app.add_subcommand("predict", "predicted root asymptotics"), true);
  add_common(app.add_subcommand("roots", "numerical roots of the spectral polynomial"), true);
  add_common(app.add_subcommand("verify", "compare numerical roots with predictions"), true);
  auto* sweep = app.add_subcommand("sweep", "classify and verify along a parameter axis");
  add_common(sweep, true);
  sweep->add_option("--axis", cfg.axis, "parameter to vary")->required();
  sweep->add_option("--from", cfg.from, "first value")->required();
  sweep->add_option("--to", cfg.to, "last value")->required();
  sweep->add_option("--step", cfg.step, "positive step")->required();
  sweep->add_option("--compensate", cfg.compensate, "parameter adjusted so that N stays fixed");
  add_common(app.add_subcommand("selftest", "verify the built-in reference parameter sets"), false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : qheun::exit_code::kUsage;
  }
  cfg.bits = static_cast<mpfr_prec_t>(bits);

  const std::string name = app.get_subcommands().front()->get_name();
  const qheun::CommandResult r = qheun::run_command(name, cfg);
  std::cout << r.out;
  std::cerr << r.err;
  try {
    qheun::write_files(r, cfg.out_dir);
  } catch (const qheun::Error& e) {
    std::cerr << e.what() << '\n';
    return qheun::exit_code::kUsage;
  }
  return r.exit_code;
}
