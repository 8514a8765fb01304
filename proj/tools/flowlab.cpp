#include "commands.hpp"

#include "flowlab/errors.hpp"

#include <CLI11.hpp>

#include <functional>
#include <iostream>

using namespace flowlab;

int main(int argc, char** argv) {
  CLI::App app{"flowlab: coupled diffusion flows, interpolation decompositions and estimators"};
  app.require_subcommand(1);

  cli::Options opt;
  std::uint64_t seed = 0;
  std::string out;
  int threads = 0;
  std::function<int()> action;

  auto with_config = [&](const std::string& name, const std::string& help,
                         std::function<int(const cli::Options&)> fn) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", opt.config, "configuration file")->required();
    sub->add_option("--seed", seed, "override mc.seed");
    sub->add_option("--out", out, "output directory");
    sub->add_option("--threads", threads, "worker threads (FLOWLAB_THREADS otherwise)");
    sub->callback([&, sub, fn] {
      if (sub->count("--seed")) opt.seed = seed;
      if (sub->count("--out")) opt.out = out;
      if (sub->count("--threads")) opt.threads = threads;
      action = [&, fn] { return fn(opt); };
    });
  };
  with_config("run", "run an experiment and write its verdict", cli::run);
  with_config("check", "regularity condition report", cli::check);
  with_config("decompose", "interpolation decomposition of one path", cli::decompose);
  with_config("moments", "flow difference moments", cli::moments);
  with_config("bel", "Bismut-Elworthy-Li gradient and Hessian", cli::bel);
  with_config("semigroup", "semigroup difference vs its integral representation", cli::semigroup);
  with_config("invariant", "invariant measure shift", cli::invariant);
  with_config("oracle", "closed-form values for linear models", cli::oracle);
  app.add_subcommand("list", "catalog of models and experiments")->callback([&] {
    action = [] { return cli::list(); };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  try {
    return action();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
  }
  return 1;
}
