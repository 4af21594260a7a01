#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "wdq/verify.hpp"

namespace {

struct Flags {
  int dim = 0;
  int jet_order = 0;
  int base_degree = 0;
  int fedosov_order = 0;
  int hbar_order = 0;
  std::string subset;
  std::string connection;
  std::string poisson;
  std::uint64_t seed = 0;
  int trials = 0;
  std::string format;
  std::string out;
  std::string config;
  int q_max = 0;
};

struct Registered {
  std::map<std::string, CLI::Option*> opts;
  bool given(const std::string& name) const {
    auto it = opts.find(name);
    return it != opts.end() && it->second->count() > 0;
  }
};

Registered add_common(CLI::App* app, Flags& f) {
  Registered r;
  r.opts["dim"] = app->add_option("--dim", f.dim, "half dimension n of R^{2n}");
  r.opts["jet-order"] = app->add_option("--jet-order", f.jet_order, "Whitney jet order N_jet");
  r.opts["base-degree"] = app->add_option("--base-degree", f.base_degree, "total-degree cap (default 2 N_jet + 2)");
  r.opts["fedosov-order"] = app->add_option("--fedosov-order", f.fedosov_order, "Fedosov degree cap N_F");
  r.opts["hbar-order"] = app->add_option("--hbar-order", f.hbar_order, "highest power of h kept");
  r.opts["subset"] = app->add_option("--subset", f.subset, "catalogue name or subset JSON file");
  r.opts["connection"] = app->add_option("--connection", f.connection, "flat, curved-linear-n2 or connection JSON file");
  r.opts["poisson"] = app->add_option("--poisson", f.poisson, "Poisson matrix as JSON, e.g. [[0,1],[-1,0]]");
  r.opts["seed"] = app->add_option("--seed", f.seed, "seed for randomized trials");
  r.opts["trials"] = app->add_option("--trials", f.trials, "trials per invariant");
  r.opts["format"] = app->add_option("--format", f.format, "json or text")->check(CLI::IsMember({"json", "text"}));
  r.opts["out"] = app->add_option("--out", f.out, "write the report to this file");
  r.opts["config"] = app->add_option("--config", f.config, "JSON config file; flags override it");
  return r;
}

wdq::RunConfig resolve(const std::string& command, const Flags& f, const Registered& r) {
  wdq::RunConfig cfg;
  cfg.command = command;
  if (r.given("config")) cfg.merge_json(wdq::detail::read_json_file(f.config));
  cfg.command = command;
  if (r.given("dim")) cfg.n = f.dim;
  if (r.given("jet-order")) cfg.jet_order = f.jet_order;
  if (r.given("base-degree")) cfg.base_degree = f.base_degree;
  if (r.given("fedosov-order")) cfg.fedosov_order = f.fedosov_order;
  if (r.given("hbar-order")) cfg.hbar_order = f.hbar_order;
  if (r.given("subset")) cfg.subset = f.subset;
  if (r.given("connection")) cfg.connection = f.connection;
  if (r.given("seed")) cfg.seed = f.seed;
  if (r.given("trials")) cfg.trials = f.trials;
  if (r.given("format")) cfg.format = f.format;
  if (r.given("out")) cfg.out = f.out;
  if (r.given("poisson")) {
    try {
      cfg.poisson = nlohmann::json::parse(f.poisson);
    } catch (const nlohmann::json::exception& e) {
      throw wdq::ConfigError(std::string("--poisson is not JSON: ") + e.what());
    }
  }
  return cfg;
}

void emit(const wdq::RunConfig& cfg, const wdq::Report& rep) {
  std::string body = cfg.format == "text" ? rep.to_text() : rep.to_json().dump(2) + "\n";
  if (cfg.out.empty()) {
    std::cout << body;
    return;
  }
  std::ofstream out(cfg.out);
  if (!out) throw wdq::ConfigError("cannot write " + cfg.out);
  out << body;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact Fedosov quantization of Whitney functions"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(wdq::kVersion));

  Flags star_flags, verify_flags, hom_flags;
  std::string f_expr, g_expr, suite = "all";
  bool hochschild = false;

  auto* star_cmd = app.add_subcommand("star", "print the coefficients of f star g");
  Registered star_reg = add_common(star_cmd, star_flags);
  star_cmd->add_option("f", f_expr, "first factor")->required();
  star_cmd->add_option("g", g_expr, "second factor")->required();

  auto* verify_cmd = app.add_subcommand("verify", "run a verification suite");
  Registered verify_reg = add_common(verify_cmd, verify_flags);
  auto* suite_opt = verify_cmd->add_option("--suite", suite, "weyl, fedosov, whitney, derham, homology or all");

  auto* hom_cmd = app.add_subcommand("homology", "Betti and Poisson-homology tables");
  Registered hom_reg = add_common(hom_cmd, hom_flags);
  auto* hh_flag = hom_cmd->add_flag("--hochschild", hochschild, "add brute-force Hochschild dimensions");
  hom_reg.opts["q-max"] = hom_cmd->add_option("--q-max", hom_flags.q_max, "highest Hochschild degree (<= 3)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  wdq::RunConfig cfg;
  try {
    if (star_cmd->parsed()) {
      cfg = resolve("star", star_flags, star_reg);
      const bool induced = star_reg.given("subset") ||
                           (star_reg.given("config") && wdq::detail::read_json_file(star_flags.config).contains("subset"));
      emit(cfg, wdq::run_star(cfg, f_expr, g_expr, induced));
      return 0;
    }
    if (verify_cmd->parsed()) {
      cfg = resolve("verify", verify_flags, verify_reg);
      if (suite_opt->count() > 0) cfg.suite = suite;
      wdq::Report rep = wdq::run_verify(cfg);
      emit(cfg, rep);
      return rep.pass() ? 0 : 1;
    }
    cfg = resolve("homology", hom_flags, hom_reg);
    if (hh_flag->count() > 0) cfg.hochschild = true;
    if (hom_reg.given("q-max")) cfg.q_max = hom_flags.q_max;
    wdq::Report rep = wdq::run_homology(cfg);
    emit(cfg, rep);
    return rep.pass() ? 0 : 1;
  } catch (const wdq::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
