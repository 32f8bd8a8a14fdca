// Command-line front end: gen, run, validate.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "sfot/io.hpp"
#include "sfot/sfot.hpp"

namespace fs = std::filesystem;
using sfot::io::Json;

namespace {

int report_failure(const sfot::Error& e) {
  Json block = {{"failure", {{"code", std::string(sfot::to_string(e.code()))}, {"message", e.what()}}}};
  std::cerr << block.dump() << "\n";
  return e.code() == sfot::ErrorCode::IOError ? 3 : 2;
}

struct GenOptions {
  std::string templ = "kmt-density";
  int grid = 30;
  std::uint64_t seed = 1;
  double h = 0.5;
  double eps = 1e-6;
  std::string out;
};

int cmd_gen(const GenOptions& o) {
  const auto inst = sfot::generate_instance(sfot::parse_template(o.templ), o.grid, o.seed, o.h, o.eps);
  inst.validate();
  sfot::io::write_file(o.out, sfot::io::dump(sfot::io::instance_to_json(inst)));
  std::cout << "wrote " << o.out << " (" << inst.size() << " sites, sum w = " << inst.params.w.sum() << ")\n";
  return 0;
}

struct RunOptions {
  std::string instance;
  std::string out = "sfot_out";
  std::optional<double> h, eps;
  double zeta = 1e-10;
  int max_iter = 1000;
  int ell_max = 40;
  std::string psi0, trace, svg;
};

int cmd_run(const RunOptions& o) {
  auto inst = sfot::io::read_instance(o.instance);
  if (o.h) inst.params.h = *o.h;
  if (o.eps) inst.params.eps = *o.eps;
  inst.params.validate();
  std::optional<sfot::Vector> psi0;
  if (!o.psi0.empty()) psi0 = sfot::io::read_psi(o.psi0);

  sfot::SolverConfig config;
  config.zeta = o.zeta;
  config.max_iter = o.max_iter;
  config.ell_max = o.ell_max;
  const auto sol = sfot::newton_solve(inst, config, psi0);

  fs::create_directories(o.out);
  const fs::path dir(o.out);
  sfot::io::write_file((dir / "solution.json").string(), sfot::io::dump(sfot::io::solution_to_json(sol, inst, config)));
  {
    std::ostringstream csv;
    sfot::io::write_trace_csv(sol.trace, csv);
    sfot::io::write_file(o.trace.empty() ? (dir / "trace.csv").string() : o.trace, csv.str());
  }
  if (sol.psi.size() > 0) {
    std::ostringstream svg;
    sfot::io::write_svg(sol.diagram, inst.domain, inst.sites, svg);
    sfot::io::write_file(o.svg.empty() ? (dir / "cells.svg").string() : o.svg, svg.str());
  }

  std::cout << (sol.converged ? "converged" : "not converged") << " after " << sol.trace.size()
            << " iterations, residual " << sol.residual() << "\n";
  if (sol.failure) {
    Json block = {{"failure", {{"code", std::string(sfot::to_string(sol.failure->code))}, {"message", sol.failure->message}}}};
    std::cerr << block.dump() << "\n";
  }
  return sol.converged ? 0 : 1;
}

struct ValidateOptions {
  std::string a, b, instance, out;
};

int cmd_validate(const ValidateOptions& o) {
  const auto inst = sfot::io::read_instance(o.instance);
  const auto sa = sfot::io::read_solution(o.a);
  const auto sb = sfot::io::read_solution(o.b);
  const std::string text = sfot::io::dump(sfot::io::validation_report(inst, sa, sb));
  if (o.out.empty())
    std::cout << text;
  else
    sfot::io::write_file(o.out, text);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semi-discrete optimal transport with storage fees"};
  app.require_subcommand(1);
  app.set_help_flag("--help", "Print this help message and exit");  // -h would clash with --h

  GenOptions gen;
  auto* g = app.add_subcommand("gen", "Generate a seeded instance");
  g->add_option("--template", gen.templ, "kmt-density | storage-random | disconnected")
      ->check(CLI::IsMember({"kmt-density", "storage-random", "disconnected"}));
  g->add_option("--grid", gen.grid, "Sites per side")->check(CLI::Range(2, 1000));
  g->add_option("--seed", gen.seed, "Random seed");
  g->add_option("--h", gen.h, "Regularization scale");
  g->add_option("--eps", gen.eps, "Mass floor");
  g->add_option("--out", gen.out, "Instance file to write")->required();

  RunOptions run;
  auto* r = app.add_subcommand("run", "Solve an instance");
  r->add_option("instance", run.instance, "Instance file")->required()->check(CLI::ExistingFile);
  r->add_option("--out", run.out, "Output directory");
  r->add_option("--h", run.h, "Override h");
  r->add_option("--eps", run.eps, "Override eps");
  r->add_option("--zeta", run.zeta, "Residual tolerance");
  r->add_option("--max-iter", run.max_iter, "Iteration limit");
  r->add_option("--ell-max", run.ell_max, "Backtracking limit")->check(CLI::Range(30, 1000));
  r->add_option("--psi0", run.psi0, "Initial dual vector (JSON array or solution document)");
  r->add_option("--trace", run.trace, "Trace CSV path (default <out>/trace.csv)");
  r->add_option("--svg", run.svg, "SVG path (default <out>/cells.svg)");

  ValidateOptions val;
  auto* v = app.add_subcommand("validate", "Compare two solutions of one instance");
  v->add_option("solution_a", val.a)->required()->check(CLI::ExistingFile);
  v->add_option("solution_b", val.b)->required()->check(CLI::ExistingFile);
  v->add_option("instance", val.instance)->required()->check(CLI::ExistingFile);
  v->add_option("--out", val.out, "Report path (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*g) return cmd_gen(gen);
    if (*r) return cmd_run(run);
    if (*v) return cmd_validate(val);
  } catch (const sfot::Error& e) {
    return report_failure(e);
  } catch (const std::exception& e) {
    std::cerr << Json{{"failure", {{"code", "IOError"}, {"message", e.what()}}}}.dump() << "\n";
    return 3;
  }
  return 0;
}
