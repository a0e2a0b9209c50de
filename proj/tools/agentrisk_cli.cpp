// agentrisk: assess collision risk of predicted agents along an ego trajectory.
//
//   agentrisk assess   --scenario s.json --methods imhof,ltz [--format json|csv]
//   agentrisk compare  --scenario s.json --methods imhof,ltz,sos-d4
//   agentrisk oracle   --scenario s.json --mc-samples 1000000 --seed 7
//   agentrisk treering-dump --order 4
//
// Exit codes: 0 ok, 1 invalid input or usage, 2 numerical failure.

#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "agentrisk/agentrisk.hpp"

namespace {

struct Args {
  std::string scenario;
  std::string methods = "imhof";
  std::int64_t mc_samples = 100000;
  std::uint64_t seed = 0;
  double tol = 1e-8;
  int halfspaces = 12;
  int sos_degree = 2;
  std::string out;
  std::string format = "json";
  int order = 2;
};

void emit(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(path);
  if (!f) throw agentrisk::ValidationError("cannot write '" + path + "'");
  f << text;
}

agentrisk::EngineOptions engine_options(const Args& a) {
  if (!(a.tol > 0.0)) throw agentrisk::ValidationError("--tol must be positive");
  if (a.halfspaces < 1) throw agentrisk::ValidationError("--halfspaces must be at least 1");
  return {a.tol, a.halfspaces, a.mc_samples, a.seed};
}

std::string render(const agentrisk::RiskReport& r, const std::string& format) {
  if (format == "csv") return agentrisk::report_to_csv(r);
  if (format == "table") return agentrisk::report_to_table(r);
  return agentrisk::report_to_json(r).dump(2) + "\n";
}

std::string treering_dump(int order) {
  const auto d = agentrisk::dubins_system();
  const auto dyn = agentrisk::derive_position_moments(d.sys, d.graph, order);
  std::ostringstream os;
  os << "# unicycle moment dynamics, position order " << order << "\n";
  os << "# " << dyn.size() << " expressions\n";
  os << dyn.dump();
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Collision risk assessment for predicted agent trajectories"};
  app.require_subcommand(1);
  Args a;

  auto add_engine_flags = [&](CLI::App* c, bool with_methods) {
    c->add_option("--scenario", a.scenario, "Scenario JSON file")->required()->check(CLI::ExistingFile);
    if (with_methods)
      c->add_option("--methods", a.methods,
                    "Comma-separated: imhof, ltz, chebyshev-quad, chebyshev-halfspace, sos, sos-d{2,4,6}, mc");
    c->add_option("--mc-samples", a.mc_samples, "Monte Carlo samples")->check(CLI::Range(std::int64_t{1000}, std::int64_t{1} << 40));
    c->add_option("--seed", a.seed, "Monte Carlo seed");
    c->add_option("--tol", a.tol, "Imhof absolute accuracy");
    c->add_option("--halfspaces", a.halfspaces, "Halfspaces for chebyshev-halfspace");
    c->add_option("--sos-degree", a.sos_degree, "Degree used by plain 'sos'")->check(CLI::IsMember({2, 4, 6}));
    c->add_option("--out", a.out, "Write output here instead of stdout");
  };

  auto* assess = app.add_subcommand("assess", "Per-step and trajectory risk for each method");
  add_engine_flags(assess, true);
  assess->add_option("--format", a.format, "Report format")->check(CLI::IsMember({"json", "csv"}));

  auto* compare = app.add_subcommand("compare", "Method matrix and timing table");
  add_engine_flags(compare, true);
  compare->add_option("--format", a.format, "Report format")->check(CLI::IsMember({"table", "json", "csv"}));

  auto* oracle = app.add_subcommand("oracle", "Monte Carlo reference only");
  add_engine_flags(oracle, false);
  oracle->add_option("--format", a.format, "Report format")->check(CLI::IsMember({"json", "csv"}));

  auto* dump = app.add_subcommand("treering-dump", "Print the derived moment recursions");
  dump->add_option("--order", a.order, "Position moment order")
      ->check(CLI::Range(1, agentrisk::kMaxControlMomentOrder));
  dump->add_option("--out", a.out, "Write output here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (dump->parsed()) {
      emit(treering_dump(a.order), a.out);
      return 0;
    }
    if (compare->parsed() && compare->count("--format") == 0) a.format = "table";
    const auto scenario = agentrisk::load_scenario(a.scenario);
    const auto methods = oracle->parsed() ? std::vector<agentrisk::MethodSpec>{{agentrisk::Method::mc}}
                                          : agentrisk::parse_method_list(a.methods, a.sos_degree);
    const auto report = agentrisk::run_assess(scenario, methods, engine_options(a));
    emit(render(report, a.format), a.out);
    return 0;
  } catch (const agentrisk::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const agentrisk::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  }
}
