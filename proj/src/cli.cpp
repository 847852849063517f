#include "flatplan/cli.hpp"

#include "flatplan/errors.hpp"
#include "flatplan/io.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace flatplan::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Options {
  std::string scenario, plan_file, out;
  std::string method = "mip", mode = "simultaneous";
  std::optional<int> n, d;
  std::optional<double> dt;
  std::vector<int> ns{10, 15, 20, 25, 30};
  bool no_escalate = false;
};

plan::MultiMode mode_of(const std::string& s) {
  return s == "iterative" ? plan::MultiMode::iterative : plan::MultiMode::simultaneous;
}

io::Scenario load(const Options& o, std::ostream& err) {
  io::Scenario sc = io::parse_scenario(o.scenario);
  for (const auto& w : sc.warnings) err << "warning: " << w << '\n';
  if (o.n) sc.problem.spline.n = *o.n;
  if (o.d) sc.problem.spline.d = *o.d;
  if (o.dt) sc.dt = *o.dt;
  sc.problem.validate();
  return sc;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream f(path);
  if (!f) throw InputError("cannot write '" + path.string() + "'");
  f << j.dump(2) << '\n';
}

double verify_dt(const io::Scenario& sc, const plan::PlanningProblem& p) {
  return std::min(sc.dt, verify::default_dt(p.t0(), p.tN()));
}

json full_report(const verify::VerificationReport& rep, const plan::AuditReport& audit) {
  json j = io::report_json(rep);
  j["certificates"] = {{"checked", audit.checked}, {"worst_slack", audit.worst_slack}, {"ok", audit.ok()},
                       {"failures", audit.failures}};
  return j;
}

std::string show(const std::optional<double>& v) { return v ? std::to_string(*v) : std::string("n/a"); }

int cmd_plan(const Options& o, std::ostream& out, std::ostream& err) {
  io::Scenario sc = load(o, err);
  plan::PlanningProblem p = sc.problem;
  if (o.no_escalate) p.config.n_max = p.spline.n;
  const plan::Method method = o.method == "exact" ? plan::Method::exact : plan::Method::mip;
  const plan::EscalationResult e = plan::plan_with_escalation(p, method, mode_of(o.mode));
  const plan::PlanResult& r = e.result;

  const fs::path dir = o.out.empty() ? fs::path(".") : fs::path(o.out);
  fs::create_directories(dir);
  write_json(dir / "plan.json", io::plan_json(e.problem, r, {o.method, o.mode, e.attempts}));

  if (r.plans.empty()) {
    err << "planning failed: " << plan::to_string(r.status) << " (tried n =";
    for (const auto& a : e.attempts) err << ' ' << a.n;
    err << ")\n";
    for (const auto& line : r.infeasible_report) err << "  infeasible: " << line << '\n';
    return kInfeasible;
  }
  if (r.status != plan::PlanStatus::success)
    err << "warning: planner status " << plan::to_string(r.status) << '\n';

  if (e.problem.arrangement.dim() == 2) {
    for (const auto& a : r.plans) {
      const std::string name = r.plans.size() == 1 ? "trace.csv" : "trace_" + a.name + ".csv";
      std::ofstream f(dir / name);
      io::write_trace_csv(f, a.curve, sc.dt, sc.gravity);
    }
  }

  verify::VerifyOptions vo;
  vo.gravity = sc.gravity;
  const verify::VerificationReport rep =
      verify::check(verify::tracked(e.problem, r), e.problem.arrangement, verify_dt(sc, e.problem), vo);
  const plan::AuditReport audit = plan::audit_certificates(e.problem, r);
  write_json(dir / "report.json", full_report(rep, audit));

  out << "status " << plan::to_string(r.status) << "  n=" << e.problem.spline.n << " d=" << e.problem.spline.d
      << "  objective " << r.objective << '\n';
  for (const auto& a : r.plans) out << "  " << a.name << ": length " << a.length << '\n';
  out << "  min obstacle clearance " << show(rep.min_obstacle_clearance) << ", max waypoint error "
      << rep.max_waypoint_error << ", samples " << rep.samples << '\n';
  if (!rep.clean() || !audit.ok()) {
    err << "error: the returned plan does not verify\n";
    for (const auto& f : audit.failures) err << "  " << f << '\n';
    return kUnverified;
  }
  return kOk;
}

int cmd_verify(const Options& o, std::ostream& out, std::ostream& err) {
  const io::Scenario sc = load(o, err);
  const io::LoadedPlan lp = io::read_plan(o.plan_file, sc);
  if (lp.result.plans.empty()) {
    err << "plan file holds no trajectories (status " << plan::to_string(lp.result.status) << ")\n";
    return kVerifyFailed;
  }
  verify::VerifyOptions vo;
  vo.gravity = sc.gravity;
  const double dt = o.dt ? *o.dt : verify_dt(sc, lp.problem);
  const verify::VerificationReport rep =
      verify::check(verify::tracked(lp.problem, lp.result), lp.problem.arrangement, dt, vo);
  const plan::AuditReport audit = plan::audit_certificates(lp.problem, lp.result);
  const json j = full_report(rep, audit);
  if (o.out.empty())
    out << j.dump(2) << '\n';
  else
    write_json(o.out, j);
  return rep.clean() && audit.ok() ? kOk : kVerifyFailed;
}

int cmd_plot(const Options& o, std::ostream&, std::ostream& err) {
  const io::Scenario sc = load(o, err);
  std::vector<plan::AgentPlan> plans;
  plan::PlanningProblem p = sc.problem;
  if (!o.plan_file.empty()) {
    io::LoadedPlan lp = io::read_plan(o.plan_file, sc);
    plans = std::move(lp.result.plans);
    p = std::move(lp.problem);
  }
  std::ofstream f(o.out.empty() ? "plot.svg" : o.out);
  f << io::render_svg(p, plans);
  return kOk;
}

int cmd_sweep(const Options& o, std::ostream& out, std::ostream& err) {
  const io::Scenario sc = load(o, err);
  const io::SweepMethods m = o.method == "mip"     ? io::SweepMethods::mip
                             : o.method == "exact" ? io::SweepMethods::exact
                                                   : io::SweepMethods::both;
  const auto rows = io::sweep(sc.problem, o.ns, m, mode_of(o.mode));
  if (o.out.empty()) {
    io::write_sweep_csv(out, rows);
  } else {
    std::ofstream f(o.out);
    io::write_sweep_csv(f, rows);
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Flat-output trajectory planning among polyhedral obstacles", "flatplan"};
  app.require_subcommand(1);
  Options o;
  const auto methods = CLI::IsMember({"mip", "exact"});
  const auto modes = CLI::IsMember({"simultaneous", "iterative"});

  auto* plan = app.add_subcommand("plan", "plan, write plan.json, trace CSV and report.json");
  plan->add_option("scenario", o.scenario, "scenario JSON")->required()->check(CLI::ExistingFile);
  plan->add_option("--method", o.method, "mip or exact")->check(methods);
  plan->add_option("--mode", o.mode, "multi-agent coupling")->check(modes);
  plan->add_option("--n", o.n, "index of the last control point")->check(CLI::PositiveNumber);
  plan->add_option("--d", o.d, "spline order")->check(CLI::PositiveNumber);
  plan->add_option("--dt", o.dt, "trace and verification step (s)")->check(CLI::PositiveNumber);
  plan->add_option("--out", o.out, "output directory");
  plan->add_flag("--no-escalate", o.no_escalate, "fail instead of raising n");

  auto* ver = app.add_subcommand("verify", "check a plan file by dense sampling");
  ver->add_option("scenario", o.scenario, "scenario JSON")->required()->check(CLI::ExistingFile);
  ver->add_option("plan", o.plan_file, "plan JSON")->required()->check(CLI::ExistingFile);
  ver->add_option("--dt", o.dt, "sampling step (s)")->check(CLI::PositiveNumber);
  ver->add_option("--out", o.out, "report file (default: stdout)");

  auto* plot = app.add_subcommand("plot", "draw the scenario and an optional plan as SVG");
  plot->add_option("scenario", o.scenario, "scenario JSON")->required()->check(CLI::ExistingFile);
  plot->add_option("plan", o.plan_file, "plan JSON")->check(CLI::ExistingFile);
  plot->add_option("--out", o.out, "SVG file (default: plot.svg)");

  auto* sw = app.add_subcommand("sweep", "length and time over n for both methods");
  sw->add_option("scenario", o.scenario, "scenario JSON")->required()->check(CLI::ExistingFile);
  sw->add_option("--d", o.d, "spline order")->check(CLI::PositiveNumber);
  sw->add_option("--ns", o.ns, "values of n")->delimiter(',');
  sw->add_option("--method", o.method, "mip, exact or both")->check(CLI::IsMember({"mip", "exact", "both"}));
  sw->add_option("--mode", o.mode, "multi-agent coupling")->check(modes);
  sw->add_option("--out", o.out, "CSV file (default: stdout)");

  o.method = "";
  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kBadInput;
  }

  try {
    if (plan->parsed()) {
      if (o.method.empty()) o.method = "mip";
      return cmd_plan(o, out, err);
    }
    if (ver->parsed()) return cmd_verify(o, out, err);
    if (plot->parsed()) return cmd_plot(o, out, err);
    if (o.method.empty()) o.method = "both";
    return cmd_sweep(o, out, err);
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
  }
  return kBadInput;
}

}  // namespace flatplan::cli
