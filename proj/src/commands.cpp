#include "mflab/commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>

#include "mflab/analysis.hpp"
#include "mflab/config.hpp"
#include "mflab/control.hpp"
#include "mflab/error.hpp"
#include "mflab/io.hpp"
#include "mflab/models.hpp"
#include "mflab/sim.hpp"
#include "mflab/spectral.hpp"

namespace fs = std::filesystem;

namespace mflab {

namespace {

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kUsage = 2;

// Refuses to mix artifacts of different configurations in one directory.
bool prepare_output(std::ostream& err, const fs::path& dir, const std::string& hash,
                    const std::string& command, bool force) {
  const fs::path manifest = dir / "manifest.json";
  if (fs::exists(manifest) && !force) {
    std::string existing;
    try {
      existing = Json::parse(read_text(manifest)).value("config_hash", "");
    } catch (const std::exception&) {
      existing = "<unreadable>";
    }
    if (existing != hash) {
      err << "mflab: " << dir.string() << " holds output of config " << existing
                << " (this config is " << hash << "); use --force to overwrite\n";
      return false;
    }
  }
  fs::create_directories(dir);
  write_json(manifest, Json{{"config_hash", hash}, {"command", command}});
  return true;
}

Json report_json(const ConditionReport& r, const std::string& name) {
  Json j{{"check", name}, {"verdict", std::string(to_string(r.verdict))}};
  j["statistic"] = json_number(r.statistic);
  j["witness"] = r.witness ? Json(*r.witness) : Json(nullptr);
  j["witness_mode"] = r.witness_mode ? Json(*r.witness_mode) : Json(nullptr);
  j["partial_sum"] = json_number(r.partial_sum);
  j["tail_bound"] = json_number(r.tail_bound);
  j["detail"] = r.detail;
  return j;
}

Json base_report(const ExperimentConfig& cfg, double estimate, double se, std::size_t n) {
  Json j;
  j["estimate"] = json_number(estimate);
  j["std_error"] = json_number(se);
  j["n"] = n;
  j["R"] = cfg.sim.replications;
  j["config_hash"] = cfg.hash;
  return j;
}

std::string pm(double v, double se) { return format_number(v) + " +- " + format_number(se); }

int cmd_check(std::ostream& os, const ExperimentConfig& cfg, const fs::path& out) {
  const SpectralSpace space = cfg.space();
  const CoefficientModel& model = *cfg.model;
  Json checks = Json::array();
  bool ok = true;
  auto record = [&](const std::string& name, const ConditionReport& r) {
    checks.push_back(report_json(r, name));
    ok = ok && r.verdict == Verdict::pass;
    os << "check " << name << ": " << to_string(r.verdict);
    if (!r.detail.empty()) os << " (" << r.detail << ")";
    os << "\n";
  };

  ConditionReport constants;
  constants.detail = "alpha=" + format_number(cfg.constants.alpha) + " p=" +
                     format_number(cfg.constants.p) + " q=" + format_number(cfg.constants.q) +
                     " rho=" + format_number(cfg.constants.rho);
  record("constants", constants);
  record("summation", summation_condition(space));

  ConditionReport dz;
  try {
    const QuadratureResult qr = dz_integral(space, cfg.constants.alpha);
    dz.statistic = qr.value;
    dz.detail = "integral " + format_number(qr.value) + " with error estimate " +
                format_number(qr.error_estimate);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::QuadratureUnstable) throw;
    dz.verdict = Verdict::fail;
    dz.witness = 0;
    dz.detail = e.what();
  }
  record("dz_integral", dz);

  const std::size_t N = cfg.study.check_samples;
  ProbeOptions probe;
  probe.grid = cfg.sim.grid;
  probe.seed = cfg.sim.seed;
  const ProbeSampler sampler = make_probe_sampler(model, probe);
  record("growth", check_growth(model, space, sampler, N));
  record("mode_bounds", check_mode_bounds(model, space, sampler, N));
  try {
    record("lipschitz", check_lipschitz(model, space, make_pair_sampler(model, probe), N));
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::NotDeclared) throw;
    ConditionReport r;
    r.verdict = Verdict::fail;
    r.witness = 0;
    r.detail = e.what();
    record("lipschitz", r);
  }
  ConvexityOptions conv;
  conv.seed = cfg.sim.seed;
  record("convexity", check_convexity(model, sampler(0), uniform_control_grid(33), conv));
  record("predictability", check_predictability(model, sampler, N));
  for (std::size_t i = 0; i < cfg.controls.size(); ++i) {
    record("control_predictability_" + std::to_string(i),
           check_control_predictability(cfg.controls[i], sampler, N));
  }

  Json report{{"config_hash", cfg.hash}, {"passed", ok}, {"checks", checks}};
  write_json(out / "report.json", report);
  os << (ok ? "all checks passed" : "some checks failed") << "\n";
  return ok ? kOk : kFailure;
}

int cmd_simulate(std::ostream& os, const ExperimentConfig& cfg, const fs::path& out) {
  const auto draws = simulate_replications(cfg.dynamics(), cfg.control(), cfg.x0, cfg.n, cfg.sim);
  write_law_csv(draws.front().paths, out / "law_rep0.csv", cfg.hash);
  const Estimate moment = moment_report(draws, cfg.sim.p);
  Estimate value = moment;
  if (cfg.psi) {
    std::vector<double> v;
    for (const auto& d : draws) v.push_back((*cfg.psi)(d.paths));
    value = mean_estimate(v);
  }
  Json j = base_report(cfg, value.value, value.std_error, cfg.n);
  j["psi"] = cfg.psi ? cfg.psi->describe() : "moment";
  j["moment"] = Json{{"p", cfg.sim.p},
                     {"estimate", json_number(moment.value)},
                     {"std_error", json_number(moment.std_error)}};
  write_json(out / "report.json", j);
  os << "simulate: " << (cfg.psi ? cfg.psi->describe() : "moment") << " = "
            << pm(value.value, value.std_error) << " (n=" << cfg.n
            << ", R=" << cfg.sim.replications << ")\n";
  return kOk;
}

int cmd_mkv(std::ostream& os, const ExperimentConfig& cfg, const fs::path& out) {
  MkvResult res;
  try {
    res = solve_mkv(cfg.dynamics(), cfg.control(), cfg.x0, cfg.sim);
  } catch (const PicardNoConvergence& e) {
    Json j = base_report(cfg, NAN, NAN, cfg.sim.mkv_population);
    j["converged"] = false;
    Json tr = Json::array();
    for (double d : e.trace()) tr.push_back(json_number(d));
    j["trace"] = tr;
    write_json(out / "report.json", j);
    throw;
  }
  write_law_csv(res.law, out / "law.csv", cfg.hash);
  Estimate value;
  if (cfg.psi) {
    std::vector<double> v;
    for (const auto& a : res.law.atoms()) v.push_back(cfg.psi->per_atom(a) + cfg.psi->offset());
    value = mean_estimate(v);
  }
  Json j = base_report(cfg, value.value, value.std_error, cfg.sim.mkv_population);
  j["converged"] = true;
  j["iterations"] = res.iterations;
  Json tr = Json::array();
  for (double d : res.trace) tr.push_back(json_number(d));
  j["trace"] = tr;
  write_json(out / "report.json", j);
  os << "mkv: iterations=" << res.iterations << " trace_length=" << res.trace.size()
            << " last_distance=" << format_number(res.trace.back());
  if (cfg.psi) os << " " << cfg.psi->describe() << " = " << pm(value.value, value.std_error);
  os << "\n";
  return kOk;
}

void print_study(std::ostream& os, const ConvergenceStudy& s) {
  os << s.name << ":";
  for (const auto& r : s.rows) {
    os << " " << s.x_label << "=" << format_number(r.n) << " " << pm(r.stat, r.se) << ";";
  }
  if (s.fit) {
    os << " slope=" << format_number(s.fit->slope) << " [" << format_number(s.fit->ci_low)
              << ", " << format_number(s.fit->ci_high) << "]";
  }
  os << "\n";
}

int finish_study(std::ostream& os, ConvergenceStudy study, const ExperimentConfig& cfg, const fs::path& out) {
  study.config_hash = cfg.hash;
  write_study(study, out);
  print_study(os, study);
  return kOk;
}

int cmd_poc(std::ostream& os, const ExperimentConfig& cfg, const fs::path& out) {
  PocOptions opt;
  opt.q = cfg.study.q;
  opt.shared_draw = cfg.study.shared_draw;
  return finish_study(os, poc_study(cfg.dynamics(), cfg.control(), cfg.x0, cfg.study.ns, cfg.sim, opt),
                      cfg, out);
}

int cmd_value(std::ostream& os, const ExperimentConfig& cfg, const fs::path& out) {
  if (!cfg.psi) throw Error(ErrorKind::ConfigError, "the value command needs a [psi] section");
  const ControlFamily family = cfg.family();
  const ValueReport rep = value_estimate(
      ValueProblem{*cfg.model, cfg.lambdas, cfg.x0, cfg.n, *cfg.psi}, family, cfg.sim);
  Json j = base_report(cfg, rep.sup, rep.estimates[rep.argmax].std_error, cfg.n);
  j["argmax"] = rep.argmax;
  j["seed"] = rep.seed;
  Json per = Json::array();
  for (std::size_t i = 0; i < family.size(); ++i) {
    per.push_back(Json{{"index", i},
                       {"control", cfg.controls[i].describe()},
                       {"estimate", json_number(rep.estimates[i].value)},
                       {"std_error", json_number(rep.estimates[i].std_error)}});
  }
  j["controls"] = per;
  if (cfg.study.eps) {
    const EpsilonCertificate c = epsilon_optimal(rep, *cfg.study.eps);
    j["epsilon_optimal"] = Json{{"eps", *cfg.study.eps},
                                {"index", c.index},
                                {"gap", json_number(c.gap)},
                                {"mc_error", json_number(c.mc_error)},
                                {"certified_eps", json_number(c.certified_eps)}};
  }
  write_json(out / "report.json", j);
  os << "value: sup = " << pm(rep.sup, rep.estimates[rep.argmax].std_error)
            << " at control " << rep.argmax << " (n=" << cfg.n << ")\n";
  return finish_study(os, value_convergence_study(cfg.dynamics(), family, *cfg.psi, cfg.x0,
                                              cfg.study.ns, cfg.sim),
                      cfg, out);
}

int cmd_hausdorff(std::ostream& os, const ExperimentConfig& cfg, const fs::path& out) {
  HausdorffOptions opt;
  opt.q = cfg.study.q;
  opt.identical_sets = cfg.study.identical_sets;
  return finish_study(os, 
      hausdorff_study(cfg.dynamics(), cfg.family(), cfg.x0, cfg.study.ns, cfg.sim, opt), cfg, out);
}

int cmd_gbm(std::ostream& os, const ExperimentConfig& cfg, const fs::path& out) {
  const auto* model = dynamic_cast<const GBMDriftModel*>(cfg.model.get());
  if (!model) throw Error(ErrorKind::ConfigError, "'model.type': the gbm command needs gbm_drift");
  double xmax = 0.0;
  for (double x : cfg.study.x0_list) xmax = std::max(xmax, std::abs(x));
  const TestFunction phi("clipped_square",
                         gbm_default_clip(xmax, model->a_high(), cfg.constants.T));
  GbmDemoResult res = gbm_demo(*model, cfg.family(), phi, cfg.study.x0_list, cfg.study.ns, cfg.sim);
  Json mf = Json::array();
  for (const auto& m : res.mean_field) {
    mf.push_back(Json{{"x0", m.x0}, {"sup", json_number(m.sup)}, {"std_error", json_number(m.se)},
                      {"argmax", m.argmax}});
    os << "gbm: x0=" << format_number(m.x0) << " mean-field sup = " << pm(m.sup, m.se)
              << " (closed form " << format_number(m.x0 * m.x0 + model->a_high() * cfg.constants.T)
              << ")\n";
  }
  Json j = base_report(cfg, res.study.rows.back().stat, res.study.rows.back().se,
                       static_cast<std::size_t>(res.study.rows.back().n));
  j["mean_field"] = mf;
  write_json(out / "report.json", j);
  return finish_study(os, std::move(res.study), cfg, out);
}

int cmd_refine(std::ostream& os, const ExperimentConfig& cfg, const fs::path& out) {
  std::optional<double> closed;
  if (cfg.study.closed_form) {
    const auto* lin = dynamic_cast<const LinearModel*>(cfg.model.get());
    if (!lin) throw Error(ErrorKind::ConfigError, "'study.closed_form': only available for the linear model");
    double m2 = 0.0;
    for (std::size_t k = 0; k < cfg.lambdas.size(); ++k) {
      m2 += lin->second_moment(cfg.lambdas[k], cfg.x0[k], cfg.constants.T);
    }
    closed = m2;
  }
  return finish_study(os, dt_refinement(cfg.dynamics(), cfg.control(), cfg.x0, cfg.study.steps, cfg.n,
                                    cfg.sim, closed),
                      cfg, out);
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"check", "simulate", "mkv",  "poc",
                                              "value", "hausdorff", "gbm", "refine"};
  return names;
}

int run_command(const std::string& command, const RunOptions& opt, std::ostream& os,
                std::ostream& err) {
  const auto& names = command_names();
  if (std::find(names.begin(), names.end(), command) == names.end()) {
    err << "mflab: unknown command " << command << "\n";
    return kUsage;
  }
  ExperimentConfig cfg;
  try {
    cfg = load_config(opt.config, opt.seed);
  } catch (const Error& e) {
    err << "mflab: " << e.what() << "\n";
    return kUsage;
  }
  cfg.sim.threads = std::max<std::size_t>(1, opt.threads);
  const fs::path out = opt.out.empty() ? fs::path("out") / command : fs::path(opt.out);
  if (!prepare_output(err, out, cfg.hash, command, opt.force)) return kUsage;

  try {
    if (command == "check") return cmd_check(os, cfg, out);
    if (command == "simulate") return cmd_simulate(os, cfg, out);
    if (command == "mkv") return cmd_mkv(os, cfg, out);
    if (command == "poc") return cmd_poc(os, cfg, out);
    if (command == "value") return cmd_value(os, cfg, out);
    if (command == "hausdorff") return cmd_hausdorff(os, cfg, out);
    if (command == "gbm") return cmd_gbm(os, cfg, out);
    if (command == "refine") return cmd_refine(os, cfg, out);
  } catch (const Error& e) {
    err << "mflab: " << e.what() << "\n";
    return e.kind() == ErrorKind::ConfigError ? kUsage : kFailure;
  } catch (const std::exception& e) {
    err << "mflab: " << e.what() << "\n";
    return kFailure;
  }
  return kUsage;
}

}  // namespace mflab
