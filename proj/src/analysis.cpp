#include "mflab/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

#include "mflab/error.hpp"
#include "mflab/parallel.hpp"

namespace mflab {

namespace {

double qth_power(double x, double q) { return q == 2.0 ? x * x : std::pow(x, q); }

// SE of m^(1/q) from the SE of m.
double root_se(double m, double m_se, double q) {
  if (!(m > 0.0)) return 0.0;
  return m_se * std::pow(m, 1.0 / q - 1.0) / q;
}

std::string to_text(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

std::string join(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? "," : "") + to_text(xs[i]);
  return out;
}

}  // namespace

double StudyRow::extra(const std::string& key) const {
  for (const auto& [k, v] : extras) {
    if (k == key) return v;
  }
  throw Error(ErrorKind::InvalidArgument, "study row has no column '" + key + "'");
}

void require_increasing(const std::vector<std::size_t>& ns) {
  if (ns.empty()) throw Error(ErrorKind::InvalidArgument, "need at least one particle count");
  for (std::size_t i = 0; i < ns.size(); ++i) {
    if (ns[i] == 0) throw Error(ErrorKind::InvalidArgument, "particle counts must be positive");
    if (i > 0 && ns[i] <= ns[i - 1]) {
      throw Error(ErrorKind::InvalidArgument, "particle counts must be strictly increasing");
    }
  }
}

void fit_slope(ConvergenceStudy& study) {
  std::vector<double> xs, ys;
  for (const auto& row : study.rows) {
    if (!(row.stat > 0.0)) continue;
    const double x = study.x_label == "dt" ? row.extra("dt") : row.n;
    xs.push_back(std::log(x));
    ys.push_back(std::log(row.stat));
  }
  study.fit.reset();
  if (xs.size() >= 3) study.fit = least_squares(xs, ys);
}

ConvergenceStudy poc_study(const Dynamics& dyn, const ControlTuple& control,
                           const std::vector<double>& x0, const std::vector<std::size_t>& ns,
                           const SimConfig& cfg, PocOptions options,
                           const EmpiricalLaw* mean_field) {
  require_increasing(ns);
  validate(cfg);
  std::optional<MkvResult> solved;
  if (!mean_field) {
    solved = solve_mkv(dyn, control, x0, cfg);
    mean_field = &solved->law;
  }
  const EmpiricalLaw target = capped_law(*mean_field, cfg);
  const NoiseStream noise(cfg.seed);

  ConvergenceStudy study;
  study.name = "poc";
  study.meta = {{"q", to_text(options.q)},
                {"mean_field_atoms", std::to_string(mean_field->size())},
                {"reference_atoms", std::to_string(target.size())},
                {"shared_draw", options.shared_draw ? "true" : "false"}};
  if (solved) study.meta.emplace_back("picard_trace", join(solved->trace));

  for (std::size_t n : ns) {
    std::vector<double> d(cfg.replications);
    parallel_for(cfg.replications, cfg.threads, [&](std::size_t r) {
      const NoiseKey key = options.shared_draw
                               ? NoiseKey{NoiseDomain::mean_field, 0, 1}
                               : NoiseKey{NoiseDomain::particles, static_cast<std::uint32_t>(r), 1};
      const EmpiricalLaw X = integrate_system(dyn, control, x0, n, cfg.grid, noise, key);
      d[r] = qth_power(wasserstein_paths(capped_law(X, cfg), target, options.q, cfg.ot_cap),
                       options.q);
    });
    const Estimate e = mean_estimate(d);
    const double mix = std::pow(e.value, 1.0 / options.q);
    study.rows.push_back(StudyRow{static_cast<double>(n), e.value, e.std_error,
                                  {{"mixture", mix},
                                   {"mixture_se", root_se(e.value, e.std_error, options.q)}}});
  }
  fit_slope(study);
  return study;
}

ConvergenceStudy value_convergence_study(const Dynamics& dyn, const ControlFamily& family,
                                         const Psi& psi, const std::vector<double>& x0,
                                         const std::vector<std::size_t>& ns,
                                         const SimConfig& cfg) {
  require_increasing(ns);
  const ValueReport v0 = value_estimate(ValueProblem{dyn.model, dyn.lambdas, x0, 0, psi}, family, cfg);
  ConvergenceStudy study;
  study.name = "value";
  study.meta = {{"psi", psi.describe()},
                {"mean_field_sup", to_text(v0.sup)},
                {"mean_field_argmax", std::to_string(v0.argmax)}};
  for (std::size_t n : ns) {
    const ValueReport vn =
        value_estimate(ValueProblem{dyn.model, dyn.lambdas, x0, n, psi}, family, cfg);
    const double se0 = v0.estimates[v0.argmax].std_error;
    const double sen = vn.estimates[vn.argmax].std_error;
    study.rows.push_back(StudyRow{static_cast<double>(n), std::abs(vn.sup - v0.sup),
                                  std::sqrt(se0 * se0 + sen * sen),
                                  {{"sup_n", vn.sup},
                                   {"sup_mean_field", v0.sup},
                                   {"argmax_n", static_cast<double>(vn.argmax)}}});
  }
  fit_slope(study);
  return study;
}

ConvergenceStudy hausdorff_study(const Dynamics& dyn, const ControlFamily& family,
                                 const std::vector<double>& x0,
                                 const std::vector<std::size_t>& ns, const SimConfig& cfg,
                                 HausdorffOptions options) {
  require_increasing(ns);
  validate(cfg);
  const std::size_t C = family.size();
  std::vector<LawPtr> limits(C);
  for (std::size_t c = 0; c < C; ++c) {
    limits[c] = std::make_shared<const EmpiricalLaw>(
        capped_law(solve_mkv(dyn, family[c], x0, cfg).law, cfg));
  }
  std::vector<MetaLaw> U0;
  for (const auto& l : limits) U0.push_back(MetaLaw::dirac(l));

  ConvergenceStudy study;
  study.name = "hausdorff";
  study.meta = {{"q", to_text(options.q)},
                {"family_size", std::to_string(C)},
                {"identical_sets", options.identical_sets ? "true" : "false"}};
  const NoiseStream noise(cfg.seed);
  const std::size_t R = cfg.replications;

  for (std::size_t n : ns) {
    InnerDistanceCache cache;
    std::vector<MetaLaw> Un;
    std::vector<std::vector<LawPtr>> draws(C, std::vector<LawPtr>(R));
    if (options.identical_sets) {
      Un = U0;
    } else {
      parallel_for(C * R, cfg.threads, [&](std::size_t task) {
        const std::size_t c = task / R, r = task % R;
        draws[c][r] = std::make_shared<const EmpiricalLaw>(capped_law(
            integrate_system(dyn, family[c], x0, n, cfg.grid, noise,
                             NoiseKey{NoiseDomain::particles, static_cast<std::uint32_t>(r), 1}),
            cfg));
      });
      for (std::size_t c = 0; c < C; ++c) Un.push_back(MetaLaw::uniform(draws[c]));
      // Fill the inner-distance cache in parallel before the outer problem.
      parallel_for(C * C * R, cfg.threads, [&](std::size_t task) {
        const std::size_t r = task % R, cb = (task / R) % C, ca = task / (R * C);
        cache.get_or_compute(draws[ca][r], limits[cb], options.q, cfg.ot_cap);
      });
    }
    const HausdorffResult h = hausdorff_detail(Un, U0, options.q, cfg.ot_cap, &cache);

    double se = 0.0;
    if (!options.identical_sets && h.value > 0.0) {
      const bool forward = h.a_to_b >= h.b_to_a;
      const std::size_t ca = forward ? h.a_argmax : h.b_nearest;
      const std::size_t cb = forward ? h.a_nearest : h.b_argmax;
      std::vector<double> d(R);
      for (std::size_t r = 0; r < R; ++r) {
        d[r] = qth_power(cache.get_or_compute(draws[ca][r], limits[cb], options.q, cfg.ot_cap),
                         options.q);
      }
      const Estimate e = mean_estimate(d);
      se = root_se(e.value, e.std_error, options.q);
    }
    study.rows.push_back(StudyRow{static_cast<double>(n), h.value, se,
                                  {{"n_to_mean_field", h.a_to_b},
                                   {"mean_field_to_n", h.b_to_a}}});
  }
  fit_slope(study);
  return study;
}

double gbm_default_clip(double x0_abs_max, double a_high, double T) {
  const double r = x0_abs_max + 6.0 * std::sqrt(a_high * T);
  return r * r;
}

GbmDemoResult gbm_demo(const GBMDriftModel& model, const ControlFamily& family,
                       const TestFunction& phi, const std::vector<double>& x0_list,
                       const std::vector<std::size_t>& ns, const SimConfig& cfg) {
  require_increasing(ns);
  if (x0_list.empty()) throw Error(ErrorKind::EmptySet, "need at least one initial point");
  const std::vector<double> lambdas{GBMDriftModel::kLambda};
  const Psi psi = Psi::terminal_mean_payoff(phi);

  GbmDemoResult out;
  std::vector<ValueReport> v0;
  for (double x : x0_list) {
    v0.push_back(value_estimate(ValueProblem{model, lambdas, {x}, 0, psi}, family, cfg));
    out.mean_field.push_back(
        MeanFieldSup{x, v0.back().sup, v0.back().estimates[v0.back().argmax].std_error,
                     v0.back().argmax});
  }

  ConvergenceStudy& study = out.study;
  study.name = "gbm";
  study.meta = {{"phi", phi.name()},
                {"clip", to_text(phi.clip())},
                {"a_low", to_text(model.a_low())},
                {"a_high", to_text(model.a_high())},
                {"h", model.h().name()},
                {"x0_list", join(x0_list)}};
  for (std::size_t n : ns) {
    double worst = -1.0, worst_se = 0.0, worst_x0 = x0_list.front();
    for (std::size_t i = 0; i < x0_list.size(); ++i) {
      const ValueReport vn =
          value_estimate(ValueProblem{model, lambdas, {x0_list[i]}, n, psi}, family, cfg);
      const double gap = std::abs(vn.sup - v0[i].sup);
      if (gap > worst) {
        const double a = vn.estimates[vn.argmax].std_error;
        const double b = v0[i].estimates[v0[i].argmax].std_error;
        worst = gap;
        worst_se = std::sqrt(a * a + b * b);
        worst_x0 = x0_list[i];
      }
    }
    study.rows.push_back(StudyRow{static_cast<double>(n), worst, worst_se, {{"worst_x0", worst_x0}}});
  }
  fit_slope(study);
  return out;
}

ConvergenceStudy dt_refinement(const Dynamics& dyn, const ControlTuple& control,
                               const std::vector<double>& x0, const std::vector<std::size_t>& steps,
                               std::size_t n_particles, const SimConfig& cfg,
                               std::optional<double> closed_form) {
  require_increasing(steps);
  validate(cfg);
  const std::size_t finest = steps.back();
  for (std::size_t s : steps) {
    if (finest % s != 0) {
      throw Error(ErrorKind::InvalidArgument, "every step count must divide the finest one");
    }
  }
  const std::size_t R = cfg.replications;
  const NoiseStream noise(cfg.seed);
  const Psi second = Psi::terminal_moment(2.0, 2.0);

  std::vector<std::vector<double>> values(steps.size(), std::vector<double>(R));
  parallel_for(steps.size() * R, cfg.threads, [&](std::size_t task) {
    const std::size_t g = task / R, r = task % R;
    const TimeGrid grid(cfg.grid.T(), steps[g]);
    const auto sub = static_cast<std::uint32_t>(finest / steps[g]);
    values[g][r] = second(integrate_system(
        dyn, control, x0, n_particles, grid, noise,
        NoiseKey{NoiseDomain::particles, static_cast<std::uint32_t>(r), sub}));
  });

  ConvergenceStudy study;
  study.name = "refine";
  study.x_label = "dt";
  study.meta = {{"finest_steps", std::to_string(finest)},
                {"particles", std::to_string(n_particles)}};
  if (closed_form) study.meta.emplace_back("closed_form", to_text(*closed_form));
  for (std::size_t g = 0; g < steps.size(); ++g) {
    std::vector<double> diff(R);
    for (std::size_t r = 0; r < R; ++r) diff[r] = values[g][r] - values.back()[r];
    const Estimate d = mean_estimate(diff);
    const Estimate v = mean_estimate(values[g]);
    StudyRow row{static_cast<double>(steps[g]), std::abs(d.value), d.std_error,
                 {{"dt", cfg.grid.T() / static_cast<double>(steps[g])},
                  {"estimate", v.value},
                  {"estimate_se", v.std_error}}};
    if (closed_form) row.extras.emplace_back("closed_form_error", std::abs(v.value - *closed_form));
    study.rows.push_back(std::move(row));
  }
  fit_slope(study);
  return study;
}

}  // namespace mflab
