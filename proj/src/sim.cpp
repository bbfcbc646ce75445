#include "mflab/sim.hpp"

#include <cmath>
#include <string>

#include "mflab/error.hpp"
#include "mflab/parallel.hpp"

namespace mflab {

namespace {

struct ModeStep {
  double decay;
  double phi1;
  double sqrt_phi2;

  ModeStep(double lambda, double dt) {
    if (lambda < 1e-8) {
      decay = std::exp(-lambda * dt);
      phi1 = dt;
      sqrt_phi2 = std::sqrt(dt);
    } else {
      decay = std::exp(-lambda * dt);
      phi1 = -std::expm1(-lambda * dt) / lambda;
      sqrt_phi2 = std::sqrt(-std::expm1(-2.0 * lambda * dt) / (2.0 * lambda));
    }
  }

  double operator()(double x, double b, double s, double z) const {
    return decay * x + phi1 * b + sqrt_phi2 * s * z;
  }
};

// Seed offset for the subsample used by Wasserstein evaluations against a
// mean-field law, kept apart from the particle noise.
constexpr std::uint64_t kSubsampleSalt = 0x5bd1e995u;

double pth_power(double x, double p) { return p == 2.0 ? x * x : std::pow(x, p); }

}  // namespace

void validate(const SimConfig& cfg) {
  if (cfg.replications < 1) throw Error(ErrorKind::InvalidArgument, "replications must be >= 1");
  if (cfg.mkv_population < 2) throw Error(ErrorKind::InvalidArgument, "mkv_population must be >= 2");
  if (!(cfg.picard_tol > 0.0)) throw Error(ErrorKind::InvalidArgument, "picard_tol must be > 0");
  if (cfg.picard_max_iters < 1) throw Error(ErrorKind::InvalidArgument, "picard_max_iters must be >= 1");
  if (!(cfg.p >= 1.0)) throw Error(ErrorKind::InvalidArgument, "p must be >= 1");
  if (cfg.ot_cap < 1) throw Error(ErrorKind::InvalidArgument, "ot_cap must be >= 1");
}

EmpiricalLaw capped_law(const EmpiricalLaw& law, const SimConfig& cfg) {
  return subsample_law(law, cfg.ot_cap, cfg.seed ^ kSubsampleSalt);
}

double step_mode(double lambda, double dt, double x, double b, double s, double z) {
  return ModeStep(lambda, dt)(x, b, s, z);
}

PathSample semigroup_flow(std::span<const double> lambdas, std::span<const double> x0,
                          const TimeGrid& grid) {
  if (x0.size() != lambdas.size()) {
    throw Error(ErrorKind::DimensionMismatch, "initial state has " + std::to_string(x0.size()) +
                                                  " coefficients, expected " +
                                                  std::to_string(lambdas.size()));
  }
  PathSample path(grid, lambdas.size());
  for (std::size_t j = 0; j < grid.nodes(); ++j) {
    const double t = grid.time(j);
    for (std::size_t k = 0; k < lambdas.size(); ++k) path(k, j) = std::exp(-lambdas[k] * t) * x0[k];
  }
  return path;
}

EmpiricalLaw integrate_system(const Dynamics& dyn, const ControlTuple& controls,
                              std::span<const double> x0, std::size_t n, const TimeGrid& grid,
                              const NoiseStream& noise, NoiseKey key,
                              const EmpiricalLaw* frozen_law) {
  const CoefficientModel& model = dyn.model;
  const std::size_t K = model.modes();
  if (dyn.lambdas.size() != K) {
    throw Error(ErrorKind::DimensionMismatch, "space has " + std::to_string(dyn.lambdas.size()) +
                                                  " modes, model has " + std::to_string(K));
  }
  if (n == 0) throw Error(ErrorKind::InvalidArgument, "need at least one particle");
  if (controls.empty()) throw Error(ErrorKind::EmptySet, "no control assigned");
  if (x0.size() != K && x0.size() != n * K) {
    throw Error(ErrorKind::DimensionMismatch, "initial state must have K or n*K coefficients");
  }
  if (frozen_law && !(frozen_law->grid() == grid)) {
    throw Error(ErrorKind::DimensionMismatch, "frozen law lives on a different time grid");
  }

  std::vector<ModeStep> steppers;
  steppers.reserve(K);
  for (double l : dyn.lambdas) steppers.emplace_back(l, grid.dt());

  std::vector<PathSample> atoms(n, PathSample(grid, K));
  for (std::size_t i = 0; i < n; ++i) {
    const double* src = x0.size() == K ? x0.data() : x0.data() + i * K;
    for (std::size_t k = 0; k < K; ++k) atoms[i](k, 0) = src[k];
  }
  EmpiricalLaw state(std::move(atoms));
  auto& paths = state.mutable_atoms();

  std::vector<double> b(K), s(K);
  for (std::size_t j = 0; j < grid.steps(); ++j) {
    // Law frozen at the left endpoint: all particles read columns <= j only.
    const LawStats stats =
        model.law_dependent() ? model.law_stats(j, frozen_law ? *frozen_law : state) : LawStats{};
    for (std::size_t i = 0; i < n; ++i) {
      PathSample& path = paths[i];
      const ControlPoint f = controls[(key.first_slot + i) % controls.size()].evaluate(j, path);
      model.coefficients(f, j, path, stats, b, s);
      for (std::size_t k = 0; k < K; ++k) {
        double z = 0.0;
        if (s[k] != 0.0) {
          z = noise.coarse_normal(key.domain, key.replication,
                                  key.first_slot + static_cast<std::uint32_t>(i),
                                  static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(j),
                                  key.substeps);
        }
        const double next = steppers[k](path(k, j), b[k], s[k], z);
        if (!std::isfinite(next) || !std::isfinite(b[k]) || !std::isfinite(s[k])) {
          throw Error(ErrorKind::NonFiniteState, "step " + std::to_string(j) + " particle " +
                                                     std::to_string(i) + " mode " +
                                                     std::to_string(k));
        }
        path(k, j + 1) = next;
      }
    }
  }
  return state;
}

EmpiricalLaw SystemDraw::law_at(std::size_t step) const {
  std::vector<PathSample> atoms;
  atoms.reserve(paths.size());
  for (const auto& a : paths.atoms()) atoms.push_back(stopped_path(a, step));
  return EmpiricalLaw(std::move(atoms));
}

SystemDraw simulate_particles(const Dynamics& dyn, const ControlTuple& controls,
                              std::span<const double> x0, std::size_t n, const SimConfig& cfg,
                              std::uint32_t replication) {
  const NoiseStream noise(cfg.seed);
  return SystemDraw{integrate_system(dyn, controls, x0, n, cfg.grid, noise,
                                     NoiseKey{NoiseDomain::particles, replication, 1}),
                    replication};
}

std::vector<SystemDraw> simulate_replications(const Dynamics& dyn, const ControlTuple& controls,
                                              std::span<const double> x0, std::size_t n,
                                              const SimConfig& cfg) {
  validate(cfg);
  std::vector<std::optional<SystemDraw>> slots(cfg.replications);
  parallel_for(cfg.replications, cfg.threads, [&](std::size_t r) {
    slots[r] = simulate_particles(dyn, controls, x0, n, cfg, static_cast<std::uint32_t>(r));
  });
  std::vector<SystemDraw> draws;
  draws.reserve(slots.size());
  for (auto& d : slots) draws.push_back(std::move(*d));
  return draws;
}

MkvResult solve_mkv(const Dynamics& dyn, const ControlTuple& controls,
                    std::span<const double> x0, const SimConfig& cfg) {
  validate(cfg);
  const NoiseStream noise(cfg.seed);
  const std::size_t M = cfg.mkv_population;

  EmpiricalLaw prev(std::vector<PathSample>{semigroup_flow(dyn.lambdas, x0, cfg.grid)});
  std::vector<double> trace;

  // Split the population into blocks that integrate in parallel against the
  // same frozen law; particle slots keep their global index so the noise
  // does not depend on the block layout.
  const std::size_t blocks = std::min(M, std::max<std::size_t>(1, cfg.threads));
  for (std::size_t it = 1; it <= cfg.picard_max_iters; ++it) {
    std::vector<std::optional<EmpiricalLaw>> parts(blocks);
    parallel_for(blocks, cfg.threads, [&](std::size_t bi) {
      const std::size_t lo = bi * M / blocks, hi = (bi + 1) * M / blocks;
      parts[bi] = integrate_system(
          dyn, controls, x0, hi - lo, cfg.grid, noise,
          NoiseKey{NoiseDomain::mean_field, 0, 1, static_cast<std::uint32_t>(lo)}, &prev);
    });
    std::vector<PathSample> atoms;
    atoms.reserve(M);
    for (auto& part : parts) {
      for (const auto& a : part->atoms()) atoms.push_back(a);
    }
    EmpiricalLaw cur(std::move(atoms));
    const double d = wasserstein_paths(capped_law(cur, cfg), capped_law(prev, cfg), cfg.p,
                                       cfg.ot_cap);
    trace.push_back(d);
    prev = std::move(cur);
    if (d < cfg.picard_tol) return MkvResult{std::move(prev), std::move(trace), it};
  }
  throw PicardNoConvergence("no convergence after " + std::to_string(cfg.picard_max_iters) +
                                " iterations (last distance " + std::to_string(trace.back()) + ")",
                            trace);
}

CouplingReport synchronous_coupling(const Dynamics& dyn, const ControlTuple& controls,
                                    std::span<const double> x0_n, std::span<const double> x0_0,
                                    std::size_t n, const EmpiricalLaw& mean_field,
                                    const SimConfig& cfg) {
  validate(cfg);
  if (x0_n.size() != x0_0.size()) {
    throw Error(ErrorKind::DimensionMismatch, "initial states differ in dimension");
  }
  const NoiseStream noise(cfg.seed);
  const EmpiricalLaw target = capped_law(mean_field, cfg);
  CouplingReport rep;
  rep.lhs_samples.resize(cfg.replications);
  rep.rhs_samples.resize(cfg.replications);
  parallel_for(cfg.replications, cfg.threads, [&](std::size_t r) {
    const NoiseKey key{NoiseDomain::particles, static_cast<std::uint32_t>(r), 1};
    const EmpiricalLaw Z = integrate_system(dyn, controls, x0_0, n, cfg.grid, noise, key, &mean_field);
    const EmpiricalLaw Y = integrate_system(dyn, controls, x0_n, n, cfg.grid, noise, key, nullptr);
    rep.lhs_samples[r] =
        pth_power(wasserstein_paths(capped_law(Y, cfg), target, cfg.p, cfg.ot_cap), cfg.p);
    rep.rhs_samples[r] =
        pth_power(wasserstein_paths(capped_law(Z, cfg), target, cfg.p, cfg.ot_cap), cfg.p);
  });
  const Estimate l = mean_estimate(rep.lhs_samples);
  const Estimate rr = mean_estimate(rep.rhs_samples);
  rep.lhs = l.value;
  rep.lhs_se = l.std_error;
  rep.rhs = rr.value;
  rep.rhs_se = rr.std_error;
  double dx = 0.0;
  for (std::size_t k = 0; k < x0_n.size(); ++k) dx += (x0_n[k] - x0_0[k]) * (x0_n[k] - x0_0[k]);
  rep.dx_term = pth_power(std::sqrt(dx), cfg.p);
  return rep;
}

Estimate moment_report(const std::vector<SystemDraw>& draws, double p) {
  if (draws.empty()) throw Error(ErrorKind::EmptySet, "no draws");
  std::vector<double> per_draw, per_particle;
  for (const auto& d : draws) {
    std::vector<double> vals;
    vals.reserve(d.paths.size());
    for (const auto& a : d.paths.atoms()) vals.push_back(pth_power(sup_norm_upto(a, a.grid().steps()), p));
    per_draw.push_back(kahan_sum(vals) / static_cast<double>(vals.size()));
    per_particle.insert(per_particle.end(), vals.begin(), vals.end());
  }
  return draws.size() >= 2 ? mean_estimate(per_draw) : mean_estimate(per_particle);
}

IncrementReport increment_report(const std::vector<SystemDraw>& draws, double p,
                                 std::span<const std::size_t> lag_steps) {
  if (lag_steps.size() < 3) throw Error(ErrorKind::DegenerateFit, "need at least 3 lags");
  if (draws.empty()) throw Error(ErrorKind::EmptySet, "no draws");
  const TimeGrid& grid = draws.front().paths.grid();
  IncrementReport rep;
  for (std::size_t L : lag_steps) {
    if (L == 0 || L > grid.steps()) {
      throw Error(ErrorKind::InvalidArgument, "lag of " + std::to_string(L) + " steps is outside the grid");
    }
    double acc = 0.0;
    std::size_t count = 0;
    for (const auto& d : draws) {
      for (const auto& a : d.paths.atoms()) {
        for (std::size_t j = 0; j + L <= grid.steps(); ++j) {
          double n2 = 0.0;
          for (std::size_t k = 0; k < a.modes(); ++k) {
            const double dx = a(k, j + L) - a(k, j);
            n2 += dx * dx;
          }
          acc += pth_power(std::sqrt(n2), p);
          ++count;
        }
      }
    }
    rep.lags.push_back(static_cast<double>(L) * grid.dt());
    rep.means.push_back(acc / static_cast<double>(count));
  }
  for (double m : rep.means) {
    if (!(m > 0.0)) rep.degenerate = true;
  }
  if (!rep.degenerate) {
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < rep.lags.size(); ++i) {
      lx.push_back(std::log(rep.lags[i]));
      ly.push_back(std::log(rep.means[i]));
    }
    rep.fit = least_squares(lx, ly);
  }
  return rep;
}

}  // namespace mflab
