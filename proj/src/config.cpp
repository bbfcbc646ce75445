#include "mflab/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "mflab/analysis.hpp"
#include "mflab/error.hpp"

namespace mflab {

namespace {

[[noreturn]] void fail(const std::string& what) { throw Error(ErrorKind::ConfigError, what); }

std::string trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

// Typed access to one section; remembers which keys were read so the rest
// can be rejected as unknown.
class Section {
 public:
  Section(std::string name, const std::map<std::string, std::string>* entries)
      : name_(std::move(name)), entries_(entries) {}

  bool present() const { return entries_ != nullptr; }
  std::string path(const std::string& key) const {
    return name_.empty() ? key : name_ + "." + key;
  }

  std::optional<std::string> raw(const std::string& key) {
    used_.insert(key);
    if (!entries_) return std::nullopt;
    auto it = entries_->find(key);
    if (it == entries_->end()) return std::nullopt;
    return it->second;
  }

  std::string text(const std::string& key, const std::string& fallback) {
    return raw(key).value_or(fallback);
  }

  std::string required_text(const std::string& key) {
    auto v = raw(key);
    if (!v) fail("missing required key '" + path(key) + "'");
    return *v;
  }

  double to_number(const std::string& key, const std::string& s) const {
    double v = 0.0;
    const std::string t = trim(s);
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size() || !std::isfinite(v)) {
      fail("'" + path(key) + "': expected a finite number, got '" + s + "'");
    }
    return v;
  }

  double number(const std::string& key, double fallback) {
    auto v = raw(key);
    return v ? to_number(key, *v) : fallback;
  }

  std::optional<double> maybe_number(const std::string& key) {
    auto v = raw(key);
    if (!v) return std::nullopt;
    return to_number(key, *v);
  }

  double required_number(const std::string& key) { return to_number(key, required_text(key)); }

  std::size_t to_count(const std::string& key, const std::string& s) const {
    const double v = to_number(key, s);
    if (v < 0 || v != std::floor(v) || v > 4.0e9) {
      fail("'" + path(key) + "': expected a nonnegative integer, got '" + s + "'");
    }
    return static_cast<std::size_t>(v);
  }

  std::size_t count(const std::string& key, std::size_t fallback) {
    auto v = raw(key);
    return v ? to_count(key, *v) : fallback;
  }

  std::optional<std::vector<double>> numbers(const std::string& key) {
    auto v = raw(key);
    if (!v) return std::nullopt;
    std::vector<double> out;
    for (const auto& item : split_list(*v)) out.push_back(to_number(key, item));
    if (out.empty()) fail("'" + path(key) + "': expected a comma-separated list");
    return out;
  }

  std::optional<std::vector<std::size_t>> counts(const std::string& key) {
    auto v = raw(key);
    if (!v) return std::nullopt;
    std::vector<std::size_t> out;
    for (const auto& item : split_list(*v)) out.push_back(to_count(key, item));
    if (out.empty()) fail("'" + path(key) + "': expected a comma-separated list");
    return out;
  }

  bool flag(const std::string& key, bool fallback) {
    auto v = raw(key);
    if (!v) return fallback;
    const std::string t = trim(*v);
    if (t == "true" || t == "1" || t == "yes") return true;
    if (t == "false" || t == "0" || t == "no") return false;
    fail("'" + path(key) + "': expected true or false, got '" + *v + "'");
  }

  void reject_unknown() const {
    if (!entries_) return;
    for (const auto& [k, v] : *entries_) {
      if (!used_.count(k)) fail("unknown key '" + path(k) + "'");
    }
  }

 private:
  std::string name_;
  const std::map<std::string, std::string>* entries_;
  std::set<std::string> used_;
};

Section section(const ConfigSections& s, const std::string& name) {
  auto it = s.find(name);
  return Section(name, it == s.end() ? nullptr : &it->second);
}

template <typename Fn>
auto with_path(const std::string& path, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ConfigError) throw;
    fail("'" + path + "': " + e.what());
  }
}

Feature parse_feature(Section& s) {
  const std::string f = trim(s.text("feature", "mode:0"));
  if (f == "sup_norm") return Feature::running_sup();
  if (f.rfind("mode:", 0) == 0) {
    return Feature::mode_value(s.to_count("feature", f.substr(5)));
  }
  fail("'" + s.path("feature") + "': expected mode:<k> or sup_norm, got '" + f + "'");
}

FeedbackControl parse_control(Section& s) {
  const std::string kind = trim(s.required_text("kind"));
  return with_path(s.path("kind"), [&]() -> FeedbackControl {
    if (kind == "constant") return FeedbackControl::constant(s.required_number("f"));
    if (kind == "schedule") {
      auto bps = s.numbers("breakpoints").value_or(std::vector<double>{});
      auto vals = s.numbers("values");
      if (!vals) fail("missing required key '" + s.path("values") + "'");
      return FeedbackControl::schedule(std::move(bps), std::move(*vals));
    }
    if (kind == "threshold") {
      const Feature feat = parse_feature(s);
      return FeedbackControl::threshold(feat, s.number("level", 0.0), s.required_number("f_below"),
                                        s.required_number("f_above"));
    }
    if (kind == "tabular") {
      const Feature feat = parse_feature(s);
      auto table = s.numbers("table");
      if (!table) fail("missing required key '" + s.path("table") + "'");
      return FeedbackControl::tabular(s.count("time_bins", 1), feat,
                                      s.numbers("feature_edges").value_or(std::vector<double>{}),
                                      std::move(*table));
    }
    fail("'" + s.path("kind") + "': unknown control kind '" + kind + "'");
  });
}

std::vector<double> expand(Section& s, const std::string& key, const std::string& spec, std::size_t K) {
  return with_path(s.path(key), [&] { return expand_mode_sequence(spec, K); });
}

}  // namespace

std::string canonical_text(const ConfigSections& sections) {
  std::string out;
  for (const auto& [sec, entries] : sections) {
    for (const auto& [k, v] : entries) {
      out += (sec.empty() ? k : sec + "." + k) + "=" + v + "\n";
    }
  }
  return out;
}

std::string config_hash(const ConfigSections& sections) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : canonical_text(sections)) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

SpectralSpace ExperimentConfig::space() const {
  return SpectralSpace(lambdas, c_bounds, constants, riesz_low, riesz_high);
}

ControlFamily ExperimentConfig::family() const { return ControlFamily::shared(controls); }

ControlTuple ExperimentConfig::control() const { return ControlTuple{controls.at(study.control)}; }

ExperimentConfig parse_config(std::istream& in, std::optional<std::uint64_t> seed_override) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    fail(std::string("malformed config: ") + e.what());
  }

  ExperimentConfig cfg;
  ConfigSections& secs = cfg.sections;
  for (const auto& [name, node] : tree) {
    if (node.empty()) {
      secs[""][name] = trim(node.data());
    } else {
      auto& entries = secs[name];
      for (const auto& [k, v] : node) {
        if (!v.empty()) fail("nested value under '" + name + "." + k + "'");
        entries[k] = trim(v.data());
      }
    }
  }
  if (seed_override) secs["sim"]["seed"] = std::to_string(*seed_override);

  static const std::set<std::string> known{"",    "space", "space.constants", "model", "controls",
                                           "psi", "sim",   "study"};
  for (const auto& [name, entries] : secs) {
    if (known.count(name) || name.rfind("controls.", 0) == 0) continue;
    fail("unknown section [" + name + "]");
  }

  // Root.
  Section root = section(secs, "");
  const double version = root.required_number("schema_version");
  if (version != kSchemaVersion) {
    fail("'schema_version': unsupported version " + root.required_text("schema_version") +
         " (expected " + std::to_string(kSchemaVersion) + ")");
  }
  root.reject_unknown();

  // Constants.
  Section cs = section(secs, "space.constants");
  {
    const double rho = cs.required_number("rho");
    const double alpha = cs.number("alpha", (1.0 - rho) / 2.0);
    const double p = cs.required_number("p");
    const double q = cs.required_number("q");
    const double T = cs.required_number("T");
    cfg.constants = with_path("space.constants", [&] { return validate_constants(alpha, p, q, rho, T); });
  }
  cs.reject_unknown();

  // Model, then the space whose defaults depend on it.
  Section sp = section(secs, "space");
  Section md = section(secs, "model");
  const std::size_t K = sp.count("K", 0);
  if (K == 0) fail("'space.K': expected a positive integer");
  const std::string type = trim(md.required_text("type"));
  std::string default_lambdas;
  if (type == "gbm_drift") {
    if (K != 1) fail("'space.K': gbm_drift has exactly one mode");
    const std::string h = trim(md.text("h", "zero"));
    const double hp = md.number("h_param", h == "clipped_identity" ? 10.0 : 0.0);
    cfg.model = with_path("model", [&] {
      return std::make_shared<const GBMDriftModel>(md.required_number("a_low"),
                                                   md.required_number("a_high"),
                                                   ScalarFunction(h, hp));
    });
    default_lambdas = "1e-12";
  } else if (type == "heat_meanfield") {
    cfg.model = with_path("model", [&] {
      return std::make_shared<const HeatMeanFieldModel>(
          K, md.number("c_scale", 1.0), InteractionFunction(trim(md.text("g", "tanh_attract"))),
          md.number("v_low", 0.5), md.number("v_high", 1.0));
    });
    default_lambdas = "k^2*pi^2";
  } else if (type == "linear") {
    cfg.model = with_path("model", [&] {
      return std::make_shared<const LinearModel>(K, md.number("beta", 0.0), md.number("theta", 0.0),
                                                 md.number("s", 1.0));
    });
  } else {
    fail("'model.type': unknown model type '" + type + "'");
  }
  md.reject_unknown();

  auto lam = sp.raw("lambdas");
  if (!lam && default_lambdas.empty()) fail("missing required key 'space.lambdas'");
  cfg.lambdas = expand(sp, "lambdas", lam.value_or(default_lambdas), K);
  if (auto cb = sp.raw("c_bounds")) {
    cfg.c_bounds = expand(sp, "c_bounds", *cb, K);
  } else {
    cfg.c_bounds = cfg.model->declared_mode_bounds();
  }
  cfg.riesz_low = sp.number("riesz_low", 1.0);
  cfg.riesz_high = sp.number("riesz_high", 1.0);
  with_path("space", [&] { return cfg.space(); });
  sp.reject_unknown();

  // Simulation.
  Section sm = section(secs, "sim");
  cfg.sim.grid = with_path("sim.steps", [&] { return TimeGrid(cfg.constants.T, sm.count("steps", 20)); });
  cfg.sim.replications = sm.count("replications", cfg.sim.replications);
  cfg.sim.mkv_population = sm.count("mkv_population", cfg.sim.mkv_population);
  cfg.sim.picard_max_iters = sm.count("picard_max_iters", cfg.sim.picard_max_iters);
  cfg.sim.picard_tol = sm.number("picard_tol", cfg.sim.picard_tol);
  cfg.sim.p = sm.number("p", cfg.constants.p);
  cfg.sim.ot_cap = sm.count("ot_cap", cfg.sim.ot_cap);
  {
    const std::string seed = trim(sm.text("seed", "1"));
    std::uint64_t v = 0;
    const auto res = std::from_chars(seed.data(), seed.data() + seed.size(), v);
    if (seed.empty() || res.ec != std::errc() || res.ptr != seed.data() + seed.size()) {
      fail("'sim.seed': expected an unsigned 64-bit integer, got '" + seed + "'");
    }
    cfg.sim.seed = v;
  }
  cfg.x0 = sm.numbers("x0").value_or(std::vector<double>{0.0});
  if (cfg.x0.size() == 1 && K > 1) cfg.x0.assign(K, cfg.x0[0]);
  if (cfg.x0.size() != K) fail("'sim.x0': expected 1 or K = " + std::to_string(K) + " values");
  cfg.n = sm.count("n", cfg.n);
  if (cfg.n == 0) fail("'sim.n': expected a positive integer");
  with_path("sim", [&] {
    validate(cfg.sim);
    return 0;
  });
  sm.reject_unknown();

  // Study.
  Section st = section(secs, "study");
  StudySettings& s = cfg.study;
  if (auto ns = st.counts("ns")) s.ns = *ns;
  with_path("study.ns", [&] {
    require_increasing(s.ns);
    return 0;
  });
  s.q = st.number("q", cfg.constants.q);
  if (!(s.q >= 1.0)) fail("'study.q': expected q >= 1");
  s.x0_list = st.numbers("x0_list").value_or(std::vector<double>{cfg.x0[0]});
  if (auto steps = st.counts("steps")) s.steps = *steps;
  s.check_samples = st.count("check_samples", s.check_samples);
  s.shared_draw = st.flag("shared_draw", false);
  s.identical_sets = st.flag("identical_sets", false);
  s.control = st.count("control", 0);
  s.eps = st.maybe_number("eps");
  if (s.eps && !(*s.eps > 0.0)) fail("'study.eps': expected eps > 0");
  s.closed_form = st.flag("closed_form", false);
  st.reject_unknown();

  // Controls.
  Section cl = section(secs, "controls");
  if (cl.present()) {
    const std::size_t count = cl.count("count", 0);
    if (count == 0) fail("'controls.count': expected a positive integer");
    for (std::size_t i = 0; i < count; ++i) {
      const std::string name = "controls." + std::to_string(i);
      if (!secs.count(name)) fail("missing section [" + name + "]");
      Section c = section(secs, name);
      cfg.controls.push_back(parse_control(c));
      c.reject_unknown();
    }
    for (const auto& [name, entries] : secs) {
      if (name.rfind("controls.", 0) != 0) continue;
      const std::string idx = name.substr(9);
      bool ok = !idx.empty() && std::all_of(idx.begin(), idx.end(), ::isdigit) &&
                std::stoul(idx) < count && std::to_string(std::stoul(idx)) == idx;
      if (!ok) fail("unknown section [" + name + "]");
    }
  } else {
    for (const auto& [name, entries] : secs) {
      if (name.rfind("controls.", 0) == 0) fail("section [" + name + "] needs [controls] with count");
    }
    cfg.controls.push_back(FeedbackControl::constant(1.0));
  }
  cl.reject_unknown();
  if (s.control >= cfg.controls.size()) fail("'study.control': index out of range");

  // Payoff.
  Section ps = section(secs, "psi");
  if (ps.present()) {
    const std::string name = trim(ps.required_text("name"));
    const double offset = ps.number("offset", 0.0);
    auto make_phi = [&] {
      const std::string phi = trim(ps.text("phi", "one"));
      double clip = 0.0;
      if (phi == "clipped_square") {
        if (auto c = ps.maybe_number("clip")) {
          clip = *c;
        } else if (const auto* gbm = dynamic_cast<const GBMDriftModel*>(cfg.model.get())) {
          double xmax = 0.0;
          for (double x : s.x0_list) xmax = std::max(xmax, std::abs(x));
          clip = gbm_default_clip(xmax, gbm->a_high(), cfg.constants.T);
        } else {
          fail("missing required key 'psi.clip'");
        }
      } else {
        ps.raw("clip");
      }
      return with_path("psi.phi", [&] { return TestFunction(phi, clip); });
    };
    if (name == "terminal_moment") {
      cfg.psi = with_path("psi.r", [&] { return Psi::terminal_moment(ps.number("r", 2.0), cfg.constants.q); });
    } else if (name == "terminal_mean_payoff") {
      cfg.psi = Psi::terminal_mean_payoff(make_phi());
    } else if (name == "running_integral") {
      cfg.psi = Psi::running_integral(make_phi());
    } else {
      fail("'psi.name': unknown payoff '" + name + "'");
    }
    cfg.psi = cfg.psi->shifted(offset);
  } else if (cfg.constants.q >= 2.0) {
    cfg.psi = Psi::terminal_moment(2.0, cfg.constants.q);
  }
  ps.reject_unknown();

  cfg.hash = config_hash(secs);
  return cfg;
}

ExperimentConfig parse_config_text(const std::string& text,
                                   std::optional<std::uint64_t> seed_override) {
  std::istringstream in(text);
  return parse_config(in, seed_override);
}

ExperimentConfig load_config(const std::filesystem::path& path,
                             std::optional<std::uint64_t> seed_override) {
  std::ifstream in(path);
  if (!in) fail("cannot open config file " + path.string());
  return parse_config(in, seed_override);
}

}  // namespace mflab
