#include "mflab/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "mflab/error.hpp"

namespace mflab {

namespace fs = std::filesystem;

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

Json json_number(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

Json study_to_json(const ConvergenceStudy& study) {
  Json j;
  j["study"] = study.name;
  j["config_hash"] = study.config_hash;
  j["x"] = study.x_label;
  Json meta = Json::object();
  for (const auto& [k, v] : study.meta) meta[k] = v;
  j["meta"] = meta;
  Json rows = Json::array();
  for (const auto& r : study.rows) {
    Json row;
    row["n"] = json_number(r.n);
    row["stat"] = json_number(r.stat);
    row["se"] = json_number(r.se);
    for (const auto& [k, v] : r.extras) row[k] = json_number(v);
    rows.push_back(row);
  }
  j["rows"] = rows;
  if (study.fit) {
    const LinearFit& f = *study.fit;
    j["fit"] = Json{{"slope", json_number(f.slope)},       {"intercept", json_number(f.intercept)},
                    {"r_squared", json_number(f.r_squared)}, {"slope_se", json_number(f.slope_se)},
                    {"ci_low", json_number(f.ci_low)},       {"ci_high", json_number(f.ci_high)}};
  } else {
    j["fit"] = nullptr;
  }
  return j;
}

std::string study_csv(const ConvergenceStudy& study) {
  std::ostringstream os;
  os << "n,stat,se";
  if (!study.rows.empty()) {
    for (const auto& e : study.rows.front().extras) os << ',' << e.first;
  }
  os << '\n';
  for (const auto& r : study.rows) {
    os << format_number(r.n) << ',' << format_number(r.stat) << ',' << format_number(r.se);
    for (const auto& e : r.extras) os << ',' << format_number(e.second);
    os << '\n';
  }
  return os.str();
}

namespace {

std::string fixed2(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

}  // namespace

std::string study_svg(const ConvergenceStudy& study) {
  const double W = 640, H = 420, L = 70, R = 20, Tm = 40, B = 50;
  std::vector<double> xs, ys, lo, hi;
  for (const auto& r : study.rows) {
    if (!(r.stat > 0.0) || !(r.n > 0.0)) continue;
    xs.push_back(std::log10(r.n));
    ys.push_back(std::log10(r.stat));
    lo.push_back(std::log10(std::max(r.stat - 2.0 * r.se, r.stat * 1e-3)));
    hi.push_back(std::log10(r.stat + 2.0 * r.se));
  }
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\" viewBox=\"0 0 " << W << ' ' << H << "\">\n";
  os << "<metadata><![CDATA[\n" << study_csv(study) << "]]></metadata>\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        "font-size=\"15\">"
     << study.name << " (log-log)</text>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << Tm << "\" x2=\"" << L << "\" y2=\"" << H - B
     << "\" stroke=\"black\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"" << H - 12
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">log10 " << study.x_label
     << "</text>\n";
  os << "<text x=\"16\" y=\"" << H / 2 << "\" transform=\"rotate(-90 16 " << H / 2
     << ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">log10 stat</text>\n";
  if (!xs.empty()) {
    double x0 = *std::min_element(xs.begin(), xs.end()), x1 = *std::max_element(xs.begin(), xs.end());
    double y0 = *std::min_element(lo.begin(), lo.end()), y1 = *std::max_element(hi.begin(), hi.end());
    if (x1 - x0 < 1e-9) { x0 -= 0.5; x1 += 0.5; }
    if (y1 - y0 < 1e-9) { y0 -= 0.5; y1 += 0.5; }
    auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
    auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - B - Tm); };
    for (int t = 0; t <= 4; ++t) {
      const double xv = x0 + (x1 - x0) * t / 4.0, yv = y0 + (y1 - y0) * t / 4.0;
      os << "<text x=\"" << fixed2(px(xv)) << "\" y=\"" << H - B + 16
         << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" << fixed2(xv)
         << "</text>\n";
      os << "<text x=\"" << L - 6 << "\" y=\"" << fixed2(py(yv) + 3)
         << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" << fixed2(yv)
         << "</text>\n";
    }
    os << "<polyline fill=\"none\" stroke=\"#1f5fa8\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < xs.size(); ++i) os << (i ? " " : "") << fixed2(px(xs[i])) << ',' << fixed2(py(ys[i]));
    os << "\"/>\n";
    for (std::size_t i = 0; i < xs.size(); ++i) {
      os << "<line x1=\"" << fixed2(px(xs[i])) << "\" y1=\"" << fixed2(py(lo[i])) << "\" x2=\""
         << fixed2(px(xs[i])) << "\" y2=\"" << fixed2(py(hi[i])) << "\" stroke=\"#1f5fa8\"/>\n";
      os << "<circle cx=\"" << fixed2(px(xs[i])) << "\" cy=\"" << fixed2(py(ys[i]))
         << "\" r=\"3\" fill=\"#1f5fa8\"/>\n";
    }
  }
  os << "</svg>\n";
  return os.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw Error(ErrorKind::IoError, "failed writing " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_json(const fs::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

void write_study(const ConvergenceStudy& study, const fs::path& dir, bool svg) {
  fs::create_directories(dir);
  write_json(dir / "study.json", study_to_json(study));
  write_text(dir / "study.csv", study_csv(study));
  if (svg) write_text(dir / "study.svg", study_svg(study));
}

std::string law_csv(const EmpiricalLaw& law, const std::string& config_hash) {
  std::ostringstream os;
  if (!config_hash.empty()) os << "# config_hash=" << config_hash << '\n';
  const TimeGrid& grid = law.grid();
  os << "atom,mode,weight";
  for (std::size_t j = 0; j < grid.nodes(); ++j) os << ',' << format_number(grid.time(j));
  os << '\n';
  for (std::size_t i = 0; i < law.size(); ++i) {
    const PathSample& a = law.atom(i);
    for (std::size_t k = 0; k < a.modes(); ++k) {
      os << i << ',' << k << ',' << format_number(law.weight(i));
      for (std::size_t j = 0; j < grid.nodes(); ++j) os << ',' << format_number(a(k, j));
      os << '\n';
    }
  }
  return os.str();
}

void write_law_csv(const EmpiricalLaw& law, const fs::path& path, const std::string& config_hash) {
  write_text(path, law_csv(law, config_hash));
}

namespace {

double parse_double(std::string_view s, const std::string& where) {
  double v = 0.0;
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
  if (s == "nan") return NAN;
  if (s == "inf") return INFINITY;
  if (s == "-inf") return -INFINITY;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw Error(ErrorKind::IoError, where + ": cannot parse '" + std::string(s) + "'");
  }
  return v;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

EmpiricalLaw parse_law_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<double> times;
  std::map<std::size_t, std::pair<double, std::map<std::size_t, std::vector<double>>>> atoms;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto cells = split_commas(line);
    const std::string where = "law csv line " + std::to_string(lineno);
    if (times.empty()) {
      if (cells.size() < 4 || cells[0] != "atom" || cells[1] != "mode" || cells[2] != "weight") {
        throw Error(ErrorKind::IoError, where + ": expected header atom,mode,weight,<times>");
      }
      for (std::size_t c = 3; c < cells.size(); ++c) times.push_back(parse_double(cells[c], where));
      continue;
    }
    if (cells.size() != times.size() + 3) throw Error(ErrorKind::IoError, where + ": wrong column count");
    const auto atom = static_cast<std::size_t>(parse_double(cells[0], where));
    const auto mode = static_cast<std::size_t>(parse_double(cells[1], where));
    auto& entry = atoms[atom];
    entry.first = parse_double(cells[2], where);
    auto& vals = entry.second[mode];
    for (std::size_t c = 3; c < cells.size(); ++c) vals.push_back(parse_double(cells[c], where));
  }
  if (times.size() < 2 || atoms.empty()) throw Error(ErrorKind::IoError, "law csv has no data");
  const TimeGrid grid(times.back(), times.size() - 1);
  std::vector<PathSample> paths;
  std::vector<double> weights;
  const std::size_t K = atoms.begin()->second.second.size();
  for (auto& [idx, entry] : atoms) {
    if (entry.second.size() != K) throw Error(ErrorKind::IoError, "law csv atoms differ in mode count");
    std::vector<double> data(K * grid.nodes());
    for (auto& [k, vals] : entry.second) {
      if (k >= K) throw Error(ErrorKind::IoError, "law csv mode index out of range");
      for (std::size_t j = 0; j < vals.size(); ++j) data[j * K + k] = vals[j];
    }
    paths.emplace_back(grid, K, std::move(data));
    weights.push_back(entry.first);
  }
  double total = 0.0;
  for (double w : weights) total += w;
  // Decimal round trip of 1/n weights can leave the total a few ulps off.
  for (double& w : weights) w /= total;
  bool uniform = true;
  for (double w : weights) uniform = uniform && std::abs(w - weights.front()) <= 1e-15;
  if (uniform) return EmpiricalLaw(std::move(paths));
  return EmpiricalLaw(std::move(paths), std::move(weights));
}

EmpiricalLaw read_law_csv(const fs::path& path) { return parse_law_csv(read_text(path)); }

void write_metalaw(const MetaLaw& meta, const fs::path& dir, const std::string& stem,
                   const std::string& config_hash) {
  fs::create_directories(dir);
  Json j;
  j["config_hash"] = config_hash;
  Json atoms = Json::array();
  for (std::size_t i = 0; i < meta.size(); ++i) {
    const std::string file = stem + "_" + std::to_string(i) + ".csv";
    write_law_csv(*meta.atoms()[i], dir / file, config_hash);
    atoms.push_back(Json{{"file", file}, {"weight", meta.weights()[i]}});
  }
  j["atoms"] = atoms;
  write_json(dir / (stem + ".json"), j);
}

MetaLaw read_metalaw(const fs::path& manifest) {
  Json j;
  try {
    j = Json::parse(read_text(manifest));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::IoError, manifest.string() + ": " + e.what());
  }
  std::vector<LawPtr> atoms;
  std::vector<double> weights;
  for (const auto& a : j.at("atoms")) {
    atoms.push_back(std::make_shared<const EmpiricalLaw>(
        read_law_csv(manifest.parent_path() / a.at("file").get<std::string>())));
    weights.push_back(a.at("weight").get<double>());
  }
  return MetaLaw(std::move(atoms), std::move(weights));
}

}  // namespace mflab
