#pragma once

// Experiment configuration: sectioned key/value text, schema-validated
// before any computation, with a canonical hash embedded in every output.

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mflab/control.hpp"
#include "mflab/models.hpp"
#include "mflab/sim.hpp"
#include "mflab/spectral.hpp"

namespace mflab {

inline constexpr int kSchemaVersion = 1;

using ConfigSections = std::map<std::string, std::map<std::string, std::string>>;

struct StudySettings {
  std::vector<std::size_t> ns{16, 32, 64, 128, 256};
  double q = 2.0;
  std::vector<double> x0_list;  // gbm demo; defaults to {x0}
  std::vector<std::size_t> steps{4, 8, 16, 32, 64};  // refinement grids
  std::size_t check_samples = 500;
  bool shared_draw = false;
  bool identical_sets = false;
  std::size_t control = 0;  // family index used by single-control studies
  std::optional<double> eps;
  bool closed_form = false;
};

struct ExperimentConfig {
  ConfigSections sections;  // as parsed (after the seed override)
  std::string hash;

  FrameworkConstants constants{};
  std::vector<double> lambdas;
  std::vector<double> c_bounds;
  double riesz_low = 1.0;
  double riesz_high = 1.0;

  ModelPtr model;
  std::vector<FeedbackControl> controls;  // shared family members, in index order
  std::optional<Psi> psi;
  SimConfig sim;
  std::vector<double> x0;
  std::size_t n = 32;
  StudySettings study;

  SpectralSpace space() const;
  ControlFamily family() const;
  ControlTuple control() const;  // the member selected by study.control
  Dynamics dynamics() const { return Dynamics{*model, lambdas}; }
};

/// Canonical text: one "section.key=value" line per entry, sorted; the hash
/// is 64-bit FNV-1a of that text, as 16 hex digits.
std::string canonical_text(const ConfigSections& sections);
std::string config_hash(const ConfigSections& sections);

/// Throws Error(ConfigError) naming section.key on any schema violation.
ExperimentConfig parse_config(std::istream& in, std::optional<std::uint64_t> seed_override = {});
ExperimentConfig parse_config_text(const std::string& text,
                                   std::optional<std::uint64_t> seed_override = {});
ExperimentConfig load_config(const std::filesystem::path& path,
                             std::optional<std::uint64_t> seed_override = {});

}  // namespace mflab
