#include "pivotal/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "pivotal/error.hpp"
#include "pivotal/random.hpp"

namespace pivotal {

std::vector<std::size_t> SynthConfig::default_planted_nodes(std::size_t d) {
  const std::size_t count = std::min<std::size_t>(12, d);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(i * d / count + d / (2 * count));
  return out;
}

void SynthConfig::validate() const {
  if (d == 0) fail(ErrorCode::InvalidArgument, "synth: d must be positive");
  if (planted_nodes.size() > d) fail(ErrorCode::InvalidArgument, "synth: more planted nodes than regions");
  std::set<std::size_t> unique(planted_nodes.begin(), planted_nodes.end());
  if (unique.size() != planted_nodes.size()) fail(ErrorCode::InvalidArgument, "synth: duplicate planted node");
  for (const auto n : planted_nodes) {
    if (n >= d) fail(ErrorCode::InvalidArgument, "synth: planted node " + std::to_string(n) + " out of range");
  }
  for (const auto& [g, e] : effect_sizes) {
    if (!std::isfinite(e)) fail(ErrorCode::InvalidArgument, "synth: effect sizes must be finite");
  }
  if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd)) fail(ErrorCode::InvalidArgument, "synth: noise_sd must be >= 0");
  if (!(volume_min > 0.0) || !(volume_max >= volume_min)) {
    fail(ErrorCode::InvalidArgument, "synth: baseline volume range must be positive and ordered");
  }
  if (invalid_node_count > d - planted_nodes.size()) {
    fail(ErrorCode::InvalidArgument, "synth: not enough non-planted regions to corrupt");
  }
  std::size_t patients = 0;
  for (const auto& [g, n] : group_sizes) patients += n;
  if (invalid_node_count > 0 && patients == 0) {
    fail(ErrorCode::InvalidArgument, "synth: cannot corrupt regions of an empty cohort");
  }
}

std::vector<std::string> synth_region_names(std::size_t d) {
  std::vector<std::string> names;
  names.reserve(d);
  const int width = std::max(3, static_cast<int>(std::to_string(d > 0 ? d - 1 : 0).size()));
  for (std::size_t i = 0; i < d; ++i) {
    std::string digits = std::to_string(i);
    names.push_back("region_" + std::string(static_cast<std::size_t>(width) - digits.size(), '0') + digits);
  }
  return names;
}

namespace {

struct Corruption {
  std::size_t region;
  std::size_t patient;
};

std::string patient_name(Group g, std::size_t i) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%s_%04zu", std::string(to_string(g)).c_str(), i);
  return buf;
}

}  // namespace

CohortDataset generate_cohort(const SynthConfig& config) {
  config.validate();
  Rng rng(config.seed);
  const std::size_t d = config.d;
  const std::set<std::size_t> planted(config.planted_nodes.begin(), config.planted_nodes.end());

  std::vector<Patient> patients;
  for (const Group g : kGroups) {
    const auto size_it = config.group_sizes.find(g);
    const std::size_t n = size_it == config.group_sizes.end() ? 0 : size_it->second;
    const auto effect_it = config.effect_sizes.find(g);
    const double effect = effect_it == config.effect_sizes.end() ? 0.0 : effect_it->second;
    for (std::size_t i = 0; i < n; ++i) {
      Patient p;
      p.id = patient_name(g, i);
      p.group = g;
      p.t0.resize(d);
      p.t1.resize(d);
      for (std::size_t r = 0; r < d; ++r) {
        const double base = rng.uniform(config.volume_min, config.volume_max);
        const double mean = planted.contains(r) ? effect : 0.0;
        const double ratio = config.noise_sd > 0.0 ? rng.normal(mean, config.noise_sd) : mean;
        p.t0[r] = base;
        p.t1[r] = base * (1.0 + ratio);
      }
      patients.push_back(std::move(p));
    }
  }

  std::vector<std::size_t> candidates;
  for (std::size_t r = 0; r < d; ++r) {
    if (!planted.contains(r)) candidates.push_back(r);
  }
  rng.shuffle(std::span<std::size_t>(candidates));
  std::vector<Group> present;
  for (const Group g : kGroups) {
    const auto it = config.group_sizes.find(g);
    if (it != config.group_sizes.end() && it->second > 0) present.push_back(g);
  }
  for (std::size_t c = 0; c < config.invalid_node_count; ++c) {
    const std::size_t region = candidates[c];
    const Group g = present[rng.below(present.size())];
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < patients.size(); ++i) {
      if (patients[i].group == g) members.push_back(i);
    }
    patients[members[rng.below(members.size())]].t1[region].reset();
  }

  CohortDataset ds;
  ds.regions = synth_region_names(d);
  std::sort(patients.begin(), patients.end(), [](const Patient& a, const Patient& b) { return a.id < b.id; });
  ds.patients = std::move(patients);
  for (const auto& p : ds.patients) ++ds.group_sizes[p.group];
  return ds;
}

std::vector<std::size_t> corrupted_regions(const SynthConfig& config) {
  const auto ds = generate_cohort(config);
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < ds.region_count(); ++r) {
    for (const auto& p : ds.patients) {
      if (!p.t1[r]) {
        out.push_back(r);
        break;
      }
    }
  }
  return out;
}

}  // namespace pivotal
