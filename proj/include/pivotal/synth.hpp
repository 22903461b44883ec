#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pivotal/cohort.hpp"

namespace pivotal {

struct SynthConfig {
  std::uint64_t seed = 0;
  std::size_t d = 110;
  std::map<Group, std::size_t> group_sizes{{Group::AD, 213}, {Group::MCI, 322}, {Group::CN, 322}};
  std::vector<std::size_t> planted_nodes = default_planted_nodes(110);
  std::map<Group, double> effect_sizes{{Group::AD, -0.08}, {Group::MCI, -0.04}, {Group::CN, 0.0}};
  double noise_sd = 0.02;
  double volume_min = 500.0;
  double volume_max = 20000.0;
  std::size_t invalid_node_count = 9;

  // 12 evenly spaced indices (fewer when d < 12).
  static std::vector<std::size_t> default_planted_nodes(std::size_t d);

  void validate() const;
};

// "region_000", "region_001", ... zero-padded so name order equals index order.
std::vector<std::string> synth_region_names(std::size_t d);

// Seeded cohort with planted group effects. Regions chosen for corruption are
// drawn from the non-planted regions; each gets one missing T1 measurement.
CohortDataset generate_cohort(const SynthConfig& config);

// Region indices corrupted by generate_cohort for this config.
std::vector<std::size_t> corrupted_regions(const SynthConfig& config);

}  // namespace pivotal
