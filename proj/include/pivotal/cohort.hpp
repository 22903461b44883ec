#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pivotal {

// Diagnostic groups. The enumerator order is the classifier's class order.
enum class Group : std::uint8_t { AD = 0, CN = 1, MCI = 2 };

inline constexpr std::array<Group, 3> kGroups{Group::AD, Group::CN, Group::MCI};
inline constexpr std::size_t kGroupCount = kGroups.size();

std::string_view to_string(Group group) noexcept;
std::optional<Group> parse_group(std::string_view token) noexcept;
inline std::size_t group_index(Group group) noexcept { return static_cast<std::size_t>(group); }

enum class Timepoint { T0, T1 };

// One row of the long-format volume table. A missing volume is an empty field.
struct VolumeRecord {
  std::string patient_id;
  Group group = Group::AD;
  Timepoint timepoint = Timepoint::T0;
  std::string region;
  std::optional<double> volume;
};

// A volume is usable when it is present, finite and strictly positive.
inline bool usable_volume(const std::optional<double>& v) noexcept {
  return v.has_value() && *v > 0.0 && *v < std::numeric_limits<double>::infinity();
}

struct Patient {
  std::string id;
  Group group = Group::AD;
  // Indexed by region; nullopt marks an absent measurement.
  std::vector<std::optional<double>> t0;
  std::vector<std::optional<double>> t1;

  bool usable(std::size_t region) const noexcept {
    return usable_volume(t0[region]) && usable_volume(t1[region]);
  }

  bool operator==(const Patient&) const = default;
};

// Immutable after construction. Regions are sorted by name and patients by id,
// so every downstream matrix shares one index space.
struct CohortDataset {
  std::vector<std::string> regions;
  std::vector<Patient> patients;
  std::map<Group, std::size_t> group_sizes;

  std::size_t region_count() const noexcept { return regions.size(); }
  std::size_t patient_count() const noexcept { return patients.size(); }
  std::size_t group_size(Group g) const noexcept;
  std::vector<std::size_t> patients_in(Group g) const;

  bool operator==(const CohortDataset&) const = default;
};

struct ValidNodeSet {
  std::vector<std::size_t> indices;
  std::map<Group, std::vector<std::size_t>> per_group_valid;
};

struct CohortSummary {
  std::size_t patients = 0;
  std::map<Group, std::size_t> group_counts;
  std::size_t regions = 0;
  std::size_t valid_nodes = 0;

  std::string to_text() const;
};

inline constexpr std::string_view kVolumeTableHeader = "patient_id,group,timepoint,region,volume_mm3";

CohortDataset parse_volume_table(std::istream& in);
CohortDataset parse_volume_table(std::string_view text);
CohortDataset load_volume_table(const std::string& path);

// Builds a dataset from records; the parser funnels through here.
CohortDataset assemble_dataset(const std::vector<VolumeRecord>& records);

// Writes the dataset back in the long CSV format with shortest round-trip
// decimals. Absent measurements are written as empty volume fields.
std::string write_volume_table(const CohortDataset& dataset);

// A region is valid for a group iff every patient of that group has usable
// volumes for it at both timepoints. The global set intersects the groups
// present in the dataset.
ValidNodeSet compute_valid_nodes(const CohortDataset& dataset);

CohortSummary summarize_cohort(const CohortDataset& dataset);

}  // namespace pivotal
