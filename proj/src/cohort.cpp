#include "pivotal/cohort.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include "pivotal/error.hpp"
#include "text_util.hpp"

namespace pivotal {

std::string_view to_string(Group group) noexcept {
  switch (group) {
    case Group::AD: return "AD";
    case Group::CN: return "CN";
    case Group::MCI: return "MCI";
  }
  return "?";
}

std::optional<Group> parse_group(std::string_view token) noexcept {
  if (token == "AD") return Group::AD;
  if (token == "CN") return Group::CN;
  if (token == "MCI") return Group::MCI;
  return std::nullopt;
}

std::size_t CohortDataset::group_size(Group g) const noexcept {
  const auto it = group_sizes.find(g);
  return it == group_sizes.end() ? 0 : it->second;
}

std::vector<std::size_t> CohortDataset::patients_in(Group g) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < patients.size(); ++i) {
    if (patients[i].group == g) out.push_back(i);
  }
  return out;
}

namespace {

std::string at_line(std::size_t line) { return "line " + std::to_string(line) + ": "; }

VolumeRecord parse_row(std::string_view row, std::size_t line) {
  const auto fields = detail::split(row, ',');
  if (fields.size() != 5) {
    fail(ErrorCode::Parse, at_line(line) + "expected 5 columns, found " + std::to_string(fields.size()));
  }
  VolumeRecord rec;
  rec.patient_id = std::string(fields[0]);
  if (rec.patient_id.empty()) fail(ErrorCode::Parse, at_line(line) + "empty patient_id");

  const auto group = parse_group(fields[1]);
  if (!group) fail(ErrorCode::Parse, at_line(line) + "unknown group '" + std::string(fields[1]) + "'");
  rec.group = *group;

  if (fields[2] == "T0") {
    rec.timepoint = Timepoint::T0;
  } else if (fields[2] == "T1") {
    rec.timepoint = Timepoint::T1;
  } else {
    fail(ErrorCode::Parse, at_line(line) + "unknown timepoint '" + std::string(fields[2]) + "'");
  }

  rec.region = std::string(fields[3]);
  if (rec.region.empty()) fail(ErrorCode::Parse, at_line(line) + "empty region");

  if (!fields[4].empty()) {
    const auto value = detail::parse_double(fields[4]);
    if (!value) {
      fail(ErrorCode::Parse, at_line(line) + "unparsable volume '" + std::string(fields[4]) + "'");
    }
    rec.volume = *value;
  }
  return rec;
}

}  // namespace

CohortDataset assemble_dataset(const std::vector<VolumeRecord>& records) {
  std::set<std::string> region_names;
  std::map<std::string, Group> patient_groups;
  std::set<std::tuple<std::string, Timepoint, std::string>> seen;
  std::map<std::string, std::pair<bool, bool>> timepoints_seen;

  for (const auto& rec : records) {
    region_names.insert(rec.region);
    const auto [it, inserted] = patient_groups.emplace(rec.patient_id, rec.group);
    if (!inserted && it->second != rec.group) {
      fail(ErrorCode::Parse, "patient '" + rec.patient_id + "' appears with more than one group");
    }
    if (!seen.emplace(rec.patient_id, rec.timepoint, rec.region).second) {
      fail(ErrorCode::DuplicateRecord,
           "duplicate record for patient '" + rec.patient_id + "', timepoint " +
               (rec.timepoint == Timepoint::T0 ? "T0" : "T1") + ", region '" + rec.region + "'");
    }
    auto& tp = timepoints_seen[rec.patient_id];
    (rec.timepoint == Timepoint::T0 ? tp.first : tp.second) = true;
  }
  for (const auto& [id, tp] : timepoints_seen) {
    if (!tp.first || !tp.second) {
      fail(ErrorCode::IncompletePatient,
           "patient '" + id + "' has no " + (tp.first ? "T1" : "T0") + " measurements");
    }
  }

  CohortDataset ds;
  ds.regions.assign(region_names.begin(), region_names.end());
  std::map<std::string, std::size_t> region_index;
  for (std::size_t i = 0; i < ds.regions.size(); ++i) region_index[ds.regions[i]] = i;

  std::map<std::string, std::size_t> patient_index;
  for (const auto& [id, group] : patient_groups) {
    patient_index[id] = ds.patients.size();
    Patient p;
    p.id = id;
    p.group = group;
    p.t0.assign(ds.regions.size(), std::nullopt);
    p.t1.assign(ds.regions.size(), std::nullopt);
    ds.patients.push_back(std::move(p));
    ++ds.group_sizes[group];
  }

  for (const auto& rec : records) {
    auto& p = ds.patients[patient_index[rec.patient_id]];
    auto& slot = rec.timepoint == Timepoint::T0 ? p.t0 : p.t1;
    slot[region_index[rec.region]] = rec.volume;
  }
  return ds;
}

CohortDataset parse_volume_table(std::istream& in) {
  std::string row;
  std::size_t line = 0;
  bool header_seen = false;
  std::vector<VolumeRecord> records;
  while (std::getline(in, row)) {
    ++line;
    if (!row.empty() && row.back() == '\r') row.pop_back();
    if (!header_seen) {
      // Tolerate a UTF-8 byte order mark.
      std::string_view head(row);
      if (head.starts_with("\xEF\xBB\xBF")) head.remove_prefix(3);
      if (head != kVolumeTableHeader) {
        fail(ErrorCode::Parse, at_line(line) + "expected header '" + std::string(kVolumeTableHeader) + "'");
      }
      header_seen = true;
      continue;
    }
    if (row.empty()) continue;
    records.push_back(parse_row(row, line));
  }
  if (!header_seen) fail(ErrorCode::Parse, "line 1: missing header row");
  return assemble_dataset(records);
}

CohortDataset parse_volume_table(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_volume_table(in);
}

CohortDataset load_volume_table(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open '" + path + "'");
  return parse_volume_table(in);
}

std::string write_volume_table(const CohortDataset& dataset) {
  std::string out(kVolumeTableHeader);
  out += '\n';
  for (const auto& p : dataset.patients) {
    for (const auto tp : {Timepoint::T0, Timepoint::T1}) {
      const auto& volumes = tp == Timepoint::T0 ? p.t0 : p.t1;
      for (std::size_t r = 0; r < dataset.regions.size(); ++r) {
        out += p.id;
        out += ',';
        out += to_string(p.group);
        out += tp == Timepoint::T0 ? ",T0," : ",T1,";
        out += dataset.regions[r];
        out += ',';
        if (volumes[r]) out += detail::format_double(*volumes[r]);
        out += '\n';
      }
    }
  }
  return out;
}

ValidNodeSet compute_valid_nodes(const CohortDataset& dataset) {
  if (dataset.patients.empty()) fail(ErrorCode::EmptyGroup, "dataset has no patients");
  const std::size_t d = dataset.region_count();

  ValidNodeSet out;
  std::vector<std::size_t> all(d);
  for (std::size_t r = 0; r < d; ++r) all[r] = r;

  for (const Group g : kGroups) {
    const auto members = dataset.patients_in(g);
    if (members.empty()) continue;
    std::vector<std::size_t> valid;
    for (std::size_t r = 0; r < d; ++r) {
      const bool ok = std::all_of(members.begin(), members.end(),
                                  [&](std::size_t i) { return dataset.patients[i].usable(r); });
      if (ok) valid.push_back(r);
    }
    out.per_group_valid.emplace(g, std::move(valid));
  }

  out.indices = all;
  for (const auto& [g, valid] : out.per_group_valid) {
    std::vector<std::size_t> next;
    std::set_intersection(out.indices.begin(), out.indices.end(), valid.begin(), valid.end(),
                          std::back_inserter(next));
    out.indices = std::move(next);
  }
  return out;
}

CohortSummary summarize_cohort(const CohortDataset& dataset) {
  CohortSummary s;
  s.patients = dataset.patient_count();
  s.regions = dataset.region_count();
  for (const Group g : kGroups) s.group_counts[g] = dataset.group_size(g);
  if (!dataset.patients.empty()) s.valid_nodes = compute_valid_nodes(dataset).indices.size();
  return s;
}

std::string CohortSummary::to_text() const {
  std::ostringstream os;
  os << "patients: " << patients << '\n';
  for (const auto& [g, n] : group_counts) os << "  " << to_string(g) << ": " << n << '\n';
  os << "regions: " << regions << '\n';
  os << "valid nodes: " << valid_nodes << '\n';
  return os.str();
}

}  // namespace pivotal
