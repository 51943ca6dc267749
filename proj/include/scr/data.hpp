#pragma once

// Observed-data records, dummy covariate encoding, dataset validation and
// CSV ingestion. A Dataset is immutable once built and safe to share across
// threads.

#include <Eigen/Dense>
#include <array>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "scr/common.hpp"
#include "scr/csv.hpp"

namespace scr {

enum class Event : int { Censored = 0, Mode1 = 1, Mode2 = 2 };

inline constexpr int kNumRows = 8;
inline constexpr int kNumCols = 25;

// Grid cell of a cabinet: row 0-7, connectivity-labeled column 0-24.
struct GridPoint {
  int row = 0;
  int col = 0;
  friend bool operator==(const GridPoint&, const GridPoint&) = default;
  friend auto operator<=>(const GridPoint&, const GridPoint&) = default;
};

struct FailureRecord {
  std::string unit_id;
  int row = 0;    // r_i, 0..7
  int col = 0;    // c_i, connectivity label, 0..24
  int cage = 2;   // 0..2, baseline 2
  int slot = 7;   // 0..7, baseline 7
  int node = 3;   // 0..3, baseline 3
  double time = 0.0;  // years, > 0
  Event event = Event::Censored;
};

inline void validate_record(const FailureRecord& r, std::size_t lineno = 0) {
  auto fail = [&](const std::string& msg) {
    if (lineno) throw CsvParseError(msg, lineno);
    throw ValidationError(msg + " (unit " + r.unit_id + ")");
  };
  if (r.row < 0 || r.row >= kNumRows) fail("row out of range [0,7]");
  if (r.col < 0 || r.col >= kNumCols) fail("col out of range [0,24]");
  if (r.cage < 0 || r.cage > 2) fail("cage out of range [0,2]");
  if (r.slot < 0 || r.slot > 7) fail("slot out of range [0,7]");
  if (r.node < 0 || r.node > 3) fail("node out of range [0,3]");
  if (!(r.time > 0.0)) fail("nonpositive time");
}

// Optional permutation mapping physical column labels to connectivity labels.
struct ColumnRelabelMap {
  std::array<int, kNumCols> physical_to_connectivity{};

  static ColumnRelabelMap identity() {
    ColumnRelabelMap m;
    for (int i = 0; i < kNumCols; ++i) m.physical_to_connectivity[i] = i;
    return m;
  }

  void validate() const {
    std::array<bool, kNumCols> seen{};
    for (int v : physical_to_connectivity) {
      if (v < 0 || v >= kNumCols) throw ValidationError("relabel map value out of range");
      if (seen[v]) throw ValidationError("relabel map is not a bijection on {0..24}");
      seen[v] = true;
    }
  }
};

// Full dummy coding on the 3x8x4 cage/slot/node grid: 12 indicator columns
// (cage 0,1; slot 0..6; node 0,1,2), baselines cage 2 / slot 7 / node 3
// encode to all zeros.
inline constexpr int kFullCovariateDim = 12;

inline Eigen::VectorXd encode_covariates(const FailureRecord& r) {
  validate_record(r);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(kFullCovariateDim);
  if (r.cage < 2) x[r.cage] = 1.0;
  if (r.slot < 7) x[2 + r.slot] = 1.0;
  if (r.node < 3) x[9 + r.node] = 1.0;
  return x;
}

inline const std::array<std::string, kFullCovariateDim>& full_covariate_names() {
  static const std::array<std::string, kFullCovariateDim> names = {
      "cage0", "cage1", "slot0", "slot1", "slot2", "slot3",
      "slot4", "slot5", "slot6", "node0", "node1", "node2"};
  return names;
}

class Dataset {
 public:
  Dataset() = default;

  // Builds location index, then the design matrix keeping only indicator
  // columns for levels that actually occur (p = 12 when all levels present).
  explicit Dataset(std::vector<FailureRecord> records) : records_(std::move(records)) {
    for (const auto& r : records_) validate_record(r);

    std::map<GridPoint, int> loc_ids;
    for (const auto& r : records_) loc_ids.emplace(GridPoint{r.row, r.col}, 0);
    if (loc_ids.size() > 200)
      throw ValidationError("dataset has " + std::to_string(loc_ids.size()) +
                            " locations; at most 200 supported");
    locations_.reserve(loc_ids.size());
    for (auto& [pt, id] : loc_ids) {
      id = static_cast<int>(locations_.size());
      locations_.push_back(pt);
    }
    loc_index_.reserve(records_.size());
    for (const auto& r : records_)
      loc_index_.push_back(loc_ids.at(GridPoint{r.row, r.col}));

    std::array<bool, kFullCovariateDim> used{};
    for (const auto& r : records_) {
      if (r.cage < 2) used[static_cast<std::size_t>(r.cage)] = true;
      if (r.slot < 7) used[static_cast<std::size_t>(2 + r.slot)] = true;
      if (r.node < 3) used[static_cast<std::size_t>(9 + r.node)] = true;
    }
    for (int j = 0; j < kFullCovariateDim; ++j)
      if (used[static_cast<std::size_t>(j)]) {
        design_columns_.push_back(j);
        covariate_names_.push_back(full_covariate_names()[static_cast<std::size_t>(j)]);
      }

    design_.resize(static_cast<Eigen::Index>(records_.size()),
                   static_cast<Eigen::Index>(design_columns_.size()));
    for (std::size_t i = 0; i < records_.size(); ++i) {
      Eigen::VectorXd full = encode_covariates(records_[i]);
      for (std::size_t j = 0; j < design_columns_.size(); ++j)
        design_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            full[design_columns_[j]];
    }
  }

  const std::vector<FailureRecord>& records() const { return records_; }
  const std::vector<GridPoint>& locations() const { return locations_; }
  const std::vector<int>& location_index() const { return loc_index_; }
  const Eigen::MatrixXd& design() const { return design_; }
  const std::vector<std::string>& covariate_names() const { return covariate_names_; }

  std::size_t size() const { return records_.size(); }
  int n_locations() const { return static_cast<int>(locations_.size()); }
  int p() const { return static_cast<int>(design_.cols()); }

  int count(Event e) const {
    int c = 0;
    for (const auto& r : records_) c += (r.event == e);
    return c;
  }

 private:
  std::vector<FailureRecord> records_;
  std::vector<GridPoint> locations_;   // sorted by (row, col), index i
  std::vector<int> loc_index_;         // per record -> location index
  std::vector<int> design_columns_;    // indices into the full 12-column coding
  std::vector<std::string> covariate_names_;
  Eigen::MatrixXd design_;
};

// CSV schema: unit_id,row,col,cage,slot,node,time,event  (time in years,
// event 0=censored 1=mode1 2=mode2; header mandatory).
inline Dataset ingest_csv(const std::string& path,
                          std::optional<ColumnRelabelMap> relabel = std::nullopt) {
  static const std::vector<std::string> expected = {
      "unit_id", "row", "col", "cage", "slot", "node", "time", "event"};
  if (relabel) relabel->validate();

  csv::Table t = csv::read_file(path);
  if (t.header != expected) {
    std::string got;
    for (std::size_t i = 0; i < t.header.size(); ++i)
      got += (i ? "," : "") + t.header[i];
    throw ValidationError("unexpected csv header '" + got +
                          "'; expected 'unit_id,row,col,cage,slot,node,time,event'");
  }

  std::vector<FailureRecord> records;
  records.reserve(t.rows.size());
  std::size_t lineno = 1;
  for (const auto& row : t.rows) {
    ++lineno;
    FailureRecord r;
    r.unit_id = row[0];
    r.row = static_cast<int>(csv::parse_int(row[1], lineno));
    r.col = static_cast<int>(csv::parse_int(row[2], lineno));
    r.cage = static_cast<int>(csv::parse_int(row[3], lineno));
    r.slot = static_cast<int>(csv::parse_int(row[4], lineno));
    r.node = static_cast<int>(csv::parse_int(row[5], lineno));
    r.time = csv::parse_double(row[6], lineno);
    long ev = csv::parse_int(row[7], lineno);
    if (ev < 0 || ev > 2) throw CsvParseError("event must be 0, 1 or 2", lineno);
    r.event = static_cast<Event>(ev);
    if (relabel) {
      if (r.col < 0 || r.col >= kNumCols) throw CsvParseError("col out of range [0,24]", lineno);
      r.col = relabel->physical_to_connectivity[static_cast<std::size_t>(r.col)];
    }
    validate_record(r, lineno);
    records.push_back(std::move(r));
  }
  return Dataset(std::move(records));
}

inline void emit_csv(const Dataset& data, const std::string& path) {
  csv::Writer w(path);
  w.row({"unit_id", "row", "col", "cage", "slot", "node", "time", "event"});
  for (const auto& r : data.records()) {
    w.row({r.unit_id, std::to_string(r.row), std::to_string(r.col),
           std::to_string(r.cage), std::to_string(r.slot), std::to_string(r.node),
           csv::format_double(r.time), std::to_string(static_cast<int>(r.event))});
  }
}

// ---------------------------------------------------------------------------
// Posterior-propriety precondition: with flat priors the Weibull posterior
// needs m > p+1 failures per mode, the lognormal m > (p+3)/2. Advisory only.

enum class Family { Weibull, Lognormal };

inline std::string family_name(Family f) {
  return f == Family::Weibull ? "weibull" : "lognormal";
}

struct ProprietyReport {
  struct ModeCheck {
    int mode = 0;
    int failures = 0;
    double threshold = 0.0;  // requires failures > threshold
    bool ok = false;
  };
  std::vector<ModeCheck> checks;
  int p = 0;

  bool all_ok() const {
    for (const auto& c : checks)
      if (!c.ok) return false;
    return true;
  }
};

inline ProprietyReport check_propriety(const Dataset& data, Family family) {
  ProprietyReport rep;
  rep.p = data.p();
  double threshold = family == Family::Weibull ? static_cast<double>(rep.p + 1)
                                               : (static_cast<double>(rep.p) + 3.0) / 2.0;
  for (int mode = 1; mode <= 2; ++mode) {
    ProprietyReport::ModeCheck c;
    c.mode = mode;
    c.failures = data.count(static_cast<Event>(mode));
    c.threshold = threshold;
    c.ok = static_cast<double>(c.failures) > threshold;
    rep.checks.push_back(c);
  }
  return rep;
}

}  // namespace scr
