// Product splitting of a based loop space: the range of contributing
// weight classes, per-class sphere heights, and group annotations.
#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "basis.hpp"
#include "order.hpp"
#include "wterm.hpp"

namespace hiltonkit {

// Largest weight whose classes can still carry a nonzero factor in ambient
// dimension m: floor(m / (min codim - 1)), at least 1.
inline int splitting_weight_bound(const Signature& sig) {
  sig.validate();
  if (!sig.m) throw ConfigError("splitting range needs the ambient dimension m");
  int mink = *std::min_element(sig.k.begin(), sig.k.end());
  return std::max(1, *sig.m / (mink - 1));
}

// Known homotopy groups of spheres, keyed by stem s = m - h and height h.
// Loaded from a data file so the tool degrades to "unknown" rather than
// inventing answers.
struct GroupTable {
  struct Row {
    int stem = 0;
    int min_h = 1;
    std::optional<int> max_h;
    std::string group;
  };
  std::vector<Row> rows;

  // Group of maps from S^m into S^h. Heights above m force the zero group;
  // anything the table does not cover is reported as "unknown".
  std::string lookup(int m, int h) const {
    if (h > m) return "0";
    int stem = m - h;
    for (const auto& row : rows) {
      if (row.stem != stem) continue;
      if (h < row.min_h) continue;
      if (row.max_h && h > *row.max_h) continue;
      return row.group;
    }
    return "unknown";
  }

  // Returns the table plus a warning string (empty on success). A missing or
  // malformed file yields an empty table, never an exception.
  static std::pair<GroupTable, std::string> load_file(const std::string& path) {
    GroupTable t;
    std::ifstream in(path);
    if (!in) return {t, "group data not found at " + path + "; annotations degrade to 'unknown'"};
    nlohmann::json doc;
    try {
      in >> doc;
      for (const auto& e : doc.at("groups")) {
        Row row;
        row.stem = e.at("stem").get<int>();
        row.min_h = e.at("min_h").get<int>();
        if (e.contains("max_h")) row.max_h = e.at("max_h").get<int>();
        row.group = e.at("group").get<std::string>();
        t.rows.push_back(row);
      }
    } catch (const std::exception& ex) {
      return {GroupTable{}, "group data at " + path + " is malformed (" + ex.what() +
                                "); annotations degrade to 'unknown'"};
    }
    return {t, ""};
  }
};

// Resolves the data directory: explicit flag, then HILTONKIT_DATA, then
// ../share/hiltonkit next to the executable, then ./share/hiltonkit.
inline std::string locate_data_dir(const std::string& flag_value, const char* argv0) {
  namespace fs = std::filesystem;
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("HILTONKIT_DATA"); env && *env) return env;
  if (argv0 && *argv0) {
    std::error_code ec;
    fs::path exe = fs::weakly_canonical(fs::path(argv0), ec);
    if (!ec && exe.has_parent_path()) {
      fs::path cand = exe.parent_path().parent_path() / "share" / "hiltonkit";
      if (fs::exists(cand, ec)) return cand.string();
    }
  }
  return "share/hiltonkit";
}

inline std::pair<GroupTable, std::string> load_group_table(const std::string& data_dir) {
  return GroupTable::load_file(data_dir + "/homotopy_groups.json");
}

// One factor of the splitting: a basic product, the sphere height it maps
// through, whether dimension alone kills it, and the annotated group.
struct SplitRow {
  Term term;
  int h = 0;
  bool trivial = false;  // height exceeds m + 1
  std::string group;
  std::string status() const { return trivial ? "trivial" : "candidate"; }
};

struct SplittingTable {
  Signature sig;
  int w0 = 0;
  std::vector<SplitRow> rows;

  // Tally of distinct nonzero groups in first-appearance order, e.g.
  // "Z2^3 + Z^2"; "0" when everything vanishes or nothing is known.
  std::string summary() const {
    std::vector<std::pair<std::string, int>> tally;
    for (const auto& row : rows) {
      if (row.group == "0" || row.group == "unknown") continue;
      bool found = false;
      for (auto& [g, n] : tally)
        if (g == row.group) {
          ++n;
          found = true;
        }
      if (!found) tally.emplace_back(row.group, 1);
    }
    if (tally.empty()) return "0";
    std::string out;
    for (size_t i = 0; i < tally.size(); ++i) {
      if (i) out += " + ";
      out += tally[i].first;
      if (tally[i].second > 1) out += "^" + std::to_string(tally[i].second);
    }
    return out;
  }
};

inline SplittingTable splitting_table(const Signature& sig, const BasisOrder& ord,
                                      const GroupTable& groups,
                                      std::optional<int> wmax_override = {}) {
  sig.validate();
  if (!sig.m) throw ConfigError("splitting table needs the ambient dimension m");
  SplittingTable table;
  table.sig = sig;
  table.w0 = splitting_weight_bound(sig);
  int wmax = wmax_override.value_or(table.w0);
  ExtendedSignature ext = ExtendedSignature::from(sig);
  for (const Term& t : enumerate_basis(sig.r(), wmax, ord)) {
    SplitRow row;
    row.term = t;
    row.h = height(t, ext);
    row.trivial = row.h > *sig.m + 1;
    row.group = groups.lookup(*sig.m, row.h);
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace hiltonkit
