#pragma once

// Machine-readable input and output.
//
// Every machine document is a single JSON object with a fixed key order, so
// identical invocations compare byte-for-byte.  Schema id: "hiltonkit/1".
// Conventions:
//   * bracket terms are nested two-element arrays over symbol strings,
//     e.g. ["i1", ["i1", "i2"]];
//   * coefficients are decimal strings (they are arbitrary-precision);
//   * link cells list their factors outermost first, each factor as
//     {kind, dim, tag, pair, shift} with tag "A"/"B" for the two sides of a
//     linking pair and tag "" / pair -1 for anonymous base points.

#include <json.hpp>

#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "hiltonkit/linkcalc.hpp"
#include "hiltonkit/reduction.hpp"
#include "hiltonkit/splitting.hpp"
#include "hiltonkit/wterm.hpp"

namespace hiltonkit {

using ordered_json = nlohmann::ordered_json;

inline constexpr const char* schema_id = "hiltonkit/1";

inline std::string coeff_str(const Coeff& c) { return c.str(); }

// ------------------------------------------------------------------- terms ---

inline ordered_json term_to_json(const Term& t) {
  if (t->is_leaf()) return "i" + std::to_string(t->leaf);
  return ordered_json::array({term_to_json(t->l), term_to_json(t->r)});
}

inline Term term_from_json(const ordered_json& v) {
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s.size() < 2 || s[0] != 'i')
      throw ConfigError("bad symbol in term document: \"" + s + "\"");
    int n = 0;
    for (size_t p = 1; p < s.size(); ++p) {
      if (!std::isdigit((unsigned char)s[p]))
        throw ConfigError("bad symbol in term document: \"" + s + "\"");
      n = n * 10 + (s[p] - '0');
    }
    if (n < 1) throw ConfigError("symbol indices start at 1");
    return atom(n);
  }
  if (v.is_array() && v.size() == 2)
    return br(term_from_json(v[0]), term_from_json(v[1]));
  throw ConfigError("a term document is a symbol string or a two-element array");
}

// ------------------------------------------------------------- expressions ---

inline const char* marker_name(Marker m) {
  return m == Marker::plain ? "plain" : "square";
}

inline ordered_json expr_to_json(const LieExpr& e) {
  ordered_json terms = ordered_json::array();
  for (const auto& [k, c] : e.terms) {
    ordered_json row;
    row["term"] = term_to_json(k.first);
    row["marker"] = marker_name((Marker)k.second);
    row["coeff"] = coeff_str(c);
    terms.push_back(std::move(row));
  }
  ordered_json out;
  out["terms"] = std::move(terms);
  out["two_torsion"] = ordered_json(e.two_torsion);
  out["possibly_zero"] = ordered_json(e.possibly_zero);
  return out;
}

// -------------------------------------------------------------- signatures ---

inline ordered_json signature_to_json(const Signature& sig) {
  ordered_json out;
  out["k"] = ordered_json(sig.k);
  if (sig.m) out["m"] = *sig.m;
  return out;
}

inline Signature signature_from_json(const ordered_json& v) {
  Signature sig;
  try {
    for (const auto& e : v.at("k")) sig.k.push_back(e.get<int>());
    if (v.contains("m")) sig.m = v.at("m").get<int>();
  } catch (const nlohmann::json::exception& ex) {
    throw ConfigError(std::string("bad signature document: ") + ex.what());
  }
  sig.validate();
  return sig;
}

inline Signature signature_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open signature file " + path);
  ordered_json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& ex) {
    throw ConfigError("signature file " + path + " is not JSON: " + ex.what());
  }
  return signature_from_json(doc);
}

// --------------------------------------------------------------- reduction ---

inline ordered_json step_to_json(const ReductionStep& s, char flavor = 'S') {
  ordered_json row;
  row["step_index"] = s.index;
  row["j"] = s.j;
  row["i"] = s.i;
  row["new_symbol"] = s.new_symbol;
  row["new_codim"] = s.new_codim;
  row["rendering"] = render_step(s, flavor);
  return row;
}

inline ordered_json steps_to_json(const std::vector<ReductionStep>& steps,
                                  char flavor = 'S') {
  ordered_json out = ordered_json::array();
  for (const auto& s : steps) out.push_back(step_to_json(s, flavor));
  return out;
}

inline ordered_json pipeline_to_json(const Pipeline& p) {
  ordered_json out;
  out["final_symbol"] = p.final_symbol;
  out["rendering"] = render_pipeline(p);
  out["steps"] = steps_to_json(p.steps, 'R');
  return out;
}

// --------------------------------------------------------------- splitting ---

inline ordered_json split_to_json(const SplittingTable& t) {
  ordered_json rows = ordered_json::array();
  for (const auto& row : t.rows) {
    ordered_json r;
    r["term"] = term_to_json(row.term);
    r["height"] = row.h;
    r["status"] = row.status();
    r["group"] = row.group;
    rows.push_back(std::move(r));
  }
  ordered_json out;
  out["w0"] = t.w0;
  out["rows"] = std::move(rows);
  out["summary"] = t.summary();
  return out;
}

// ------------------------------------------------------------------- links ---

inline ordered_json factor_to_json(const Factor& f) {
  ordered_json out;
  out["kind"] = f.sphere ? "sphere" : "point";
  out["dim"] = f.dim;
  out["tag"] = f.pair < 0 ? "" : (f.side == side_a ? "A" : "B");
  out["pair"] = f.pair;
  out["shift"] = f.shift;
  return out;
}

inline ordered_json cell_to_json(const Cell& c) {
  ordered_json cell;
  cell["sign"] = c.sign;
  ordered_json fs = ordered_json::array();
  for (const Factor& f : c.fs) fs.push_back(factor_to_json(f));
  cell["factors"] = std::move(fs);
  return cell;
}

inline ordered_json link_to_json(const SymLink& link) {
  ordered_json out;
  out["signature"] = signature_to_json(
      Signature{std::vector<int>(link.ext.k.begin(), link.ext.k.begin() + link.ext.base_r),
                link.ext.m});
  ordered_json symbols = ordered_json::array();
  for (int s = link.ext.base_r + 1; s <= link.ext.nsym(); ++s) {
    if (link.ext.k[s - 1] == 0) continue;
    ordered_json row;
    row["symbol"] = s;
    row["codim"] = link.ext.k[s - 1];
    if (auto it = link.ext.provenance.find(s); it != link.ext.provenance.end()) {
      ordered_json from;
      from["j"] = it->second.j;
      from["i"] = it->second.i;
      if (it->second.gamma) from["gamma"] = term_to_json(it->second.gamma);
      row["from"] = std::move(from);
    }
    symbols.push_back(std::move(row));
  }
  out["symbols"] = std::move(symbols);
  out["ambient_height"] = link.ambient_h;
  ordered_json registry = ordered_json::array();
  for (const auto& [id, info] : link.pairs) {
    ordered_json row;
    row["pair"] = id;
    row["dim_a"] = info.dim_a;
    row["dim_b"] = info.dim_b;
    row["level"] = info.level;
    if (info.origin) row["origin"] = term_to_json(info.origin);
    registry.push_back(std::move(row));
  }
  out["registry"] = std::move(registry);
  ordered_json comps = ordered_json::array();
  for (const auto& [sym, cells] : link.comps) {
    ordered_json comp;
    comp["symbol"] = sym;
    ordered_json cj = ordered_json::array();
    for (const Cell& c : cells) cj.push_back(cell_to_json(c));
    comp["cells"] = std::move(cj);
    comps.push_back(std::move(comp));
  }
  out["components"] = std::move(comps);
  return out;
}

inline SymLink link_from_json(const ordered_json& doc) {
  SymLink link;
  try {
    Signature base = signature_from_json(doc.at("signature"));
    link.ext = ExtendedSignature::from(base);
    if (doc.contains("symbols"))
      for (const auto& row : doc.at("symbols")) {
        int sym = row.at("symbol").get<int>();
        link.ext.add_symbol(sym, row.at("codim").get<int>());
        if (row.contains("from")) {
          ExtendedSignature::Provenance p;
          p.j = row.at("from").at("j").get<int>();
          p.i = row.at("from").at("i").get<int>();
          if (row.at("from").contains("gamma"))
            p.gamma = term_from_json(row.at("from").at("gamma"));
          link.ext.provenance[sym] = p;
        }
      }
    link.ambient_h = doc.value("ambient_height", 0);
    for (const auto& row : doc.at("registry")) {
      PairInfo info;
      int id = row.at("pair").get<int>();
      info.dim_a = row.at("dim_a").get<int>();
      info.dim_b = row.at("dim_b").get<int>();
      info.level = row.at("level").get<int>();
      if (row.contains("origin")) info.origin = term_from_json(row.at("origin"));
      if (id < 0 || link.pairs.count(id))
        throw ConfigError("registry pair ids must be distinct and non-negative");
      link.pairs[id] = std::move(info);
      link.next_pair = std::max(link.next_pair, id + 1);
    }
    for (const auto& comp : doc.at("components")) {
      int sym = comp.at("symbol").get<int>();
      if (link.comps.count(sym))
        throw ConfigError("component symbols must be distinct");
      auto& cells = link.comps[sym];
      for (const auto& cj : comp.at("cells")) {
        Cell c;
        c.sign = cj.at("sign").get<int>();
        if (c.sign != 1 && c.sign != -1)
          throw ConfigError("cell signs must be +1 or -1");
        for (const auto& fj : cj.at("factors")) {
          const std::string kind = fj.at("kind").get<std::string>();
          Factor f;
          f.sphere = kind == "sphere";
          if (!f.sphere && kind != "point")
            throw ConfigError("factor kind must be \"sphere\" or \"point\"");
          f.dim = fj.at("dim").get<int>();
          f.pair = fj.value("pair", -1);
          f.shift = fj.value("shift", 0);
          const std::string tag = fj.value("tag", "");
          if (f.pair >= 0) {
            if (tag != "A" && tag != "B")
              throw ConfigError("pair-bound factors carry tag \"A\" or \"B\"");
            f.side = tag == "A" ? side_a : side_b;
            auto it = link.pairs.find(f.pair);
            if (it == link.pairs.end())
              throw ConfigError("factor references unregistered pair " +
                                std::to_string(f.pair));
            const int want = f.side == side_a ? it->second.dim_a : it->second.dim_b;
            if (f.sphere && f.dim != want)
              throw ConfigError("sphere dimension disagrees with pair registry");
            if (!f.sphere && f.dim != 0)
              throw ConfigError("point factors have dimension zero");
          } else {
            if (f.sphere) throw ConfigError("sphere factors must name a pair");
            if (f.dim != 0) throw ConfigError("point factors have dimension zero");
            f.side = -1;
          }
          c.fs.push_back(f);
        }
        cells.push_back(std::move(c));
      }
    }
  } catch (const nlohmann::json::exception& ex) {
    throw ConfigError(std::string("bad link document: ") + ex.what());
  }
  try {
    check_link(link);
  } catch (const DefectError& ex) {
    // Inconsistencies in user-supplied documents are input errors, not bugs.
    throw ConfigError(std::string("link document fails consistency: ") + ex.what());
  }
  return link;
}

inline SymLink link_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open link file " + path);
  ordered_json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& ex) {
    throw ConfigError("link file " + path + " is not JSON: " + ex.what());
  }
  // Accept both a bare link document and a machine envelope holding one.
  if (doc.is_object() && doc.contains("link")) return link_from_json(doc.at("link"));
  return link_from_json(doc);
}

// ---------------------------------------------------------------- envelope ---

inline ordered_json machine_doc(const std::string& command, const Signature& sig) {
  ordered_json out;
  out["schema"] = schema_id;
  out["command"] = command;
  out["signature"] = signature_to_json(sig);
  return out;
}

}  // namespace hiltonkit
