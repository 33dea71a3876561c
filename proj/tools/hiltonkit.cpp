// hiltonkit - basic products, symbolic reductions, and framed-link surgery.
//
// Subcommands: basis, split, reduce, hilton, tau, normalize, selftest.
// Output is a human table by default or a single JSON document with
// --format machine.  Exit codes: 0 success, 2 configuration error,
// 3 calculus limitation, 4 internal defect.

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#ifdef _WIN32
#include <io.h>
#define HK_ISATTY _isatty(_fileno(stdout))
#else
#include <unistd.h>
#define HK_ISATTY isatty(fileno(stdout))
#endif

#include "hiltonkit/json_io.hpp"
#include "hiltonkit/selftest.hpp"

namespace hk = hiltonkit;

namespace {

// ------------------------------------------------------------------ styling ---

struct Style {
  bool on = false;
  std::string bold(const std::string& s) const {
    return on ? "\033[1m" + s + "\033[0m" : s;
  }
  std::string good(const std::string& s) const {
    return on ? "\033[32m" + s + "\033[0m" : s;
  }
  std::string bad(const std::string& s) const {
    return on ? "\033[31m" + s + "\033[0m" : s;
  }
};

Style make_style() {
  Style st;
  st.on = HK_ISATTY && std::getenv("HILTONKIT_NO_COLOR") == nullptr;
  return st;
}

std::string pad(const std::string& s, size_t w) {
  return s.size() >= w ? s : s + std::string(w - s.size(), ' ');
}

// ------------------------------------------------------------ configuration ---

struct Cli {
  std::string sig_file;
  std::vector<int> k;
  int m = 0;
  std::string order = "default";
  std::string format = "table";
  std::uint64_t seed = 20260814;
  int wmax = 0;
  std::string data;
  const char* argv0 = nullptr;

  bool machine() const { return format == "machine"; }

  hk::Signature signature() const {
    hk::Signature sig;
    if (!sig_file.empty()) sig = hk::signature_from_file(sig_file);
    if (!k.empty()) sig.k = k;
    if (m > 0) sig.m = m;
    if (sig.k.empty())
      throw hk::ConfigError("no codimensions: give --k (e.g. --k 2,2) or --sig FILE");
    sig.validate();
    return sig;
  }

  hk::BasisOrder basis_order() const {
    if (order == "default") return hk::BasisOrder::standard();
    if (order.rfind("prec:", 0) == 0) {
      const std::string path = order.substr(5);
      std::ifstream in(path);
      if (!in) throw hk::ConfigError("cannot open precedence file " + path);
      std::vector<hk::Term> terms;
      std::string line;
      while (std::getline(in, line)) {
        const size_t a = line.find_first_not_of(" \t\r");
        if (a == std::string::npos || line[a] == '#') continue;
        const size_t b = line.find_last_not_of(" \t\r");
        terms.push_back(hk::parse_term(line.substr(a, b - a + 1)));
      }
      return hk::build_prec(terms);
    }
    if (order.find('<') != std::string::npos) {
      std::vector<int> symbols;
      std::stringstream ss(order);
      std::string tok;
      while (std::getline(ss, tok, '<')) {
        const size_t a = tok.find_first_not_of(" \t");
        const size_t b = tok.find_last_not_of(" \t");
        if (a == std::string::npos) throw hk::ConfigError("empty symbol in --order");
        const hk::Term t = hk::parse_term(tok.substr(a, b - a + 1));
        if (!t->is_leaf())
          throw hk::ConfigError("--order lists generators only, e.g. \"i2<i1\"");
        symbols.push_back(t->leaf);
      }
      return hk::BasisOrder::permuted(symbols);
    }
    throw hk::ConfigError("--order accepts \"default\", \"i2<i1\"-style generator "
                          "lists, or \"prec:FILE\"");
  }

  std::string data_dir() const { return hk::locate_data_dir(data, argv0); }

  int default_wmax(const hk::Signature& sig) const {
    if (wmax > 0) return wmax;
    if (sig.m) return hk::splitting_weight_bound(sig);
    return 4;
  }
};

void add_common(CLI::App* sub, Cli& cli) {
  sub->add_option("--sig", cli.sig_file, "signature file (JSON with fields k, m)");
  sub->add_option("--k", cli.k, "generator codimensions, e.g. 2,2")->delimiter(',');
  sub->add_option("--m", cli.m, "ambient sphere dimension");
  sub->add_option("--order", cli.order,
                  "basis order: default | \"i2<i1\" | prec:FILE");
  sub->add_option("--format", cli.format, "output format")
      ->check(CLI::IsMember({"table", "machine"}));
  sub->add_option("--seed", cli.seed, "seed for randomized work");
  sub->add_option("--wmax", cli.wmax, "weight bound");
  sub->add_option("--data", cli.data, "directory with group annotation data");
}

void emit(const hk::ordered_json& doc) { std::cout << doc.dump(2) << "\n"; }

// ------------------------------------------------------------------- basis ---

int cmd_basis(const Cli& cli, const Style& st) {
  const hk::Signature sig = cli.signature();
  const hk::BasisOrder ord = cli.basis_order();
  const int wmax = cli.default_wmax(sig);
  const hk::ExtendedSignature ext = hk::ExtendedSignature::from(sig);
  const auto cls = hk::enumerate_basis_by_weight(sig.r(), wmax, ord);

  if (cli.machine()) {
    hk::ordered_json doc = hk::machine_doc("basis", sig);
    doc["wmax"] = wmax;
    hk::ordered_json rows = hk::ordered_json::array();
    int pos = 0;
    for (int w = 1; w <= wmax; ++w)
      for (const hk::Term& t : cls[w]) {
        hk::ordered_json row;
        row["position"] = ++pos;
        row["term"] = hk::term_to_json(t);
        row["weight"] = w;
        row["height"] = hk::height(t, ext);
        rows.push_back(std::move(row));
      }
    doc["elements"] = std::move(rows);
    emit(doc);
    return 0;
  }

  size_t width = 4;
  for (int w = 1; w <= wmax; ++w)
    for (const hk::Term& t : cls[w]) width = std::max(width, hk::to_string(t).size());
  std::cout << st.bold("basis") << "  r=" << sig.r() << "  wmax=" << wmax << "\n";
  int pos = 0;
  for (int w = 1; w <= wmax; ++w) {
    std::cout << st.bold("weight " + std::to_string(w)) << ": " << cls[w].size()
              << "\n";
    for (const hk::Term& t : cls[w])
      std::cout << "  " << pad(std::to_string(++pos), 4) << pad(hk::to_string(t), width + 2)
                << "height " << hk::height(t, ext) << "\n";
  }
  return 0;
}

// ------------------------------------------------------------------- split ---

int cmd_split(const Cli& cli, const Style& st) {
  const hk::Signature sig = cli.signature();
  const hk::BasisOrder ord = cli.basis_order();
  const auto [groups, warn] = hk::load_group_table(cli.data_dir());
  const std::optional<int> wider =
      cli.wmax > 0 ? std::optional<int>(cli.wmax) : std::nullopt;
  const hk::SplittingTable table = hk::splitting_table(sig, ord, groups, wider);

  if (cli.machine()) {
    hk::ordered_json doc = hk::machine_doc("split", sig);
    doc.update(hk::split_to_json(table));
    emit(doc);
    return 0;
  }

  if (!warn.empty()) std::cerr << "warning: " << warn << "\n";
  std::cout << st.bold("splitting") << "  m=" << *sig.m << "  w0=" << table.w0 << "\n";
  size_t width = 4;
  for (const auto& row : table.rows)
    width = std::max(width, hk::to_string(row.term).size());
  std::cout << "  " << st.bold(pad("term", width + 2) + pad("height", 8) +
                               pad("status", 11) + "group")
            << "\n";
  for (const auto& row : table.rows)
    std::cout << "  " << pad(hk::to_string(row.term), width + 2)
              << pad(std::to_string(row.h), 8) << pad(row.status(), 11) << row.group
              << "\n";
  std::cout << st.bold("summary") << ": " << table.summary() << "\n";
  return 0;
}

// ------------------------------------------------------------------ reduce ---

int cmd_reduce(const Cli& cli, const Style& st, int nsteps) {
  const hk::Signature sig = cli.signature();
  const hk::BasisOrder ord = cli.basis_order();
  std::optional<int> limit;
  if (nsteps >= 0)
    limit = nsteps;
  else if (!sig.m)
    throw hk::ConfigError("give -n STEPS or an ambient dimension --m");
  const hk::ReductionSequence seq = hk::build_TS(sig, ord, limit);

  if (cli.machine()) {
    hk::ordered_json doc = hk::machine_doc("reduce", sig);
    doc["steps"] = hk::steps_to_json(seq.steps);
    emit(doc);
    return 0;
  }

  std::cout << st.bold("reduction sequence") << "  steps=" << seq.steps.size() << "\n";
  size_t width = 10;
  for (const auto& s : seq.steps)
    width = std::max(width, hk::to_string(s.gamma).size());
  std::cout << "  " << st.bold(pad("step", 6) + pad("rendering", 13) +
                               pad("symbol", 8) + pad("codim", 7) + "collapses")
            << "\n";
  for (const auto& s : seq.steps)
    std::cout << "  " << pad(std::to_string(s.index), 6) << pad(hk::render_step(s), 13)
              << pad("i" + std::to_string(s.new_symbol), 8)
              << pad(std::to_string(s.new_codim), 7) << hk::to_string(s.gamma) << "\n";
  return 0;
}

// ------------------------------------------------------------------ hilton ---

int cmd_hilton(const Cli& cli, const Style& st, const std::string& expr_text,
               const std::string& gamma_text) {
  const hk::Signature sig = cli.signature();
  const hk::BasisOrder ord = cli.basis_order();
  const hk::LieExpr expr = hk::parse_lie_expr(expr_text);
  const hk::Term gamma = hk::parse_term(gamma_text);
  std::optional<int> limit;
  if (!sig.m) {
    long long n = 0;
    const int wmax = cli.default_wmax(sig);
    for (int w = 2; w <= wmax; ++w) n += hk::witt_rank(sig.r(), w);
    limit = (int)n;
  }
  const hk::ReductionSequence seq = hk::build_TS(sig, ord, limit);
  const hk::HiltonResult res = hk::hilton(expr, gamma, seq);

  if (cli.machine()) {
    hk::ordered_json doc = hk::machine_doc("hilton", sig);
    doc["gamma"] = hk::term_to_json(gamma);
    doc["pipeline"] = hk::pipeline_to_json(res.pipeline);
    doc["plain"] = hk::coeff_str(res.plain);
    doc["square"] = hk::coeff_str(res.square);
    emit(doc);
    return 0;
  }

  std::cout << st.bold("gamma") << ":    " << hk::to_string(gamma) << "\n"
            << st.bold("pipeline") << ": " << hk::render_pipeline(res.pipeline) << "\n"
            << st.bold("plain") << ":    " << hk::coeff_str(res.plain) << "\n"
            << st.bold("square") << ":   " << hk::coeff_str(res.square) << "\n";
  return 0;
}

// --------------------------------------------------------------------- tau ---

int cmd_tau(const Cli& cli, const Style& st, const std::string& target, int j, int i,
            const std::string& mode, int new_symbol, int w0_flag) {
  hk::SymLink link;
  hk::Signature sig;
  if (!target.empty() && target[0] == '@') {
    link = hk::link_from_file(target.substr(1));
    sig.k.assign(link.ext.k.begin(), link.ext.k.begin() + link.ext.base_r);
    sig.m = link.ext.m;
  } else {
    sig = cli.signature();
    link = hk::rep(hk::parse_term(target), hk::ExtendedSignature::from(sig));
  }

  hk::ordered_json doc = hk::machine_doc("tau", sig);
  doc["mode"] = mode;
  doc["j"] = j;
  doc["i"] = i;

  const std::string dir = "tau_{" + std::to_string(j) + "," + std::to_string(i) + "}";

  if (mode == "eval") {
    const std::vector<hk::Cell> z = hk::tau_eval(link, j, i);
    if (cli.machine()) {
      hk::ordered_json cells = hk::ordered_json::array();
      for (const hk::Cell& c : z) cells.push_back(hk::cell_to_json(c));
      doc["cells"] = std::move(cells);
      emit(doc);
      return 0;
    }
    std::cout << st.bold(dir + " cells") << ":\n";
    if (z.empty()) std::cout << "  (empty)\n";
    for (const hk::Cell& c : z) std::cout << "  " << hk::render_cell(c) << "\n";
    return 0;
  }

  if (mode == "append") {
    const int sym = hk::tau_append(link, j, i, new_symbol);
    if (cli.machine()) {
      doc["new_symbol"] = sym;
      doc["link"] = hk::link_to_json(link);
      emit(doc);
      return 0;
    }
    std::cout << st.bold("appended") << " i" << sym << "  codim "
              << link.ext.codim(sym) << "\n"
              << hk::render_link(link);
    return 0;
  }

  if (mode == "p") {
    hk::SymLink work = link;
    const int sym = new_symbol > 0 ? new_symbol : (int)work.ext.k.size() + 1;
    const hk::LieExpr classes = hk::tau_p(work, j, i, sym);
    if (cli.machine()) {
      doc["new_symbol"] = sym;
      doc["classes"] = hk::expr_to_json(classes);
      emit(doc);
      return 0;
    }
    std::cout << st.bold(dir + "^p classes") << ": " << hk::render_lie_expr(classes)
              << "\n";
    return 0;
  }

  if (mode == "R") {
    const int sym = new_symbol > 0 ? new_symbol : (int)link.ext.k.size() + 1;
    int w0 = w0_flag;
    if (w0 <= 0) {
      hk::Signature base = sig;
      w0 = base.m ? hk::splitting_weight_bound(base) : cli.default_wmax(base);
    }
    hk::tau_R(link, j, i, sym, w0);
    const hk::LieExpr classes = hk::extract(link);
    if (cli.machine()) {
      doc["new_symbol"] = sym;
      doc["w0"] = w0;
      doc["link"] = hk::link_to_json(link);
      doc["classes"] = hk::expr_to_json(classes);
      emit(doc);
      return 0;
    }
    std::cout << st.bold("tau^R_{" + std::to_string(j) + "," + std::to_string(i) +
                         "} -> i" + std::to_string(sym))
              << "  (w0=" << w0 << ")\n"
              << hk::render_link(link) << st.bold("classes") << ": "
              << hk::render_lie_expr(classes) << "\n";
    return 0;
  }

  throw hk::ConfigError("--mode accepts eval, append, p, or R");
}

// --------------------------------------------------------------- normalize ---

int cmd_normalize(const Cli& cli, const Style& st, const std::string& expr_text) {
  const hk::Signature sig = cli.signature();
  const hk::BasisOrder ord = cli.basis_order();
  const hk::ExtendedSignature ext = hk::ExtendedSignature::from(sig);
  hk::NormalizeOptions opt;
  opt.seed = cli.seed;
  const hk::LieExpr nf = hk::normalize(hk::parse_lie_expr(expr_text), ord, ext, opt);

  if (cli.machine()) {
    hk::ordered_json doc = hk::machine_doc("normalize", sig);
    doc["result"] = hk::expr_to_json(nf);
    emit(doc);
    return 0;
  }

  auto join = [](const std::set<std::string>& xs) {
    if (xs.empty()) return std::string("none");
    std::string out;
    for (const auto& x : xs) out += (out.empty() ? "" : ", ") + x;
    return out;
  };
  std::cout << st.bold("normal form") << ": " << hk::render_lie_expr(nf) << "\n"
            << st.bold("two-torsion squares") << ": " << join(nf.two_torsion) << "\n"
            << st.bold("possibly zero squares") << ": " << join(nf.possibly_zero)
            << "\n";
  return 0;
}

// ---------------------------------------------------------------- selftest ---

int cmd_selftest(const Cli& cli, const Style& st) {
  hk::SuiteOptions opt;
  opt.full = false;
  opt.seed = cli.seed;
  opt.data_dir = cli.data_dir();
  const auto results = hk::run_suites(opt);

  if (cli.machine()) {
    hk::ordered_json doc;
    doc["schema"] = hk::schema_id;
    doc["command"] = "selftest";
    doc["scale"] = "desk";
    hk::ordered_json rows = hk::ordered_json::array();
    for (const auto& r : results) {
      hk::ordered_json row;
      row["id"] = r.id;
      row["name"] = r.name;
      row["status"] = r.status;
      row["detail"] = r.detail;
      rows.push_back(std::move(row));
    }
    doc["results"] = std::move(rows);
    emit(doc);
    return hk::all_passed(results) ? 0 : 1;
  }

  for (const auto& r : results) {
    std::string line = hk::render_suite_line(r);
    if (st.on) {
      if (r.status == "PASS")
        line = st.good("PASS") + line.substr(4);
      else if (r.status == "FAIL")
        line = st.bad("FAIL") + line.substr(4);
    }
    std::cout << line << "\n";
  }
  const bool ok = hk::all_passed(results);
  std::cout << (ok ? st.good("selftest: ok") : st.bad("selftest: FAILURES above"))
            << "\n";
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  Cli cli;
  cli.argv0 = argc > 0 ? argv[0] : nullptr;
  const Style st = make_style();

  CLI::App app{"basic products, symbolic reductions, and framed-link surgery"};
  app.require_subcommand(1);

  CLI::App* s_basis = app.add_subcommand("basis", "list basic products by weight");
  add_common(s_basis, cli);

  CLI::App* s_split =
      app.add_subcommand("split", "splitting factors with group annotations");
  add_common(s_split, cli);

  int nsteps = -1;
  CLI::App* s_reduce = app.add_subcommand("reduce", "build the reduction sequence");
  s_reduce->add_option("-n,--steps", nsteps, "number of reduction steps");
  add_common(s_reduce, cli);

  std::string expr_text, gamma_text;
  CLI::App* s_hilton =
      app.add_subcommand("hilton", "coefficient projection onto a basic product");
  s_hilton->add_option("expr", expr_text, "integer combination of bracket terms")
      ->required();
  s_hilton->add_option("gamma", gamma_text, "basic product")->required();
  add_common(s_hilton, cli);

  std::string tau_target, tau_mode = "eval";
  int tau_j = 0, tau_i = 0, tau_symbol = -1, tau_w0 = 0;
  CLI::App* s_tau =
      app.add_subcommand("tau", "intersection and surgery on a model link");
  s_tau->add_option("term", tau_target, "bracket term, or @FILE with a link document")
      ->required();
  s_tau->add_option("j", tau_j, "active component")->required();
  s_tau->add_option("i", tau_i, "passive component")->required();
  s_tau->add_option("--mode", tau_mode, "eval | append | p | R")
      ->check(CLI::IsMember({"eval", "append", "p", "R"}));
  s_tau->add_option("--new-symbol", tau_symbol, "symbol for the fresh component");
  s_tau->add_option("--w0", tau_w0, "largest chain weight the surgery corrects");
  add_common(s_tau, cli);

  std::string norm_text;
  CLI::App* s_norm = app.add_subcommand("normalize", "rewrite into the basis");
  s_norm->add_option("expr", norm_text, "integer combination of bracket terms")
      ->required();
  add_common(s_norm, cli);

  CLI::App* s_self = app.add_subcommand("selftest", "run the verification suites");
  add_common(s_self, cli);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*s_basis) return cmd_basis(cli, st);
    if (*s_split) return cmd_split(cli, st);
    if (*s_reduce) return cmd_reduce(cli, st, nsteps);
    if (*s_hilton) return cmd_hilton(cli, st, expr_text, gamma_text);
    if (*s_tau)
      return cmd_tau(cli, st, tau_target, tau_j, tau_i, tau_mode, tau_symbol, tau_w0);
    if (*s_norm) return cmd_normalize(cli, st, norm_text);
    if (*s_self) return cmd_selftest(cli, st);
  } catch (const hk::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const hk::CalculusError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const hk::DefectError& e) {
    std::cerr << "internal defect: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
