#pragma once

#include <cctype>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "physnet/engine.hpp"
#include "physnet/format.hpp"
#include "physnet/network.hpp"

namespace physnet {

// Syntax problem in an instance document, with 1-based location.
class ParseError : public std::runtime_error {
 public:
  ParseError(int line, int col, const std::string& message)
      : std::runtime_error("line " + std::to_string(line) + ", col " + std::to_string(col) +
                           ": " + message),
        line_(line),
        col_(col) {}
  int line() const { return line_; }
  int col() const { return col_; }

 private:
  int line_;
  int col_;
};

// Document parsed but the resulting instance violates its invariants.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(std::vector<Violation> violations)
      : std::runtime_error(join(violations)), violations_(std::move(violations)) {}
  const std::vector<Violation>& violations() const { return violations_; }

 private:
  static std::string join(const std::vector<Violation>& vs) {
    std::string s = "instance failed validation:";
    for (const Violation& v : vs)
      s += std::string("\n  [") + violation_code_name(v.code) + "] " + v.message;
    return s;
  }
  std::vector<Violation> violations_;
};

// ---------------------------------------------------------------------------
// Mode tokens

inline const char* to_token(CostUpdate m) {
  switch (m) {
    case CostUpdate::Marginal: return "marginal";
    case CostUpdate::Replace: return "replace";
    case CostUpdate::Accumulate: return "accumulate";
  }
  return "marginal";
}

inline const char* to_token(ConductivityUpdate m) {
  return m == ConductivityUpdate::SemiImplicit ? "semi-implicit" : "raw";
}

inline bool parse_cost_update(std::string_view s, CostUpdate& out) {
  if (s == "marginal") out = CostUpdate::Marginal;
  else if (s == "replace") out = CostUpdate::Replace;
  else if (s == "accumulate") out = CostUpdate::Accumulate;
  else return false;
  return true;
}

inline bool parse_conductivity_update(std::string_view s, ConductivityUpdate& out) {
  if (s == "semi-implicit") out = ConductivityUpdate::SemiImplicit;
  else if (s == "raw") out = ConductivityUpdate::RawAdditive;
  else return false;
  return true;
}

// ---------------------------------------------------------------------------
// Instance document parsing

namespace detail {

struct Field {
  std::string_view text;
  int col;  // 1-based column of the first character
};

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// whitespace-separated fields with column positions
inline std::vector<Field> split_fields(std::string_view s, int base_col) {
  std::vector<Field> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    if (i >= s.size()) break;
    std::size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    out.push_back({s.substr(i, j - i), base_col + static_cast<int>(i)});
    i = j;
  }
  return out;
}

inline long long require_int(const Field& f, int line) {
  long long v = 0;
  auto res = std::from_chars(f.text.data(), f.text.data() + f.text.size(), v);
  if (res.ec != std::errc() || res.ptr != f.text.data() + f.text.size())
    throw ParseError(line, f.col, "expected an integer, got '" + std::string(f.text) + "'");
  return v;
}

inline double require_double(const Field& f, int line) {
  double v = 0.0;
  if (!parse_double(f.text, v))
    throw ParseError(line, f.col, "expected a number, got '" + std::string(f.text) + "'");
  return v;
}

}  // namespace detail

// Parses the sectioned instance format (see docs/instance-format.md).
// Unknown sections and keys are rejected with their location; the parsed
// instance is validated before it is returned, so no partial or invalid
// instance escapes.
inline NetworkInstance parse_instance(std::string_view text) {
  NetworkInstance inst;
  enum class Section { None, Meta, Nodes, Links, Params };
  Section section = Section::None;
  std::set<std::string> seen_keys;
  std::set<LinkId> seen_link_ids;
  bool have_count = false;
  bool any_line = false;
  int line_no = 0;

  std::string_view rest = text;
  while (!rest.empty() || line_no == 0) {
    if (rest.empty() && line_no > 0) break;
    ++line_no;
    std::size_t eol = rest.find('\n');
    std::string_view raw = (eol == std::string_view::npos) ? rest : rest.substr(0, eol);
    rest = (eol == std::string_view::npos) ? std::string_view{} : rest.substr(eol + 1);

    std::string_view line = raw;
    if (std::size_t hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);
    std::string_view body = detail::trim(line);
    if (body.empty()) continue;
    any_line = true;
    const int body_col = static_cast<int>(line.find_first_not_of(" \t")) + 1;

    if (body.front() == '[') {
      if (body.back() != ']')
        throw ParseError(line_no, body_col, "unterminated section header");
      std::string_view name = body.substr(1, body.size() - 2);
      if (name == "meta") section = Section::Meta;
      else if (name == "nodes") section = Section::Nodes;
      else if (name == "links") section = Section::Links;
      else if (name == "params") section = Section::Params;
      else
        throw ParseError(line_no, body_col, "unknown section [" + std::string(name) + "]");
      continue;
    }

    std::size_t eq = body.find('=');
    if (eq == std::string_view::npos)
      throw ParseError(line_no, body_col, "expected 'key = value'");
    std::string key(detail::trim(body.substr(0, eq)));
    std::string_view value = detail::trim(body.substr(eq + 1));
    const int value_col = body_col + static_cast<int>(eq) + 1;
    auto fields = detail::split_fields(value, value_col);
    auto reject_repeat = [&](const char* section_name) {
      if (!seen_keys.insert(std::string(section_name) + "." + key).second)
        throw ParseError(line_no, body_col, "key '" + key + "' given twice");
    };

    switch (section) {
      case Section::None:
        throw ParseError(line_no, body_col, "content before any section header");
      case Section::Meta:
        if (key == "name") {
          reject_repeat("meta");
          inst.name = std::string(value);
        } else if (key == "source") {
          reject_repeat("meta");
          if (fields.size() != 1)
            throw ParseError(line_no, value_col, "source takes one node id");
          inst.source = static_cast<NodeId>(detail::require_int(fields[0], line_no));
        } else {
          throw ParseError(line_no, body_col, "unknown key '" + key + "' in [meta]");
        }
        break;
      case Section::Nodes:
        if (key == "count") {
          reject_repeat("nodes");
          if (fields.size() != 1)
            throw ParseError(line_no, value_col, "count takes one integer");
          inst.n_nodes = static_cast<int>(detail::require_int(fields[0], line_no));
          have_count = true;
        } else if (key == "demand") {
          if (fields.size() != 2)
            throw ParseError(line_no, value_col, "demand takes 'NODE VALUE'");
          NodeId node = static_cast<NodeId>(detail::require_int(fields[0], line_no));
          double d = detail::require_double(fields[1], line_no);
          if (inst.demands.count(node))
            throw ParseError(line_no, fields[0].col,
                             "demand for node " + std::to_string(node) + " given twice");
          inst.demands[node] = d;
        } else {
          throw ParseError(line_no, body_col, "unknown key '" + key + "' in [nodes]");
        }
        break;
      case Section::Links: {
        if (key != "link")
          throw ParseError(line_no, body_col, "unknown key '" + key + "' in [links]");
        // ID TAIL HEAD | op coeffs | inv coeffs [| cap VALUE]
        std::vector<std::pair<std::string_view, int>> segments;
        std::string_view seg_text = value;
        int seg_col = value_col;
        for (;;) {
          std::size_t bar = seg_text.find('|');
          if (bar == std::string_view::npos) {
            segments.emplace_back(seg_text, seg_col);
            break;
          }
          segments.emplace_back(seg_text.substr(0, bar), seg_col);
          seg_col += static_cast<int>(bar) + 1;
          seg_text = seg_text.substr(bar + 1);
        }
        if (segments.size() < 3 || segments.size() > 4)
          throw ParseError(line_no, value_col,
                           "link takes 'ID TAIL HEAD | op coeffs | inv coeffs [| cap VALUE]'");
        auto head_fields = detail::split_fields(segments[0].first, segments[0].second);
        if (head_fields.size() != 3)
          throw ParseError(line_no, segments[0].second, "link needs 'ID TAIL HEAD'");
        Link l;
        l.id = static_cast<LinkId>(detail::require_int(head_fields[0], line_no));
        l.tail = static_cast<NodeId>(detail::require_int(head_fields[1], line_no));
        l.head = static_cast<NodeId>(detail::require_int(head_fields[2], line_no));
        if (!seen_link_ids.insert(l.id).second)
          throw ParseError(line_no, head_fields[0].col,
                           "duplicate link id " + std::to_string(l.id));
        if (l.id != static_cast<LinkId>(inst.links.size()))
          throw ParseError(line_no, head_fields[0].col,
                           "link ids must be dense and ascending from 0");
        for (int which = 1; which <= 2; ++which) {
          auto coeff_fields = detail::split_fields(segments[which].first, segments[which].second);
          if (coeff_fields.empty())
            throw ParseError(line_no, segments[which].second,
                             "coefficient list must not be empty");
          std::vector<double> coeffs;
          for (const auto& f : coeff_fields) coeffs.push_back(detail::require_double(f, line_no));
          (which == 1 ? l.op_cost : l.inv_cost) = Polynomial(std::move(coeffs));
        }
        if (segments.size() == 4) {
          auto cap_fields = detail::split_fields(segments[3].first, segments[3].second);
          if (cap_fields.size() != 2 || cap_fields[0].text != "cap")
            throw ParseError(line_no, segments[3].second, "expected 'cap VALUE'");
          l.cap = detail::require_double(cap_fields[1], line_no);
        }
        inst.links.push_back(std::move(l));
        break;
      }
      case Section::Params: {
        reject_repeat("params");
        SolverParams& p = inst.params;
        auto one = [&]() -> const detail::Field& {
          if (fields.size() != 1)
            throw ParseError(line_no, value_col, "'" + key + "' takes one value");
          return fields[0];
        };
        if (key == "delta") p.delta = detail::require_double(one(), line_no);
        else if (key == "dt") p.dt = detail::require_double(one(), line_no);
        else if (key == "init_length") p.init_length = detail::require_double(one(), line_no);
        else if (key == "max_iters") p.max_iters = static_cast<int>(detail::require_int(one(), line_no));
        else if (key == "seed") p.seed = static_cast<std::uint64_t>(detail::require_int(one(), line_no));
        else if (key == "cost_update") {
          if (!parse_cost_update(one().text, p.cost_update))
            throw ParseError(line_no, fields[0].col,
                             "cost_update must be marginal, replace, or accumulate");
        } else if (key == "conductivity_update") {
          if (!parse_conductivity_update(one().text, p.conductivity_update))
            throw ParseError(line_no, fields[0].col,
                             "conductivity_update must be semi-implicit or raw");
        } else if (key == "record_trajectory") {
          std::string_view v = one().text;
          if (v == "true") p.record_trajectory = true;
          else if (v == "false") p.record_trajectory = false;
          else throw ParseError(line_no, fields[0].col, "record_trajectory must be true or false");
        } else {
          throw ParseError(line_no, body_col, "unknown key '" + key + "' in [params]");
        }
        break;
      }
    }
  }

  if (!any_line) throw ParseError(1, 1, "empty instance document");
  if (!have_count) throw ParseError(line_no, 1, "missing 'count' in [nodes]");

  std::vector<Violation> violations = validate_instance(inst);
  if (!violations.empty()) throw ValidationError(std::move(violations));
  return inst;
}

// Canonical serialization; doubles use shortest round-trip formatting so
// parse(write(inst)) reproduces the instance exactly.
inline std::string write_instance(const NetworkInstance& inst) {
  std::string out;
  out += "[meta]\n";
  if (!inst.name.empty()) out += "name = " + inst.name + "\n";
  out += "source = " + std::to_string(inst.source) + "\n\n";
  out += "[nodes]\n";
  out += "count = " + std::to_string(inst.n_nodes) + "\n";
  for (const auto& [node, d] : inst.demands)
    out += "demand = " + std::to_string(node) + " " + fmt_shortest(d) + "\n";
  out += "\n[links]\n";
  out += "# id tail head | operating-cost coefficients | investment-cost coefficients [| cap]\n";
  for (const Link& l : inst.links) {
    out += "link = " + std::to_string(l.id) + " " + std::to_string(l.tail) + " " +
           std::to_string(l.head) + " |";
    for (double c : l.op_cost.coefficients()) out += " " + fmt_shortest(c);
    out += " |";
    for (double c : l.inv_cost.coefficients()) out += " " + fmt_shortest(c);
    if (l.cap) out += " | cap " + fmt_shortest(*l.cap);
    out += "\n";
  }
  const SolverParams& p = inst.params;
  out += "\n[params]\n";
  out += "delta = " + fmt_shortest(p.delta) + "\n";
  out += "dt = " + fmt_shortest(p.dt) + "\n";
  out += "init_length = " + fmt_shortest(p.init_length) + "\n";
  out += "max_iters = " + std::to_string(p.max_iters) + "\n";
  out += "seed = " + std::to_string(p.seed) + "\n";
  out += "cost_update = " + std::string(to_token(p.cost_update)) + "\n";
  out += "conductivity_update = " + std::string(to_token(p.conductivity_update)) + "\n";
  out += std::string("record_trajectory = ") + (p.record_trajectory ? "true" : "false") + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Built-in example instances
//
// Three bundled layered networks: one firm shipping through three candidate
// manufacturers and two two-stage distribution centers to three retailers
// with demands 45/35/5. Example 2 prices the first distribution center's
// storage linearly; example 3 additionally prices the first two
// manufacturing links linearly.

inline NetworkInstance builtin_example(int n) {
  if (n < 1 || n > 3)
    throw std::invalid_argument("builtin_example: n must be 1, 2, or 3");
  auto poly = [](std::vector<double> c) { return Polynomial(std::move(c)); };

  NetworkInstance inst;
  inst.name = "example-" + std::to_string(n);
  inst.n_nodes = 11;
  inst.source = 0;
  inst.demands = {{8, 45.0}, {9, 35.0}, {10, 5.0}};

  struct Row {
    NodeId tail, head;
    std::vector<double> op, inv;
  };
  std::vector<Row> rows = {
      {0, 1, {0, 2, 1}, {0, 1, 0.5}},      // firm -> manufacturers
      {0, 2, {0, 1, 0.5}, {0, 1, 2.5}},
      {0, 3, {0, 1, 0.5}, {0, 2, 1}},
      {1, 4, {0, 2, 1.5}, {0, 1, 1}},      // manufacturers -> first DC stage
      {1, 5, {0, 3, 1}, {0, 2, 2.5}},
      {2, 4, {0, 2, 1}, {0, 1, 0.5}},
      {2, 5, {0, 2, 0.5}, {0, 1, 0.5}},
      {3, 4, {0, 2, 0.5}, {0, 1, 1.5}},
      {3, 5, {0, 5, 1}, {0, 3, 2}},
      {4, 6, {0, 2, 0.5}, {0, 5, 1}},      // storage stages
      {5, 7, {0, 1, 1}, {0, 3, 0.5}},
      {6, 8, {0, 2, 0.5}, {0, 1, 0.5}},    // first DC -> retailers
      {6, 9, {0, 5, 0.5}, {0, 1, 0.5}},
      {6, 10, {0, 7, 1}, {0, 5, 2}},
      {7, 8, {0, 2, 1}, {0, 1, 0.5}},      // second DC -> retailers
      {7, 9, {0, 3, 0.5}, {0, 1, 1}},
      {7, 10, {0, 2, 0.5}, {0, 1, 0.5}},
  };
  if (n >= 2) rows[9].inv = {0, 5};  // linear storage pricing at the first DC
  if (n == 3) {
    rows[0].inv = {0, 1};  // linear capacity pricing on the first two
    rows[1].inv = {0, 1};  // manufacturing links
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    Link l;
    l.id = static_cast<LinkId>(i);
    l.tail = rows[i].tail;
    l.head = rows[i].head;
    l.op_cost = poly(rows[i].op);
    l.inv_cost = poly(rows[i].inv);
    inst.links.push_back(std::move(l));
  }
  return inst;
}

// ---------------------------------------------------------------------------
// Solution and trajectory files

// Delimited table, one row per link in id order, then a key,value footer.
inline std::string write_solution(const Solution& sol) {
  std::set<LinkId> removed(sol.removed_links.begin(), sol.removed_links.end());
  std::string out = "link,flow,capacity,length,removed\n";
  for (std::size_t a = 0; a < sol.flows.size(); ++a)
    out += std::to_string(a) + "," + fmt_fixed(sol.flows[a]) + "," + fmt_fixed(sol.capacities[a]) +
           "," + fmt_fixed(sol.lengths[a]) + "," +
           (removed.count(static_cast<LinkId>(a)) ? "1" : "0") + "\n";
  out += "objective," + fmt_fixed(sol.objective) + "\n";
  out += "iterations," + std::to_string(sol.iterations) + "\n";
  out += std::string("converged,") + (sol.converged ? "1" : "0") + "\n";
  out += "seed," + std::to_string(sol.seed) + "\n";
  out += std::string("cost_update,") + to_token(sol.cost_update) + "\n";
  out += std::string("conductivity_update,") + to_token(sol.conductivity_update) + "\n";
  return out;
}

// One row of |Q| per iteration, one column per link in id order.
inline std::string write_trajectory(const Solution& sol) {
  if (!sol.trajectory)
    throw std::invalid_argument("write_trajectory: solution has no recorded trajectory");
  std::string out = "iter";
  for (std::size_t a = 0; a < sol.flows.size(); ++a) out += ",link" + std::to_string(a);
  out += "\n";
  int iter = 0;
  for (const auto& row : *sol.trajectory) {
    out += std::to_string(++iter);
    for (double q : row) out += "," + fmt_fixed(q);
    out += "\n";
  }
  return out;
}

}  // namespace physnet
