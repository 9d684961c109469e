// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fi/common.hpp"
#include "json.hpp"

namespace fi {

struct Variable {
  std::string name;
  int cardinality = 2;
  bool ordered = false;
};

// Exact probability table. Configuration layout is inputs, then the context
// variable when present, then the output.
class JointDistribution {
 public:
  std::vector<Variable> variables;
  Variable output;
  std::optional<Variable> context;
  std::vector<std::vector<int>> configs;
  std::vector<double> probs;

  int p() const { return static_cast<int>(variables.size()); }
  int n_columns() const { return p() + (context ? 1 : 0) + 1; }
  int output_column() const { return n_columns() - 1; }
  int context_column() const { return context ? p() : -1; }

  const Variable& column(int c) const {
    if (c < p()) return variables[c];
    if (c == output_column()) return output;
    return *context;
  }

  int index_of(const std::string& name) const {
    for (int c = 0; c < n_columns(); ++c)
      if (column(c).name == name) return c;
    throw ParameterError("unknown variable '" + name + "'");
  }

  // Merges duplicate configurations, drops zero entries and validates.
  void normalize() {
    std::map<std::vector<int>, double> merged;
    for (std::size_t i = 0; i < configs.size(); ++i) merged[configs[i]] += probs[i];
    configs.clear();
    probs.clear();
    for (auto& [cfg, pr] : merged) {
      if (pr < 0) throw ParameterError("negative probability");
      if (pr == 0) continue;
      configs.push_back(cfg);
      probs.push_back(pr);
    }
    validate();
  }

  void validate() const {
    if (configs.size() != probs.size()) throw ParameterError("configs/probs size mismatch");
    for (int c = 0; c < n_columns(); ++c)
      if (column(c).cardinality < 2)
        throw ParameterError("variable '" + column(c).name + "' needs cardinality >= 2");
    double total = 0;
    for (std::size_t i = 0; i < configs.size(); ++i) {
      if (static_cast<int>(configs[i].size()) != n_columns())
        throw ParameterError("configuration " + std::to_string(i) + " has wrong arity");
      for (int c = 0; c < n_columns(); ++c)
        if (configs[i][c] < 0 || configs[i][c] >= column(c).cardinality)
          throw ParameterError("configuration " + std::to_string(i) + " out of range at '" + column(c).name + "'");
      if (probs[i] < 0) throw ParameterError("negative probability");
      total += probs[i];
    }
    if (std::abs(total - 1.0) > 1e-12) throw ParameterError("probabilities sum to " + std::to_string(total));
  }

  double prob_of(int col, int value) const {
    double s = 0;
    for (std::size_t i = 0; i < configs.size(); ++i)
      if (configs[i][col] == value) s += probs[i];
    return s;
  }

  // P(. | column = value), renormalized. The conditioning column is kept.
  JointDistribution conditioned(int col, int value) const {
    JointDistribution d = *this;
    d.configs.clear();
    d.probs.clear();
    double mass = prob_of(col, value);
    if (mass <= 0) throw ParameterError("conditioning event has probability zero");
    for (std::size_t i = 0; i < configs.size(); ++i)
      if (configs[i][col] == value) {
        d.configs.push_back(configs[i]);
        d.probs.push_back(probs[i] / mass);
      }
    return d;
  }

  JointDistribution without_context() const {
    if (!context) return *this;
    JointDistribution d;
    d.variables = variables;
    d.output = output;
    int cc = context_column();
    for (std::size_t i = 0; i < configs.size(); ++i) {
      std::vector<int> cfg = configs[i];
      cfg.erase(cfg.begin() + cc);
      d.configs.push_back(std::move(cfg));
      d.probs.push_back(probs[i]);
    }
    d.normalize();
    return d;
  }

  // Appends an independent uniform input variable.
  JointDistribution with_noise_variable(const std::string& name, int cardinality = 2) const {
    JointDistribution d;
    d.variables = variables;
    d.variables.push_back({name, cardinality, false});
    d.output = output;
    d.context = context;
    for (std::size_t i = 0; i < configs.size(); ++i)
      for (int v = 0; v < cardinality; ++v) {
        std::vector<int> cfg(configs[i].begin(), configs[i].begin() + p());
        cfg.push_back(v);
        cfg.insert(cfg.end(), configs[i].begin() + p(), configs[i].end());
        d.configs.push_back(std::move(cfg));
        d.probs.push_back(probs[i] / cardinality);
      }
    d.normalize();
    return d;
  }

  // Appends an exact copy of input j.
  JointDistribution with_duplicate(int j) const {
    if (j < 0 || j >= p()) throw ParameterError("duplicate index out of range");
    JointDistribution d;
    d.variables = variables;
    Variable v = variables[j];
    v.name += "_copy";
    d.variables.push_back(v);
    d.output = output;
    d.context = context;
    for (std::size_t i = 0; i < configs.size(); ++i) {
      std::vector<int> cfg(configs[i].begin(), configs[i].begin() + p());
      cfg.push_back(configs[i][j]);
      cfg.insert(cfg.end(), configs[i].begin() + p(), configs[i].end());
      d.configs.push_back(std::move(cfg));
      d.probs.push_back(probs[i]);
    }
    d.normalize();
    return d;
  }
};

inline nlohmann::json to_json(const JointDistribution& d) {
  nlohmann::json j;
  j["variables"] = nlohmann::json::array();
  for (auto& v : d.variables) j["variables"].push_back({{"name", v.name}, {"cardinality", v.cardinality}});
  j["output"] = {{"name", d.output.name}, {"cardinality", d.output.cardinality}};
  if (d.context) j["context"] = {{"name", d.context->name}, {"cardinality", d.context->cardinality}};
  j["probs"] = nlohmann::json::array();
  for (std::size_t i = 0; i < d.configs.size(); ++i) j["probs"].push_back({{"config", d.configs[i]}, {"p", d.probs[i]}});
  return j;
}

inline JointDistribution distribution_from_json(const nlohmann::json& j) {
  auto var = [](const nlohmann::json& v) {
    Variable out;
    out.name = v.at("name").get<std::string>();
    out.cardinality = v.at("cardinality").get<int>();
    out.ordered = v.value("ordered", false);
    return out;
  };
  try {
    JointDistribution d;
    for (auto& v : j.at("variables")) d.variables.push_back(var(v));
    d.output = var(j.at("output"));
    if (j.contains("context") && !j["context"].is_null()) d.context = var(j["context"]);
    for (auto& e : j.at("probs")) {
      d.configs.push_back(e.at("config").get<std::vector<int>>());
      d.probs.push_back(e.at("p").get<double>());
    }
    d.normalize();
    return d;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("distribution json: ") + e.what());
  }
}

inline void save_distribution(const JointDistribution& d, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path);
  out << to_json(d).dump(1) << "\n";
}

inline JointDistribution load_distribution(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
  return distribution_from_json(j);
}

struct Column {
  std::string name;
  int cardinality = 2;  // 0 marks a numeric column
  bool ordered = false;
  bool categorical() const { return cardinality > 0; }
};

// Column-major table. Categorical codes are stored as exact small doubles.
struct Dataset {
  std::vector<Column> columns;
  std::vector<std::vector<double>> data;
  int output = -1;
  int context = -1;
  std::vector<double> weights;  // empty means unit weights

  std::size_t n_rows() const { return data.empty() ? 0 : data[0].size(); }
  int n_columns() const { return static_cast<int>(columns.size()); }
  double weight(std::size_t r) const { return weights.empty() ? 1.0 : weights[r]; }
  double value(std::size_t r, int c) const { return data[c][r]; }
  int code(std::size_t r, int c) const { return static_cast<int>(data[c][r]); }

  double total_weight() const {
    return weights.empty() ? static_cast<double>(n_rows()) : std::accumulate(weights.begin(), weights.end(), 0.0);
  }

  std::vector<int> input_columns() const {
    std::vector<int> out;
    for (int c = 0; c < n_columns(); ++c)
      if (c != output && c != context) out.push_back(c);
    return out;
  }

  int index_of(const std::string& name) const {
    for (int c = 0; c < n_columns(); ++c)
      if (columns[c].name == name) return c;
    throw ParameterError("unknown column '" + name + "'");
  }

  void validate() const {
    if (columns.size() != data.size()) throw ParameterError("column count mismatch");
    if (columns.empty() || n_rows() == 0) throw ParameterError("dataset is empty");
    if (output < 0 || output >= n_columns()) throw ParameterError("output column not set");
    for (int c = 0; c < n_columns(); ++c) {
      if (data[c].size() != n_rows()) throw ParameterError("ragged column '" + columns[c].name + "'");
      if (!columns[c].categorical()) continue;
      for (std::size_t r = 0; r < n_rows(); ++r) {
        double v = data[c][r];
        if (v < 0 || v >= columns[c].cardinality || v != std::floor(v))
          throw ParameterError("row " + std::to_string(r) + ", column '" + columns[c].name + "': code out of range");
      }
    }
    if (!weights.empty()) {
      if (weights.size() != n_rows()) throw ParameterError("weight count mismatch");
      for (double w : weights)
        if (!(w > 0)) throw ParameterError("weights must be positive");
    }
  }

  bool operator==(const Dataset& o) const {
    if (columns.size() != o.columns.size()) return false;
    for (std::size_t c = 0; c < columns.size(); ++c)
      if (columns[c].name != o.columns[c].name || columns[c].cardinality != o.columns[c].cardinality) return false;
    return data == o.data && output == o.output && context == o.context && weights == o.weights;
  }
};

namespace detail {
inline Dataset empty_like(const JointDistribution& d) {
  Dataset ds;
  for (int c = 0; c < d.n_columns(); ++c) {
    const Variable& v = d.column(c);
    ds.columns.push_back({v.name, v.cardinality, v.ordered});
  }
  ds.data.assign(d.n_columns(), {});
  ds.output = d.output_column();
  ds.context = d.context_column();
  return ds;
}
}  // namespace detail

// One row per configuration, weighted by its probability.
inline Dataset exact_frequency(const JointDistribution& d) {
  Dataset ds = detail::empty_like(d);
  for (std::size_t i = 0; i < d.configs.size(); ++i) {
    for (int c = 0; c < d.n_columns(); ++c) ds.data[c].push_back(d.configs[i][c]);
    ds.weights.push_back(d.probs[i]);
  }
  return ds;
}

inline Dataset sample(const JointDistribution& d, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw ParameterError("sample size must be positive");
  Dataset ds = detail::empty_like(d);
  std::vector<double> cdf(d.probs.size());
  std::partial_sum(d.probs.begin(), d.probs.end(), cdf.begin());
  Rng rng(seed);
  for (auto& col : ds.data) col.reserve(n);
  for (std::size_t r = 0; r < n; ++r) {
    double u = uniform01(rng) * cdf.back();
    std::size_t i = std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin();
    if (i >= cdf.size()) i = cdf.size() - 1;
    for (int c = 0; c < d.n_columns(); ++c) ds.data[c].push_back(d.configs[i][c]);
  }
  return ds;
}

// ---- CSV ----
// Header cells are "name", "name:k" (categorical, cardinality k) or
// "name:real". A column named "@weight" carries row weights.

inline void save_csv(const Dataset& ds, std::ostream& out) {
  for (int c = 0; c < ds.n_columns(); ++c) {
    if (c) out << ',';
    out << ds.columns[c].name << ':';
    if (ds.columns[c].categorical())
      out << ds.columns[c].cardinality;
    else
      out << "real";
  }
  if (!ds.weights.empty()) out << ",@weight";
  out << '\n';
  std::ostringstream cell;
  cell.precision(17);
  for (std::size_t r = 0; r < ds.n_rows(); ++r) {
    for (int c = 0; c < ds.n_columns(); ++c) {
      if (c) out << ',';
      if (ds.columns[c].categorical()) {
        out << ds.code(r, c);
      } else {
        cell.str("");
        cell << ds.value(r, c);
        out << cell.str();
      }
    }
    if (!ds.weights.empty()) {
      cell.str("");
      cell << ds.weights[r];
      out << ',' << cell.str();
    }
    out << '\n';
  }
}

inline void save_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path);
  save_csv(ds, out);
}

namespace detail {
inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  for (auto& s : out) {
    auto b = s.find_first_not_of(" \t");
    auto e = s.find_last_not_of(" \t");
    s = b == std::string::npos ? "" : s.substr(b, e - b + 1);
  }
  return out;
}
}  // namespace detail

// target/context are column names; an empty target selects the last column.
inline Dataset load_csv(std::istream& in, const std::string& target = "", const std::string& context = "") {
  std::string line;
  if (!std::getline(in, line) || line.find_first_not_of(" \t\r") == std::string::npos)
    throw FormatError("line 1: missing header");
  auto header = detail::split_csv_line(line);
  Dataset ds;
  int weight_col = -1;
  std::vector<bool> declared;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string& h = header[c];
    if (h.empty()) throw FormatError("line 1, column " + std::to_string(c + 1) + ": empty name");
    if (h == "@weight") {
      weight_col = static_cast<int>(c);
      continue;
    }
    Column col;
    auto colon = h.rfind(':');
    bool has_decl = colon != std::string::npos;
    col.name = has_decl ? h.substr(0, colon) : h;
    col.cardinality = -1;
    if (has_decl) {
      std::string spec = h.substr(colon + 1);
      if (spec == "real") {
        col.cardinality = 0;
      } else {
        try {
          std::size_t used = 0;
          col.cardinality = std::stoi(spec, &used);
          if (used != spec.size() || col.cardinality < 2) throw std::invalid_argument(spec);
        } catch (const std::exception&) {
          throw FormatError("line 1, column " + std::to_string(c + 1) + ": bad type '" + spec + "'");
        }
      }
    }
    ds.columns.push_back(col);
  }
  if (ds.columns.empty()) throw FormatError("line 1: no data columns");
  ds.data.assign(ds.columns.size(), {});
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto cells = detail::split_csv_line(line);
    if (cells.size() != header.size())
      throw FormatError("line " + std::to_string(lineno) + ": expected " + std::to_string(header.size()) +
                        " cells, found " + std::to_string(cells.size()));
    int dc = 0;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      double v;
      try {
        std::size_t used = 0;
        v = std::stod(cells[c], &used);
        if (used != cells[c].size()) throw std::invalid_argument(cells[c]);
      } catch (const std::exception&) {
        throw FormatError("line " + std::to_string(lineno) + ", column '" + header[c] + "': not a number '" +
                          cells[c] + "'");
      }
      if (static_cast<int>(c) == weight_col) {
        if (!(v > 0)) throw FormatError("line " + std::to_string(lineno) + ": weight must be positive");
        ds.weights.push_back(v);
        continue;
      }
      Column& col = ds.columns[dc];
      if (col.cardinality > 0 && (v < 0 || v >= col.cardinality || v != std::floor(v)))
        throw FormatError("line " + std::to_string(lineno) + ", column '" + col.name + "': code " + cells[c] +
                          " outside 0.." + std::to_string(col.cardinality - 1));
      ds.data[dc].push_back(v);
      ++dc;
    }
  }
  if (ds.n_rows() == 0) throw FormatError("no data rows");
  for (std::size_t c = 0; c < ds.columns.size(); ++c) {
    Column& col = ds.columns[c];
    if (col.cardinality != -1) continue;
    bool integral = true;
    double mx = 0;
    for (double v : ds.data[c]) {
      if (v < 0 || v != std::floor(v)) integral = false;
      mx = std::max(mx, v);
    }
    col.cardinality = integral ? std::max(2, static_cast<int>(mx) + 1) : 0;
  }
  ds.output = target.empty() ? ds.n_columns() - 1 : ds.index_of(target);
  if (!context.empty()) ds.context = ds.index_of(context);
  if (ds.context == ds.output) throw ParameterError("context and target must differ");
  return ds;
}

inline Dataset load_csv(const std::string& path, const std::string& target = "", const std::string& context = "") {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  return load_csv(in, target, context);
}

// ---- generators ----

enum class Problem {
  digit,
  digit_card4,
  xor_strongweak,
  problem1_context,
  example1_context,
  problem2_context,
  chain,
  clique,
  marginal_only
};

struct ProblemParams {
  double alpha = 0.8;
  int p = 5;
  int r = 2;
};

inline Problem parse_problem(const std::string& s) {
  static const std::map<std::string, Problem> names = {
      {"digit", Problem::digit},
      {"digit_card4", Problem::digit_card4},
      {"xor_strongweak", Problem::xor_strongweak},
      {"problem1_context", Problem::problem1_context},
      {"example1_context", Problem::example1_context},
      {"problem2_context", Problem::problem2_context},
      {"chain", Problem::chain},
      {"clique", Problem::clique},
      {"marginal_only", Problem::marginal_only}};
  auto it = names.find(s);
  if (it == names.end()) throw ParameterError("unknown problem '" + s + "'");
  return it->second;
}

namespace detail {
// Seven-segment encoding of digits 0..9, segments X1..X7.
inline const std::vector<std::vector<int>>& digit_segments() {
  static const std::vector<std::vector<int>> table = {
      {1, 1, 1, 0, 1, 1, 1}, {0, 0, 1, 0, 0, 1, 0}, {1, 0, 1, 1, 1, 0, 1}, {1, 0, 1, 1, 0, 1, 1},
      {0, 1, 1, 1, 0, 1, 0}, {1, 1, 0, 1, 0, 1, 1}, {1, 1, 0, 1, 1, 1, 1}, {1, 0, 1, 0, 0, 1, 0},
      {1, 1, 1, 1, 1, 1, 1}, {1, 1, 1, 1, 0, 1, 1}};
  return table;
}

inline std::vector<Variable> binary_inputs(int p, int first = 1) {
  std::vector<Variable> v;
  for (int i = 0; i < p; ++i) v.push_back({"X" + std::to_string(first + i), 2, false});
  return v;
}

inline void check_oracle_size(int p, int r) {
  if (p < 1 || r < 1 || r > p) throw ParameterError("need 1 <= r <= p");
  if (p > 20) throw ParameterError("oracle-sized problems are limited to p <= 20");
}

// Adds p - r uniform binary noise inputs to a table over r relevant inputs.
// rows: (relevant codes, output, probability).
inline JointDistribution with_noise(int p, int r, int ycard,
                                    const std::vector<std::tuple<std::vector<int>, int, double>>& rows) {
  JointDistribution d;
  d.variables = binary_inputs(p);
  d.output = {"Y", ycard, false};
  int noise = p - r;
  std::size_t combos = std::size_t{1} << noise;
  for (auto& [rel, y, pr] : rows)
    for (std::size_t m = 0; m < combos; ++m) {
      std::vector<int> cfg = rel;
      for (int k = 0; k < noise; ++k) cfg.push_back(static_cast<int>((m >> k) & 1U));
      cfg.push_back(y);
      d.configs.push_back(std::move(cfg));
      d.probs.push_back(pr / static_cast<double>(combos));
    }
  d.normalize();
  return d;
}
}  // namespace detail

inline JointDistribution generate(Problem problem, const ProblemParams& params = {}) {
  using detail::binary_inputs;
  JointDistribution d;
  switch (problem) {
    case Problem::digit: {
      d.variables = binary_inputs(7);
      d.output = {"Y", 10, false};
      for (int y = 0; y < 10; ++y) {
        auto cfg = detail::digit_segments()[y];
        cfg.push_back(y);
        d.configs.push_back(cfg);
        d.probs.push_back(0.1);
      }
      break;
    }
    case Problem::digit_card4: {
      d.variables = binary_inputs(7);
      d.variables[0].cardinality = 4;
      d.output = {"Y", 10, false};
      for (int y = 0; y < 10; ++y)
        for (int half = 0; half < 2; ++half) {
          auto cfg = detail::digit_segments()[y];
          cfg[0] = 2 * cfg[0] + half;
          cfg.push_back(y);
          d.configs.push_back(cfg);
          d.probs.push_back(0.05);
        }
      break;
    }
    case Problem::xor_strongweak: {
      double a = params.alpha;
      if (!(a >= 0 && a <= 1)) throw ParameterError("alpha must lie in [0,1]");
      d.variables = binary_inputs(3);
      d.output = {"Y", 2, false};
      for (int x1 = 0; x1 < 2; ++x1)
        for (int x2 = 0; x2 < 2; ++x2)
          for (int x3 = 0; x3 < 2; ++x3) {
            int y = x1 ^ x2;
            double px3 = (x3 == y ? a : 0.0) + (1 - a) / 2;
            d.configs.push_back({x1, x2, x3, y});
            d.probs.push_back(0.25 * px3);
          }
      break;
    }
    case Problem::problem1_context: {
      d.variables = binary_inputs(3);
      d.context = Variable{"Xc", 2, false};
      d.output = {"Y", 3, false};
      for (int xc = 0; xc < 2; ++xc)
        for (int x1 = 0; x1 < 2; ++x1)
          for (int x2 = 0; x2 < 2; ++x2)
            for (int x3 = 0; x3 < 2; ++x3) {
              int y = x1 == 0 ? 2 : (xc == 0 ? x2 : x3);
              d.configs.push_back({x1, x2, x3, xc, y});
              d.probs.push_back(1.0 / 16);
            }
      break;
    }
    case Problem::example1_context: {
      d.variables = binary_inputs(2);
      d.context = Variable{"Xc", 2, false};
      d.output = {"Y", 4, false};
      for (int x1 = 0; x1 < 2; ++x1)
        for (int x2 = 0; x2 < 2; ++x2)
          for (int xc = 0; xc < 2; ++xc) {
            if (x2 == xc) {
              d.configs.push_back({x1, x2, xc, x1});
              d.probs.push_back(1.0 / 8);
            } else {
              for (int y = 2; y < 4; ++y) {
                d.configs.push_back({x1, x2, xc, y});
                d.probs.push_back(1.0 / 16);
              }
            }
          }
      break;
    }
    case Problem::problem2_context: {
      // Xc = 0: the digit problem plus an irrelevant X8.
      // Xc = 1: X1..X4 follow the digit table, X5..X8 are pure noise.
      d.variables = binary_inputs(8);
      d.context = Variable{"Xc", 2, false};
      d.output = {"Y", 10, false};
      for (int y = 0; y < 10; ++y) {
        const auto& seg = detail::digit_segments()[y];
        for (int x8 = 0; x8 < 2; ++x8) {
          std::vector<int> cfg(seg.begin(), seg.end());
          cfg.push_back(x8);
          cfg.push_back(0);
          cfg.push_back(y);
          d.configs.push_back(cfg);
          d.probs.push_back(0.5 * 0.1 * 0.5);
        }
        for (int m = 0; m < 16; ++m) {
          std::vector<int> cfg(seg.begin(), seg.begin() + 4);
          for (int k = 0; k < 4; ++k) cfg.push_back((m >> k) & 1);
          cfg.push_back(1);
          cfg.push_back(y);
          d.configs.push_back(cfg);
          d.probs.push_back(0.5 * 0.1 / 16);
        }
      }
      break;
    }
    case Problem::chain: {
      // Y reveals, at a uniformly drawn level i, the parity X1 ^ ... ^ Xi with
      // symbols {2(i-1), 2(i-1)+1}. Xi then needs {X1..X(i-1)} to be seen.
      int p = params.p, r = params.r;
      detail::check_oracle_size(p, r);
      std::vector<std::tuple<std::vector<int>, int, double>> rows;
      for (int m = 0; m < (1 << r); ++m) {
        std::vector<int> x(r);
        for (int k = 0; k < r; ++k) x[k] = (m >> k) & 1;
        int parity = 0;
        for (int level = 0; level < r; ++level) {
          parity ^= x[level];
          rows.emplace_back(x, 2 * level + parity, 1.0 / (1 << r) / r);
        }
      }
      return detail::with_noise(p, r, 2 * r, rows);
    }
    case Problem::clique: {
      int p = params.p, r = params.r;
      detail::check_oracle_size(p, r);
      if (r < 2) throw ParameterError("clique needs r >= 2");
      std::vector<std::tuple<std::vector<int>, int, double>> rows;
      for (int m = 0; m < (1 << r); ++m) {
        std::vector<int> x(r);
        int parity = 0;
        for (int k = 0; k < r; ++k) parity ^= (x[k] = (m >> k) & 1);
        rows.emplace_back(x, parity, 1.0 / (1 << r));
      }
      return detail::with_noise(p, r, 2, rows);
    }
    case Problem::marginal_only: {
      int p = params.p, r = params.r;
      detail::check_oracle_size(p, r);
      std::vector<std::tuple<std::vector<int>, int, double>> rows;
      for (int y = 0; y < 2; ++y)
        for (int m = 0; m < (1 << r); ++m) {
          std::vector<int> x(r);
          double pr = 0.5;
          for (int k = 0; k < r; ++k) {
            x[k] = (m >> k) & 1;
            pr *= x[k] == y ? 0.75 : 0.25;
          }
          rows.emplace_back(x, y, pr);
        }
      return detail::with_noise(p, r, 2, rows);
    }
  }
  d.normalize();
  return d;
}

}  // namespace fi
