// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <cmath>
#include <iomanip>
#include <sstream>
#include <string>

#include "fi/context.hpp"
#include "fi/importance.hpp"

namespace fi {

enum class Format { csv, json, markdown };

inline Format parse_format(const std::string& s) {
  if (s == "csv") return Format::csv;
  if (s == "json") return Format::json;
  if (s == "markdown" || s == "md") return Format::markdown;
  throw ParameterError("unknown format '" + s + "'");
}

namespace detail {

inline std::string fmt(double v, int decimals) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream s;
  s << std::fixed << std::setprecision(decimals) << v;
  std::string out = s.str();
  // no "-0.0000"
  if (out[0] == '-' && out.find_first_not_of("-0.") == std::string::npos) out.erase(0, 1);
  return out;
}

inline std::size_t degree_columns(const ImportanceReport& r) {
  std::size_t k = 0;
  for (auto& row : r.per_degree) k = std::max(k, row.size());
  return k;
}

// One table row; markdown cells get their pipes escaped.
inline void write_row(std::ostream& out, const std::vector<std::string>& cells, bool md) {
  if (md) out << "| ";
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out << (md ? " | " : ",");
    if (!md) {
      out << cells[i];
      continue;
    }
    for (char ch : cells[i]) {
      if (ch == '|') out << '\\';
      out << ch;
    }
  }
  out << (md ? " |\n" : "\n");
}

inline nlohmann::json json_number(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

}  // namespace detail

inline std::string render(const ImportanceReport& r, Format f, int decimals = 4) {
  std::ostringstream out;
  std::size_t kd = detail::degree_columns(r);
  if (f == Format::json) {
    nlohmann::json j;
    j["measure"] = r.measure;
    j["params"] = r.params;
    j["notes"] = r.notes;
    j["variables"] = nlohmann::json::array();
    for (std::size_t i = 0; i < r.names.size(); ++i) {
      nlohmann::json v{{"name", r.names[i]}, {"score", detail::json_number(r.scores[i])}};
      if (i < r.per_degree.size() && !r.per_degree[i].empty()) v["per_degree"] = r.per_degree[i];
      if (i < r.flagged.size()) v["flagged"] = static_cast<bool>(r.flagged[i]);
      j["variables"].push_back(v);
    }
    return j.dump(2) + "\n";
  }
  bool md = f == Format::markdown;
  auto line = [&](const std::vector<std::string>& cells) { detail::write_row(out, cells, md); };
  std::vector<std::string> head{"variable", "score"};
  for (std::size_t k = 0; k < kd; ++k) head.push_back("k" + std::to_string(k));
  line(head);
  if (md) line(std::vector<std::string>(head.size(), "---"));
  for (std::size_t i = 0; i < r.names.size(); ++i) {
    std::vector<std::string> row{r.names[i], detail::fmt(r.scores[i], decimals)};
    for (std::size_t k = 0; k < kd; ++k) {
      bool has = i < r.per_degree.size() && k < r.per_degree[i].size();
      row.push_back(has ? detail::fmt(r.per_degree[i][k], decimals) : "");
    }
    line(row);
  }
  return out.str();
}

// One row per variable; columns are measure by context value.
inline std::string render(const ContextReport& r, Format f, int decimals = 4) {
  std::ostringstream out;
  if (f == Format::json) {
    nlohmann::json j;
    j["context"] = r.context_name;
    j["n_context"] = r.n_context;
    j["notes"] = r.notes;
    j["variables"] = nlohmann::json::array();
    for (std::size_t m = 0; m < r.entries.size(); ++m) {
      auto& e = r.entries[m];
      nlohmann::json pv = nlohmann::json::array();
      for (double v : e.pvalue) pv.push_back(detail::json_number(v));
      j["variables"].push_back({{"name", r.names[m]},
                                {"imp", e.imp},
                                {"imp_xc", e.imp_xc},
                                {"given", e.given},
                                {"signed", e.signed_diff},
                                {"abs", e.abs_diff},
                                {"pvalue", pv}});
    }
    return j.dump(2) + "\n";
  }
  bool md = f == Format::markdown;
  auto line = [&](const std::vector<std::string>& cells) { detail::write_row(out, cells, md); };
  bool any_p = false;
  for (auto& e : r.entries)
    for (double v : e.pvalue) any_p = any_p || !std::isnan(v);
  const std::string& c = r.context_name;
  std::vector<std::string> head{"variable", "Imp"};
  for (int x = 0; x < r.n_context; ++x) {
    std::string xs = std::to_string(x);
    head.push_back("Imp|" + c + "=" + xs);
    head.push_back("Imp^|" + xs + "|");
    head.push_back("Imp^" + xs);
    if (any_p) head.push_back("pvalue^" + xs);
  }
  head.push_back("Imp^" + c);
  line(head);
  if (md) line(std::vector<std::string>(head.size(), "---"));
  for (std::size_t m = 0; m < r.entries.size(); ++m) {
    auto& e = r.entries[m];
    std::vector<std::string> cells{r.names[m], detail::fmt(e.imp, decimals)};
    for (int x = 0; x < r.n_context; ++x) {
      cells.push_back(detail::fmt(e.given[x], decimals));
      cells.push_back(detail::fmt(e.abs_diff[x], decimals));
      cells.push_back(detail::fmt(e.signed_diff[x], decimals));
      if (any_p) cells.push_back(detail::fmt(e.pvalue[x], decimals));
    }
    cells.push_back(detail::fmt(e.imp_xc, decimals));
    line(cells);
  }
  return out.str();
}

}  // namespace fi
