// Copyright 2026 The BiUDA Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include "errors.hpp"

namespace biuda {

namespace {

std::string fmt(const std::optional<double>& v) {
  if (!v) return "";
  std::ostringstream s;
  s << std::fixed << std::setprecision(2) << round2(*v);
  return s.str();
}

std::optional<double> parse_cell(const std::string& cell, const std::filesystem::path& path, int line) {
  if (cell.empty()) return std::nullopt;
  try {
    std::size_t used = 0;
    const double v = std::stod(cell, &used);
    if (used == cell.size()) return v;
  } catch (const std::exception&) {
  }
  throw ReportError(path.string() + ":" + std::to_string(line) + ": bad number '" + cell + "'");
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  return out;
}

bool is_bound(const std::string& direction) { return direction == kSourceBound || direction == kTargetBound; }

using Key = std::pair<std::string, std::string>;  // (direction, class)

struct Indexed {
  std::map<Key, const MetricsRow*> bounds;
  std::map<std::string, std::map<Key, const MetricsRow*>> methods;
  std::vector<std::string> classes;  // in first-seen order, mean last
};

Indexed index_rows(const MetricsTable& table) {
  Indexed ix;
  std::set<std::string> seen;
  for (const auto& row : table) {
    if (row.class_name != kMeanClass && seen.insert(row.class_name).second) ix.classes.push_back(row.class_name);
    if (is_bound(row.direction)) {
      ix.bounds[{row.direction, row.class_name}] = &row;
    } else if (row.direction == kForward || row.direction == kBackward) {
      ix.methods[row.method][{row.direction, row.class_name}] = &row;
    } else {
      throw ReportError("row of method '" + row.method + "' has unknown direction '" + row.direction + "'");
    }
  }
  ix.classes.push_back(kMeanClass);

  std::vector<std::string> missing_bounds;
  for (const char* b : {kSourceBound, kTargetBound}) {
    if (!ix.bounds.count({b, kMeanClass})) missing_bounds.emplace_back(b);
  }
  if (!missing_bounds.empty()) {
    std::string msg = "missing upper bounds:";
    for (const auto& b : missing_bounds) msg += " " + b;
    throw ReportError(msg);
  }
  std::vector<std::string> missing;
  for (const auto& method : report_methods(table)) {
    for (const char* d : {kForward, kBackward}) {
      if (!ix.methods[method].count({d, kMeanClass})) missing.push_back(method + "/" + d);
    }
  }
  if (!missing.empty()) {
    std::string msg = "missing rows:";
    for (const auto& m : missing) msg += " " + m;
    throw ReportError(msg);
  }
  return ix;
}

std::optional<double> value(const MetricsRow* row, bool use_f1) {
  if (row == nullptr) return std::nullopt;
  return use_f1 ? row->f1 : row->dice;
}

std::optional<double> drop_for(const Indexed& ix, const std::string& method, const char* direction,
                               const std::string& cls, bool use_f1) {
  const char* bound = std::string_view(direction) == kForward ? kTargetBound : kSourceBound;
  const auto& rows = ix.methods.at(method);
  const auto uda = rows.find({direction, cls});
  const auto ub = ix.bounds.find({bound, cls});
  if (uda == rows.end() || ub == ix.bounds.end()) return std::nullopt;
  const auto u = value(uda->second, use_f1);
  const auto b = value(ub->second, use_f1);
  if (!u || !b) return std::nullopt;
  return perf_drop(*u, *b);
}

}  // namespace

void write_metrics_csv(const MetricsTable& table, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << kMetricsHeader << '\n';
  for (const auto& r : table) {
    out << r.method << ',' << r.direction << ',' << r.class_name << ',' << fmt(r.dice) << ',' << fmt(r.f1) << '\n';
  }
}

MetricsTable read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ReportError("cannot read metrics file '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader) {
    throw ReportError("'" + path.string() + "' does not start with the header " + kMetricsHeader);
  }
  MetricsTable table;
  int n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != 5) throw ReportError(path.string() + ":" + std::to_string(n) + ": expected 5 columns");
    table.push_back({cells[0], cells[1], cells[2], parse_cell(cells[3], path, n), parse_cell(cells[4], path, n)});
  }
  return table;
}

std::vector<std::string> report_methods(const MetricsTable& table) {
  std::vector<std::string> methods;
  for (const auto& row : table) {
    if (is_bound(row.direction)) continue;
    if (std::find(methods.begin(), methods.end(), row.method) == methods.end()) methods.push_back(row.method);
  }
  return methods;
}

std::vector<DropRow> compute_drops(const MetricsTable& table, bool use_f1) {
  const auto ix = index_rows(table);
  std::vector<DropRow> rows;
  for (const auto& method : report_methods(table)) {
    for (const auto& cls : ix.classes) {
      DropRow r{method, cls, drop_for(ix, method, kForward, cls, use_f1), drop_for(ix, method, kBackward, cls, use_f1),
                std::nullopt, std::nullopt};
      if (r.forward_drop && r.backward_drop) {
        r.avg_drop = avg_perf_drop(*r.forward_drop, *r.backward_drop);
        r.gap = std::abs(*r.forward_drop - *r.backward_drop);
      }
      rows.push_back(std::move(r));
    }
  }
  return rows;
}

namespace {

void write_table_csv(const MetricsTable& table, const Indexed& ix, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "method,direction,metric";
  for (const auto& c : ix.classes) out << ',' << c;
  out << '\n';
  for (const char* bound : {kSourceBound, kTargetBound}) {
    for (const bool f1 : {false, true}) {
      out << bound << ',' << bound << ',' << (f1 ? "f1" : "dice");
      for (const auto& c : ix.classes) {
        const auto it = ix.bounds.find({bound, c});
        out << ',' << fmt(it == ix.bounds.end() ? std::nullopt : value(it->second, f1));
      }
      out << '\n';
    }
  }
  for (const auto& method : report_methods(table)) {
    for (const char* direction : {kForward, kBackward, "average"}) {
      for (const bool f1 : {false, true}) {
        out << method << ',' << direction << ',' << (f1 ? "f1_drop" : "dice_drop");
        for (const auto& c : ix.classes) {
          std::optional<double> v;
          if (std::string_view(direction) == "average") {
            const auto f = drop_for(ix, method, kForward, c, f1);
            const auto b = drop_for(ix, method, kBackward, c, f1);
            if (f && b) v = avg_perf_drop(*f, *b);
          } else {
            v = drop_for(ix, method, direction, c, f1);
          }
          out << ',' << fmt(v);
        }
        out << '\n';
      }
    }
  }
}

void write_drop_csv(const std::vector<DropRow>& rows, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << kDropHeader << '\n';
  for (const auto& r : rows) {
    out << r.method << ',' << r.class_name << ',' << fmt(r.forward_drop) << ',' << fmt(r.backward_drop) << ','
        << fmt(r.avg_drop) << ',' << fmt(r.gap) << '\n';
  }
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

void write_chart_svg(const std::vector<DropRow>& rows, const std::filesystem::path& path) {
  std::vector<const DropRow*> means;
  for (const auto& r : rows) {
    if (r.class_name == kMeanClass) means.push_back(&r);
  }
  double lo = 0.0, hi = 1.0;
  for (const auto* r : means) {
    for (const auto& v : {r->forward_drop, r->backward_drop}) {
      if (v) {
        lo = std::min(lo, *v);
        hi = std::max(hi, *v);
      }
    }
  }
  hi = std::ceil(hi / 10.0) * 10.0;
  lo = std::floor(lo / 10.0) * 10.0;

  const double left = 60, top = 40, plot_h = 260, group_w = 110, bar_w = 36;
  const double width = left + group_w * static_cast<double>(std::max<std::size_t>(means.size(), 1)) + 30;
  const double height = top + plot_h + 70;
  const auto y_of = [&](double v) { return top + plot_h * (hi - v) / (hi - lo); };

  auto out = open_out(path);
  out << std::fixed << std::setprecision(2);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << left << "\" y=\"20\" font-size=\"14\">Mean Dice drop by adaptation direction</text>\n";
  for (double t = lo; t <= hi + 1e-9; t += 10.0) {
    out << "<line x1=\"" << left << "\" x2=\"" << width - 20 << "\" y1=\"" << y_of(t) << "\" y2=\"" << y_of(t)
        << "\" stroke=\"#dddddd\"/>\n";
    out << "<text x=\"" << left - 6 << "\" y=\"" << y_of(t) + 4 << "\" text-anchor=\"end\">" << t << "</text>\n";
  }
  out << "<line x1=\"" << left << "\" x2=\"" << width - 20 << "\" y1=\"" << y_of(0) << "\" y2=\"" << y_of(0)
      << "\" stroke=\"black\"/>\n";
  for (std::size_t i = 0; i < means.size(); ++i) {
    const double x0 = left + group_w * static_cast<double>(i) + (group_w - 2 * bar_w) / 2;
    const std::pair<std::optional<double>, const char*> bars[] = {{means[i]->forward_drop, "#f2c14e"},
                                                                  {means[i]->backward_drop, "#d1495b"}};
    for (int b = 0; b < 2; ++b) {
      if (!bars[b].first) continue;
      const double v = *bars[b].first;
      const double y = std::min(y_of(v), y_of(0));
      out << "<rect x=\"" << x0 + b * bar_w << "\" y=\"" << y << "\" width=\"" << bar_w - 2 << "\" height=\""
          << std::abs(y_of(v) - y_of(0)) << "\" fill=\"" << bars[b].second << "\"><title>" << v << "</title></rect>\n";
    }
    out << "<text x=\"" << x0 + bar_w << "\" y=\"" << top + plot_h + 20 << "\" text-anchor=\"middle\">"
        << xml_escape(means[i]->method) << "</text>\n";
  }
  const double ly = top + plot_h + 45;
  out << "<rect x=\"" << left << "\" y=\"" << ly - 10 << "\" width=\"12\" height=\"12\" fill=\"#f2c14e\"/>"
      << "<text x=\"" << left + 18 << "\" y=\"" << ly << "\">forward</text>\n";
  out << "<rect x=\"" << left + 100 << "\" y=\"" << ly - 10 << "\" width=\"12\" height=\"12\" fill=\"#d1495b\"/>"
      << "<text x=\"" << left + 118 << "\" y=\"" << ly << "\">backward</text>\n";
  out << "</svg>\n";
}

}  // namespace

ReportFiles write_report(const MetricsTable& table, const std::filesystem::path& out_dir) {
  const auto ix = index_rows(table);
  const auto drops = compute_drops(table);
  std::filesystem::create_directories(out_dir);
  ReportFiles files{out_dir / "table.csv", out_dir / "drops.csv", out_dir / "drops.svg"};
  write_table_csv(table, ix, files.table_csv);
  write_drop_csv(drops, files.drop_csv);
  write_chart_svg(drops, files.chart_svg);
  return files;
}

}  // namespace biuda
