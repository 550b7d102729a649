#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include "pipeline_tables.hpp"
#include "xlgen/error.hpp"
#include "xlgen/pipeline.hpp"

namespace xlgen {

namespace fs = std::filesystem;

namespace detail {

namespace {

struct Column {
  std::string key;  // task.lang
  std::string metric;
};

std::optional<double> metric_value(const eval::EvalReport& r, const std::string& metric) {
  if (metric == "bleu4") return r.bleu4;
  if (metric == "rouge1") return r.rouge1;
  if (metric == "rouge2") return r.rouge2;
  if (metric == "rougeL") return r.rougeL;
  if (metric == "embed_f") return r.embed_f;
  if (metric == "fidelity") return r.language_fidelity;
  return std::nullopt;
}

const std::vector<std::string>& metric_names() {
  static const std::vector<std::string> names{"bleu4", "rouge1", "rouge2", "rougeL", "embed_f", "fidelity"};
  return names;
}

std::string format(double v, const char* fmt) {
  char buf[32];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

}  // namespace

std::pair<std::string, std::size_t> split_system_name(const std::string& name) {
  const auto pos = name.rfind("+fs");
  if (pos == std::string::npos || pos + 3 >= name.size()) return {name, 0};
  const std::string digits = name.substr(pos + 3);
  if (!std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; })) return {name, 0};
  return {name.substr(0, pos), std::stoull(digits)};
}

Tables render_tables(const std::vector<std::pair<std::string, std::vector<eval::EvalReport>>>& rows) {
  std::vector<Column> columns;
  std::vector<std::string> keys;
  for (const auto& [_, reports] : rows) {
    for (const auto& r : reports) {
      const std::string key = r.task + "." + r.lang;
      if (std::find(keys.begin(), keys.end(), key) == keys.end()) keys.push_back(key);
    }
  }
  for (const auto& key : keys) {
    for (const auto& metric : metric_names()) {
      const bool present = std::any_of(rows.begin(), rows.end(), [&](const auto& row) {
        return std::any_of(row.second.begin(), row.second.end(), [&](const eval::EvalReport& r) {
          return r.task + "." + r.lang == key && metric_value(r, metric).has_value();
        });
      });
      if (present) columns.push_back({key, metric});
    }
  }

  std::vector<std::vector<std::string>> cells;  // text cells, header first
  std::vector<std::string> tsv_lines;
  std::vector<std::string> header{"system"};
  for (const auto& c : columns) header.push_back(c.key + ":" + c.metric);
  cells.push_back(header);
  {
    std::string line;
    for (std::size_t i = 0; i < header.size(); ++i) line += (i ? "\t" : "") + header[i];
    tsv_lines.push_back(line);
  }
  for (const auto& [name, reports] : rows) {
    std::vector<std::string> text_row{name};
    std::string tsv = name;
    for (const auto& c : columns) {
      std::optional<double> v;
      for (const auto& r : reports) {
        if (r.task + "." + r.lang == c.key) v = metric_value(r, c.metric);
      }
      const bool fraction = c.metric == "fidelity";
      text_row.push_back(v ? format(*v, fraction ? "%.3f" : "%.2f") : "-");
      tsv += "\t" + (v ? format(*v, "%.4f") : std::string());
    }
    cells.push_back(text_row);
    tsv_lines.push_back(tsv);
  }

  std::vector<std::size_t> widths(header.size(), 0);
  for (const auto& row : cells) {
    for (std::size_t i = 0; i < row.size(); ++i) widths[i] = std::max(widths[i], row[i].size());
  }
  Tables out;
  for (std::size_t r = 0; r < cells.size(); ++r) {
    std::string line;
    for (std::size_t i = 0; i < cells[r].size(); ++i) {
      const auto& cell = cells[r][i];
      const std::string pad(widths[i] - cell.size(), ' ');
      if (i == 0) {
        line += cell + pad;
      } else {
        line += "  " + pad + cell;
      }
    }
    out.text += line + "\n";
    if (r == 0) {
      std::size_t total = 0;
      for (std::size_t i = 0; i < widths.size(); ++i) total += widths[i] + (i ? 2 : 0);
      out.text += std::string(total, '-') + "\n";
    }
  }
  for (const auto& l : tsv_lines) out.tsv += l + "\n";
  return out;
}

}  // namespace detail

namespace {

struct Series {
  std::string label;
  std::vector<std::pair<double, double>> points;  // ascending x
};

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string render_curve(const std::string& title, const std::string& metric, const std::vector<Series>& series) {
  constexpr double W = 600, H = 360, left = 64, right = 180, top = 40, bottom = 56;
  const double pw = W - left - right, ph = H - top - bottom;
  std::vector<double> xs;
  double ylo = 1e300, yhi = -1e300;
  for (const auto& s : series) {
    for (const auto& [x, y] : s.points) {
      xs.push_back(x);
      ylo = std::min(ylo, y);
      yhi = std::max(yhi, y);
    }
  }
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  const double xmax = std::max(1.0, xs.back());
  if (metric == "fidelity") {
    ylo = 0.0;
    yhi = 1.0;
  } else {
    ylo = std::max(0.0, std::floor(ylo / 10.0) * 10.0);
    yhi = std::min(100.0, std::ceil(yhi / 10.0) * 10.0);
    if (yhi <= ylo) yhi = ylo + 10.0;
  }
  const auto px = [&](double x) { return left + pw * x / xmax; };
  const auto py = [&](double y) { return top + ph * (1.0 - (y - ylo) / (yhi - ylo)); };
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"};

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << num(left + pw / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
    << xml_escape(title) << "</text>\n";
  o << "<line x1=\"" << left << "\" y1=\"" << num(top + ph) << "\" x2=\"" << num(left + pw) << "\" y2=\""
    << num(top + ph) << "\" stroke=\"black\"/>\n";
  o << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << num(top + ph)
    << "\" stroke=\"black\"/>\n";
  for (double x : xs) {
    o << "<line x1=\"" << num(px(x)) << "\" y1=\"" << num(top + ph) << "\" x2=\"" << num(px(x)) << "\" y2=\""
      << num(top + ph + 5) << "\" stroke=\"black\"/>\n";
    o << "<text x=\"" << num(px(x)) << "\" y=\"" << num(top + ph + 18) << "\" text-anchor=\"middle\">"
      << static_cast<long long>(x) << "</text>\n";
  }
  for (int i = 0; i <= 5; ++i) {
    const double y = ylo + (yhi - ylo) * i / 5.0;
    o << "<line x1=\"" << num(left - 5) << "\" y1=\"" << num(py(y)) << "\" x2=\"" << num(left + pw) << "\" y2=\""
      << num(py(y)) << "\" stroke=\"#dddddd\"/>\n";
    o << "<text x=\"" << num(left - 8) << "\" y=\"" << num(py(y) + 4) << "\" text-anchor=\"end\">"
      << (metric == "fidelity" ? num(y) : std::to_string(static_cast<int>(std::lround(y)))) << "</text>\n";
  }
  o << "<text x=\"" << num(left + pw / 2) << "\" y=\"" << num(H - 12)
    << "\" text-anchor=\"middle\">few-shot examples</text>\n";
  o << "<text transform=\"translate(16," << num(top + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
    << xml_escape(metric) << "</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = palette[s % std::size(palette)];
    std::string pts;
    for (const auto& [x, y] : series[s].points) pts += (pts.empty() ? "" : " ") + num(px(x)) + "," + num(py(y));
    o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"" << pts << "\"/>\n";
    for (const auto& [x, y] : series[s].points) {
      o << "<circle cx=\"" << num(px(x)) << "\" cy=\"" << num(py(y)) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }
    const double ly = top + 14 + 18.0 * static_cast<double>(s);
    o << "<line x1=\"" << num(left + pw + 16) << "\" y1=\"" << num(ly - 4) << "\" x2=\"" << num(left + pw + 36)
      << "\" y2=\"" << num(ly - 4) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    o << "<text x=\"" << num(left + pw + 42) << "\" y=\"" << num(ly) << "\">" << xml_escape(series[s].label)
      << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

void write_file(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw DataError("cannot write " + path.string());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

bool system_order(const std::string& a, const std::string& b) {
  return detail::split_system_name(a) < detail::split_system_name(b);
}

}  // namespace

ReportFiles cmd_report(const std::vector<fs::path>& run_dirs, const fs::path& out_dir) {
  if (run_dirs.empty()) throw ConfigError("report: no run directories given");
  std::vector<std::pair<std::string, std::vector<eval::EvalReport>>> rows;
  for (const auto& run : run_dirs) {
    const fs::path reports = run / "reports";
    if (!fs::is_directory(reports)) continue;
    std::vector<std::string> systems;
    for (const auto& entry : fs::directory_iterator(reports)) {
      if (entry.is_directory()) systems.push_back(entry.path().filename().string());
    }
    std::sort(systems.begin(), systems.end(), system_order);
    for (const auto& system : systems) {
      std::vector<fs::path> files;
      for (const auto& entry : fs::directory_iterator(reports / system)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
      }
      std::sort(files.begin(), files.end());
      std::vector<eval::EvalReport> parsed;
      for (const auto& f : files) {
        try {
          parsed.push_back(eval::EvalReport::from_json(read_file(f)));
        } catch (const std::exception& e) {
          throw DataError("report: cannot parse " + f.string() + ": " + e.what());
        }
      }
      if (parsed.empty()) continue;
      const std::string prefix = run_dirs.size() > 1 ? run.filename().string() + "/" : "";
      rows.emplace_back(prefix + system, std::move(parsed));
    }
  }
  if (rows.empty()) throw DataError("report: no EvalReports found under the given run directories");

  ReportFiles files;
  const auto tables = detail::render_tables(rows);
  files.table_txt = out_dir / "report.txt";
  files.table_tsv = out_dir / "report.tsv";
  write_file(files.table_txt, tables.text);
  write_file(files.table_tsv, tables.tsv);

  // (run prefix + base system, task.lang) -> n -> report
  std::map<std::pair<std::string, std::string>, std::map<std::size_t, const eval::EvalReport*>> sweeps;
  for (const auto& [name, reports] : rows) {
    const auto slash = name.rfind('/');
    const std::string prefix = slash == std::string::npos ? "" : name.substr(0, slash + 1);
    const auto [base, n] = detail::split_system_name(name.substr(prefix.size()));
    for (const auto& r : reports) sweeps[{prefix + base, r.task + "." + r.lang}][n] = &r;
  }
  std::map<std::pair<std::string, std::string>, std::vector<Series>> curves;  // (task.lang, metric)
  for (const auto& [key, points] : sweeps) {
    if (points.size() < 2) continue;
    for (const auto& metric : {"bleu4", "rouge1", "rouge2", "rougeL", "embed_f", "fidelity"}) {
      Series s{key.first, {}};
      for (const auto& [n, report] : points) {
        std::optional<double> v;
        if (std::string(metric) == "bleu4") v = report->bleu4;
        if (std::string(metric) == "rouge1") v = report->rouge1;
        if (std::string(metric) == "rouge2") v = report->rouge2;
        if (std::string(metric) == "rougeL") v = report->rougeL;
        if (std::string(metric) == "embed_f") v = report->embed_f;
        if (std::string(metric) == "fidelity") v = report->language_fidelity;
        if (v) s.points.emplace_back(static_cast<double>(n), *v);
      }
      if (s.points.size() >= 2) curves[{key.second, metric}].push_back(std::move(s));
    }
  }
  for (const auto& [key, series] : curves) {
    const fs::path path = out_dir / ("curve_" + key.first + "_" + key.second + ".svg");
    write_file(path, render_curve(key.first + " " + key.second, key.second, series));
    files.curves.push_back(path);
  }
  return files;
}

}  // namespace xlgen
