#include "peslab/harness/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>

#include "json.hpp"
#include "peslab/harness/csv.hpp"
#include "peslab/harness/svg.hpp"

namespace pes::harness {

namespace {

struct Accum {
  std::string mode;
  std::size_t failed = 0;
  std::vector<double> accuracy, precision, recall;
};

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

std::optional<double> parse_double(const std::string& text) {
  double v = 0.0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) return std::nullopt;
  return v;
}

void render_sweep_chart(const std::filesystem::path& csv_path) {
  const CsvTable table = read_csv(csv_path);
  const std::size_t vcol = table.column("value");
  const std::size_t mcol = table.column("mean_test_accuracy");
  SvgSeries series;
  series.label = "mean accuracy";
  for (const auto& row : table.rows) {
    const auto x = parse_double(row[vcol]);
    const auto y = parse_double(row[mcol]);
    if (x && y) {
      series.x.push_back(*x);
      series.y.push_back(*y);
    }
  }
  if (series.x.size() < 2) return;  // nothing to draw for non-numeric sweeps
  SvgChart chart;
  chart.title = csv_path.stem().string();
  chart.x_label = "swept value";
  chart.y_label = "test accuracy";
  chart.series.push_back(std::move(series));
  write_line_chart(chart, csv_path.parent_path() / (csv_path.stem().string() + ".svg"));
}

void render_sensitivity_chart(const std::filesystem::path& csv_path) {
  const CsvTable table = read_csv(csv_path);
  const std::size_t lcol = table.column("layer");
  const std::size_t ecol = table.column("epochs_noisy");
  const std::size_t mcol = table.column("mean");
  const std::size_t pcol = table.column("is_peak");
  std::map<std::string, SvgSeries> by_layer;
  for (const auto& row : table.rows) {
    SvgSeries& series = by_layer[row[lcol]];
    series.label = "layer " + row[lcol];
    const auto x = parse_double(row[ecol]);
    const auto y = parse_double(row[mcol]);
    if (!x || !y) continue;
    series.x.push_back(*x);
    series.y.push_back(*y);
    if (row[pcol] == "1") series.marker_x = *x;
  }
  if (by_layer.empty()) return;
  SvgChart chart;
  chart.title = "layer-wise noise sensitivity";
  chart.x_label = "noisy-training epochs";
  chart.y_label = "test accuracy";
  for (auto& [_, series] : by_layer) chart.series.push_back(std::move(series));
  write_line_chart(chart, csv_path.parent_path() / "sensitivity_curves.svg");
}

}  // namespace

std::vector<ReportCondition> report(const std::filesystem::path& results_dir,
                                    bool svg) {
  namespace fs = std::filesystem;
  if (!fs::exists(results_dir)) {
    throw std::runtime_error("results directory not found: " + results_dir.string());
  }

  std::vector<fs::path> run_files;
  std::vector<fs::path> sweep_files;
  std::vector<fs::path> sensitivity_files;
  for (const auto& entry : fs::recursive_directory_iterator(results_dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (name.rfind("run_seed_", 0) == 0 && entry.path().extension() == ".json") {
      run_files.push_back(entry.path());
    } else if (name.rfind("sweep_", 0) == 0 && entry.path().extension() == ".csv") {
      sweep_files.push_back(entry.path());
    } else if (name == "sensitivity_aggregate.csv") {
      sensitivity_files.push_back(entry.path());
    }
  }
  if (run_files.empty() && sweep_files.empty() && sensitivity_files.empty()) {
    throw std::runtime_error("no results found under " + results_dir.string());
  }
  std::sort(run_files.begin(), run_files.end());
  std::sort(sweep_files.begin(), sweep_files.end());
  std::sort(sensitivity_files.begin(), sensitivity_files.end());

  std::map<std::string, Accum> groups;
  for (const fs::path& path : run_files) {
    std::ifstream in(path);
    nlohmann::json doc;
    in >> doc;
    const std::string cond =
        fs::relative(path.parent_path(), results_dir).generic_string();
    Accum& acc = groups[cond.empty() ? "." : cond];
    acc.mode = doc.value("mode", "");
    if (!doc.value("ok", false)) {
      acc.failed += 1;
      continue;
    }
    acc.accuracy.push_back(doc.at("test_accuracy").get<double>());
    if (!doc.at("label_precision").is_null()) {
      acc.precision.push_back(doc.at("label_precision").get<double>());
    }
    if (!doc.at("label_recall").is_null()) {
      acc.recall.push_back(doc.at("label_recall").get<double>());
    }
  }

  std::vector<ReportCondition> conditions;
  for (const auto& [name, acc] : groups) {
    ReportCondition c;
    c.name = name;
    c.mode = acc.mode;
    c.seed_count = acc.accuracy.size() + acc.failed;
    c.failed = acc.failed;
    c.mean_accuracy = mean_of(acc.accuracy);
    c.std_accuracy = sample_std(acc.accuracy);
    c.mean_precision = mean_of(acc.precision);
    c.std_precision = sample_std(acc.precision);
    c.mean_recall = mean_of(acc.recall);
    c.std_recall = sample_std(acc.recall);
    conditions.push_back(std::move(c));
  }

  if (!conditions.empty()) {
    CsvWriter csv(results_dir / "summary.csv",
                  {"condition", "mode", "seeds", "failed", "mean_test_accuracy",
                   "std_test_accuracy", "mean_label_precision", "std_label_precision",
                   "mean_label_recall", "std_label_recall"});
    std::ofstream md(results_dir / "summary.md");
    md << "# Run summary\n\n";
    md << "| condition | mode | seeds | test accuracy | label precision | label recall |\n";
    md << "|---|---|---|---|---|---|\n";
    for (const ReportCondition& c : conditions) {
      csv.row({c.name, c.mode, std::to_string(c.seed_count), std::to_string(c.failed),
               csv_num(c.mean_accuracy), csv_num(c.std_accuracy),
               csv_num(c.mean_precision), csv_num(c.std_precision),
               csv_num(c.mean_recall), csv_num(c.std_recall)});
      md << "| " << c.name << " | " << c.mode << " | " << c.seed_count << " | "
         << pct(c.mean_accuracy) << " ± " << pct(c.std_accuracy) << " | "
         << pct(c.mean_precision) << " ± " << pct(c.std_precision) << " | "
         << pct(c.mean_recall) << " ± " << pct(c.std_recall) << " |\n";
    }
  }

  if (svg) {
    for (const fs::path& path : sweep_files) render_sweep_chart(path);
    for (const fs::path& path : sensitivity_files) render_sensitivity_chart(path);
  }
  return conditions;
}

}  // namespace pes::harness
