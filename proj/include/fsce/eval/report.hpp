#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace fsce {

struct ResultRow {
  std::string experiment;
  std::string model;
  std::string scenario;
  int pdp_id = 0;
  double snr_db = 0.0;
  int n_support = 0;
  std::uint64_t seed = 0;
  double mse = 0.0;
};

// Canonical order: experiment, model, scenario, pdp_id, snr_db, n_support,
// seed.  Evaluation points may be computed in parallel; rows are sorted
// before writing so the output is order-deterministic.
void sort_canonical(std::vector<ResultRow>& rows);

void write_results_csv(const std::filesystem::path& path, std::vector<ResultRow> rows);
std::vector<ResultRow> read_results_csv(const std::filesystem::path& path);

double median(std::vector<double> values);

struct SvgSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;  // sorted by x
};

// Minimal deterministic line plot; y is drawn on a log10 axis when log_y.
void write_svg_plot(const std::filesystem::path& path, const std::string& title,
                    const std::string& x_label, const std::string& y_label,
                    const std::vector<SvgSeries>& series, bool log_y);

std::string format_double(double v);

}  // namespace fsce
