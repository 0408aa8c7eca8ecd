#include "fsce/eval/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace fsce {

std::string format_double(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void sort_canonical(std::vector<ResultRow>& rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
    return std::tie(a.experiment, a.model, a.scenario, a.pdp_id, a.snr_db, a.n_support, a.seed) <
           std::tie(b.experiment, b.model, b.scenario, b.pdp_id, b.snr_db, b.n_support, b.seed);
  });
}

void write_results_csv(const std::filesystem::path& path, std::vector<ResultRow> rows) {
  sort_canonical(rows);
  std::ofstream os(path, std::ios::binary);  // LF line endings everywhere
  if (!os) throw std::runtime_error("cannot write results csv " + path.string());
  os << "experiment,model,scenario,pdp_id,snr_db,n_support,seed,mse\n";
  for (const auto& r : rows) {
    os << r.experiment << ',' << r.model << ',' << r.scenario << ',' << r.pdp_id << ','
       << format_double(r.snr_db) << ',' << r.n_support << ',' << r.seed << ','
       << format_double(r.mse) << '\n';
  }
  if (!os) throw std::runtime_error("write failure on " + path.string());
}

std::vector<ResultRow> read_results_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read results csv " + path.string());
  std::string line;
  if (!std::getline(is, line) || line != "experiment,model,scenario,pdp_id,snr_db,n_support,seed,mse")
    throw std::runtime_error("results csv " + path.string() + " has a bad header");
  std::vector<ResultRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    ResultRow r;
    std::string field;
    std::getline(ss, r.experiment, ',');
    std::getline(ss, r.model, ',');
    std::getline(ss, r.scenario, ',');
    std::getline(ss, field, ',');
    r.pdp_id = std::stoi(field);
    std::getline(ss, field, ',');
    r.snr_db = std::stod(field);
    std::getline(ss, field, ',');
    r.n_support = std::stoi(field);
    std::getline(ss, field, ',');
    r.seed = std::stoull(field);
    std::getline(ss, field, ',');
    r.mse = std::stod(field);
    rows.push_back(std::move(r));
  }
  return rows;
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of empty set");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

namespace {

constexpr int kW = 640, kH = 440;
constexpr int kMarginL = 70, kMarginR = 150, kMarginT = 40, kMarginB = 50;

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                         "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

}  // namespace

void write_svg_plot(const std::filesystem::path& path, const std::string& title,
                    const std::string& x_label, const std::string& y_label,
                    const std::vector<SvgSeries>& series, bool log_y) {
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& s : series)
    for (auto [x, y] : s.points) {
      const double yy = log_y ? std::log10(std::max(y, 1e-300)) : y;
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, yy);
      ymax = std::max(ymax, yy);
    }
  if (xmin > xmax) {
    xmin = 0;
    xmax = 1;
    ymin = 0;
    ymax = 1;
  }
  if (xmax - xmin < 1e-12) xmax = xmin + 1;
  if (ymax - ymin < 1e-12) ymax = ymin + 1;

  const double px = (kW - kMarginL - kMarginR) / (xmax - xmin);
  const double py = (kH - kMarginT - kMarginB) / (ymax - ymin);
  auto sx = [&](double x) { return kMarginL + (x - xmin) * px; };
  auto sy = [&](double yy) { return kH - kMarginB - (yy - ymin) * py; };

  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write svg " + path.string());
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
     << "\" viewBox=\"0 0 " << kW << ' ' << kH << "\">\n";
  os << "<rect width=\"" << kW << "\" height=\"" << kH << "\" fill=\"white\"/>\n";
  os << "<text x=\"" << kW / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
     << title << "</text>\n";
  os << "<line x1=\"" << kMarginL << "\" y1=\"" << kH - kMarginB << "\" x2=\"" << kW - kMarginR
     << "\" y2=\"" << kH - kMarginB << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << kMarginL << "\" y1=\"" << kMarginT << "\" x2=\"" << kMarginL
     << "\" y2=\"" << kH - kMarginB << "\" stroke=\"black\"/>\n";
  os << "<text x=\"" << (kMarginL + kW - kMarginR) / 2 << "\" y=\"" << kH - 12
     << "\" text-anchor=\"middle\" font-size=\"12\">" << x_label << "</text>\n";
  os << "<text x=\"16\" y=\"" << (kMarginT + kH - kMarginB) / 2
     << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 "
     << (kMarginT + kH - kMarginB) / 2 << ")\">" << y_label << "</text>\n";

  // axis ticks: 5 even x ticks, y decades when log
  for (int i = 0; i <= 4; ++i) {
    const double x = xmin + (xmax - xmin) * i / 4.0;
    os << "<text x=\"" << format_double(sx(x)) << "\" y=\"" << kH - kMarginB + 18
       << "\" text-anchor=\"middle\" font-size=\"11\">" << format_double(x) << "</text>\n";
  }
  if (log_y) {
    for (int d = static_cast<int>(std::floor(ymin)); d <= static_cast<int>(std::ceil(ymax)); ++d) {
      if (d < ymin - 1e-9 || d > ymax + 1e-9) continue;
      os << "<line x1=\"" << kMarginL << "\" y1=\"" << format_double(sy(d)) << "\" x2=\""
         << kW - kMarginR << "\" y2=\"" << format_double(sy(d))
         << "\" stroke=\"#dddddd\"/>\n";
      os << "<text x=\"" << kMarginL - 8 << "\" y=\"" << format_double(sy(d) + 4)
         << "\" text-anchor=\"end\" font-size=\"11\">1e" << d << "</text>\n";
    }
  } else {
    for (int i = 0; i <= 4; ++i) {
      const double yy = ymin + (ymax - ymin) * i / 4.0;
      os << "<text x=\"" << kMarginL - 8 << "\" y=\"" << format_double(sy(yy) + 4)
         << "\" text-anchor=\"end\" font-size=\"11\">" << format_double(yy) << "</text>\n";
    }
  }

  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = kColors[si % (sizeof kColors / sizeof kColors[0])];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.6\" points=\"";
    for (auto [x, y] : s.points) {
      const double yy = log_y ? std::log10(std::max(y, 1e-300)) : y;
      os << format_double(sx(x)) << ',' << format_double(sy(yy)) << ' ';
    }
    os << "\"/>\n";
    for (auto [x, y] : s.points) {
      const double yy = log_y ? std::log10(std::max(y, 1e-300)) : y;
      os << "<circle cx=\"" << format_double(sx(x)) << "\" cy=\"" << format_double(sy(yy))
         << "\" r=\"2.5\" fill=\"" << color << "\"/>\n";
    }
    const double ly = kMarginT + 16.0 * static_cast<double>(si);
    os << "<rect x=\"" << kW - kMarginR + 10 << "\" y=\"" << format_double(ly)
       << "\" width=\"12\" height=\"3\" fill=\"" << color << "\"/>\n";
    os << "<text x=\"" << kW - kMarginR + 28 << "\" y=\"" << format_double(ly + 6)
       << "\" font-size=\"11\">" << s.label << "</text>\n";
  }
  os << "</svg>\n";
}

}  // namespace fsce
