#include "svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "difflab/errors.hpp"

namespace difflab::cli {
namespace {

constexpr double kWidth = 640, kHeight = 480;
constexpr double kMarginL = 70, kMarginR = 20, kMarginT = 40, kMarginB = 50;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

void write_svg_chart(const std::string& path, const std::string& title,
                     const std::string& x_label, const std::string& y_label,
                     const std::vector<Series>& series, bool log_y) {
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const Series& s : series) {
    for (double v : s.x) {
      xmin = std::min(xmin, v);
      xmax = std::max(xmax, v);
    }
    for (double v : s.y) {
      const double t = log_y ? std::log10(std::max(v, 1e-12)) : v;
      ymin = std::min(ymin, t);
      ymax = std::max(ymax, t);
    }
  }
  if (!(xmin <= xmax) || !(ymin <= ymax)) {
    throw ConfigError("plot: nothing to draw for '" + path + "'");
  }
  if (xmax == xmin) xmax = xmin + 1.0;
  if (ymax == ymin) ymax = ymin + 1.0;
  const double pad_x = 0.03 * (xmax - xmin);
  const double pad_y = 0.05 * (ymax - ymin);
  xmin -= pad_x;
  xmax += pad_x;
  ymin -= pad_y;
  ymax += pad_y;

  auto sx = [&](double v) {
    return kMarginL + (v - xmin) / (xmax - xmin) * (kWidth - kMarginL - kMarginR);
  };
  auto sy = [&](double v) {
    const double t = log_y ? std::log10(std::max(v, 1e-12)) : v;
    return kHeight - kMarginB - (t - ymin) / (ymax - ymin) * (kHeight - kMarginT - kMarginB);
  };

  std::ofstream out(path);
  if (!out) throw ConfigError("plot: cannot write '" + path + "'");
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << kWidth << "' height='" << kHeight
      << "' viewBox='0 0 " << kWidth << " " << kHeight << "'>\n";
  out << "<rect width='100%' height='100%' fill='white'/>\n";
  out << "<text x='" << kWidth / 2 << "' y='24' text-anchor='middle' font-size='16'>" << title
      << "</text>\n";

  // Axes.
  out << "<line x1='" << kMarginL << "' y1='" << kHeight - kMarginB << "' x2='"
      << kWidth - kMarginR << "' y2='" << kHeight - kMarginB << "' stroke='black'/>\n";
  out << "<line x1='" << kMarginL << "' y1='" << kMarginT << "' x2='" << kMarginL << "' y2='"
      << kHeight - kMarginB << "' stroke='black'/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double fx = xmin + (xmax - xmin) * i / 5.0;
    const double fy = ymin + (ymax - ymin) * i / 5.0;
    const double px = sx(fx);
    const double py = kHeight - kMarginB - (fy - ymin) / (ymax - ymin) *
                                              (kHeight - kMarginT - kMarginB);
    out << "<line x1='" << px << "' y1='" << kHeight - kMarginB << "' x2='" << px << "' y2='"
        << kHeight - kMarginB + 5 << "' stroke='black'/>\n";
    out << "<text x='" << px << "' y='" << kHeight - kMarginB + 18
        << "' text-anchor='middle' font-size='10'>" << num(fx) << "</text>\n";
    out << "<line x1='" << kMarginL - 5 << "' y1='" << py << "' x2='" << kMarginL << "' y2='"
        << py << "' stroke='black'/>\n";
    out << "<text x='" << kMarginL - 8 << "' y='" << py + 3
        << "' text-anchor='end' font-size='10'>" << num(log_y ? std::pow(10.0, fy) : fy)
        << "</text>\n";
  }
  out << "<text x='" << kWidth / 2 << "' y='" << kHeight - 12
      << "' text-anchor='middle' font-size='12'>" << x_label << "</text>\n";
  out << "<text x='16' y='" << kHeight / 2 << "' text-anchor='middle' font-size='12' "
      << "transform='rotate(-90 16 " << kHeight / 2 << ")'>" << y_label << "</text>\n";

  double legend_y = kMarginT + 4;
  for (const Series& s : series) {
    if (s.line && s.x.size() > 1) {
      out << "<polyline fill='none' stroke='" << s.color << "' stroke-width='1.5' points='";
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        out << sx(s.x[i]) << ',' << sy(s.y[i]) << ' ';
      }
      out << "'/>\n";
    }
    const double r = s.line ? 2.5 : 1.8;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      out << "<circle cx='" << sx(s.x[i]) << "' cy='" << sy(s.y[i]) << "' r='" << r
          << "' fill='" << s.color << "' fill-opacity='" << (s.line ? 1.0 : 0.55) << "'/>\n";
    }
    if (!s.name.empty()) {
      out << "<rect x='" << kWidth - 180 << "' y='" << legend_y - 8
          << "' width='10' height='10' fill='" << s.color << "'/>\n";
      out << "<text x='" << kWidth - 165 << "' y='" << legend_y << "' font-size='11'>" << s.name
          << "</text>\n";
      legend_y += 16;
    }
  }
  out << "</svg>\n";
}

}  // namespace difflab::cli
