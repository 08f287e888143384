#include "waverobe/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace waverobe {
namespace {

const char* color(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::cl:
      return "#c0392b";
    case EstimatorKind::cr:
      return "#27ae60";
    case EstimatorKind::mad:
      return "#2c6fbb";
  }
  return "#000000";
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", std::abs(v) < 1e-12 ? 0.0 : v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '&':
        out += "&amp;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

std::vector<double> nice_ticks(double lo, double hi) {
  const double span = hi - lo;
  if (!(span > 0.0)) return {lo};
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    step = m * mag;
    if (step >= raw) break;
  }
  std::vector<double> out;
  for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * span; t += step) out.push_back(t);
  return out;
}

// Maps data coordinates into a rectangle of an SVG document.
class Panel {
 public:
  Panel(double x0, double y0, double w, double h, double xlo, double xhi, double ylo, double yhi)
      : x0_(x0), y0_(y0), w_(w), h_(h), xlo_(xlo), xhi_(xhi), ylo_(ylo), yhi_(yhi) {
    if (!(xhi_ > xlo_)) xhi_ = xlo_ + 1.0;
    if (!(yhi_ > ylo_)) yhi_ = ylo_ + 1.0;
  }
  double x(double v) const { return x0_ + (v - xlo_) / (xhi_ - xlo_) * w_; }
  double y(double v) const { return y0_ + h_ - (v - ylo_) / (yhi_ - ylo_) * h_; }

  void axes(std::ostringstream& out, const std::string& xlabel, const std::string& ylabel,
            bool integer_x) const {
    out << "<rect x='" << num(x0_) << "' y='" << num(y0_) << "' width='" << num(w_) << "' height='"
        << num(h_) << "' fill='none' stroke='#333'/>\n";
    std::vector<double> xt;
    if (integer_x) {
      for (double t = std::ceil(xlo_); t <= xhi_; t += 1.0) xt.push_back(t);
    } else {
      xt = nice_ticks(xlo_, xhi_);
    }
    for (double t : xt) {
      out << "<line x1='" << num(x(t)) << "' y1='" << num(y0_ + h_) << "' x2='" << num(x(t))
          << "' y2='" << num(y0_ + h_ + 5) << "' stroke='#333'/>"
          << "<text x='" << num(x(t)) << "' y='" << num(y0_ + h_ + 18)
          << "' font-size='11' text-anchor='middle'>" << label(t) << "</text>\n";
    }
    for (double t : nice_ticks(ylo_, yhi_)) {
      out << "<line x1='" << num(x0_ - 5) << "' y1='" << num(y(t)) << "' x2='" << num(x0_)
          << "' y2='" << num(y(t)) << "' stroke='#333'/>"
          << "<text x='" << num(x0_ - 8) << "' y='" << num(y(t) + 4)
          << "' font-size='11' text-anchor='end'>" << label(t) << "</text>\n";
    }
    out << "<text x='" << num(x0_ + w_ / 2) << "' y='" << num(y0_ + h_ + 36)
        << "' font-size='12' text-anchor='middle'>" << escape(xlabel) << "</text>\n";
    out << "<text transform='translate(" << num(x0_ - 42) << "," << num(y0_ + h_ / 2)
        << ") rotate(-90)' font-size='12' text-anchor='middle'>" << escape(ylabel) << "</text>\n";
  }

 private:
  double x0_, y0_, w_, h_, xlo_, xhi_, ylo_, yhi_;
};

std::string open_svg(double width, double height, const std::string& title) {
  std::ostringstream out;
  out << "<?xml version='1.0' encoding='UTF-8'?>\n"
      << "<svg xmlns='http://www.w3.org/2000/svg' width='" << num(width) << "' height='"
      << num(height) << "' viewBox='0 0 " << num(width) << ' ' << num(height)
      << "' font-family='sans-serif'>\n"
      << "<rect width='100%' height='100%' fill='white'/>\n"
      << "<text x='" << num(width / 2) << "' y='20' font-size='14' text-anchor='middle'>"
      << escape(title) << "</text>\n";
  return out.str();
}

void legend(std::ostringstream& out, double x, double y, const std::vector<EstimatorKind>& kinds) {
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    const double yy = y + 16.0 * static_cast<double>(i);
    out << "<line x1='" << num(x) << "' y1='" << num(yy) << "' x2='" << num(x + 18) << "' y2='"
        << num(yy) << "' stroke='" << color(kinds[i]) << "' stroke-width='2'/>"
        << "<text x='" << num(x + 24) << "' y='" << num(yy + 4) << "' font-size='11'>"
        << to_string(kinds[i]) << "</text>\n";
  }
}

template <class T>
std::vector<EstimatorKind> kinds_of(const std::vector<T>& items) {
  std::vector<EstimatorKind> out;
  for (EstimatorKind k : kAllKinds) {
    if (std::any_of(items.begin(), items.end(), [&](const T& t) { return t.kind == k; })) {
      out.push_back(k);
    }
  }
  return out;
}

}  // namespace

std::string scale_diagram_svg(const std::vector<ScalePoint>& points, const std::string& title) {
  double jlo = std::numeric_limits<double>::infinity(), jhi = -jlo;
  double vlo = jlo, vhi = -jlo;
  for (const auto& p : points) {
    jlo = std::min(jlo, double(p.j));
    jhi = std::max(jhi, double(p.j));
    vlo = std::min(vlo, p.log2_value);
    vhi = std::max(vhi, p.log2_value);
  }
  if (points.empty()) jlo = jhi = vlo = vhi = 0.0;
  const double pad = 0.08 * std::max(vhi - vlo, 1e-6);
  const Panel panel(70, 40, 480, 300, jlo - 0.5, jhi + 0.5, vlo - pad, vhi + pad);
  std::ostringstream out;
  out << open_svg(640, 400, title);
  panel.axes(out, "scale j", "log2 sigma^2_j", true);
  const auto kinds = kinds_of(points);
  for (EstimatorKind k : kinds) {
    std::vector<ScalePoint> series;
    for (const auto& p : points) {
      if (p.kind == k) series.push_back(p);
    }
    std::sort(series.begin(), series.end(), [](auto& a, auto& b) { return a.j < b.j; });
    out << "<polyline fill='none' stroke='" << color(k) << "' stroke-width='1.5' points='";
    for (const auto& p : series) out << num(panel.x(p.j)) << ',' << num(panel.y(p.log2_value)) << ' ';
    out << "'/>\n";
    for (const auto& p : series) {
      out << "<circle cx='" << num(panel.x(p.j)) << "' cy='" << num(panel.y(p.log2_value))
          << "' r='3' fill='" << color(k) << "'/>\n";
    }
  }
  legend(out, 570, 60, kinds);
  out << "</svg>\n";
  return out.str();
}

std::string ci_ladder_svg(const std::vector<LadderRung>& rungs, const std::string& title) {
  double jlo = std::numeric_limits<double>::infinity(), jhi = -jlo;
  double vlo = jlo, vhi = -jlo;
  for (const auto& r : rungs) {
    jlo = std::min(jlo, double(r.j0));
    jhi = std::max(jhi, double(r.j0));
    vlo = std::min({vlo, r.lo, r.d_hat});
    vhi = std::max({vhi, r.hi, r.d_hat});
  }
  if (rungs.empty()) jlo = jhi = vlo = vhi = 0.0;
  const double pad = 0.08 * std::max(vhi - vlo, 1e-6);
  const Panel panel(70, 40, 480, 300, jlo - 0.6, jhi + 0.6, vlo - pad, vhi + pad);
  std::ostringstream out;
  out << open_svg(640, 400, title);
  panel.axes(out, "J0", "d estimate", true);
  const auto kinds = kinds_of(rungs);
  for (const auto& r : rungs) {
    const auto pos = std::find(kinds.begin(), kinds.end(), r.kind) - kinds.begin();
    const double offset = 0.18 * (static_cast<double>(pos) - (static_cast<double>(kinds.size()) - 1) / 2);
    const double x = panel.x(r.j0 + offset);
    out << "<line x1='" << num(x) << "' y1='" << num(panel.y(r.lo)) << "' x2='" << num(x)
        << "' y2='" << num(panel.y(r.hi)) << "' stroke='" << color(r.kind) << "' stroke-width='2'/>"
        << "<circle cx='" << num(x) << "' cy='" << num(panel.y(r.d_hat)) << "' r='3' fill='"
        << color(r.kind) << "'/>\n";
  }
  legend(out, 570, 60, kinds);
  out << "</svg>\n";
  return out.str();
}

std::string density_svg(const std::vector<Density>& densities, const std::string& title) {
  const bool dirty = std::any_of(densities.begin(), densities.end(),
                                 [](const Density& d) { return d.contaminated; });
  double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo, yhi = 0.0;
  for (const auto& d : densities) {
    if (!d.grid.empty()) {
      xlo = std::min(xlo, d.grid.front());
      xhi = std::max(xhi, d.grid.back());
    }
    for (double v : d.kde) yhi = std::max(yhi, v);
  }
  if (densities.empty()) xlo = xhi = 0.0;
  const int panels = dirty ? 2 : 1;
  const double width = 80.0 + 420.0 * panels + 70.0;
  std::ostringstream out;
  out << open_svg(width, 400, title);
  for (int p = 0; p < panels; ++p) {
    const Panel panel(70 + 420.0 * p, 40, 360, 300, xlo, xhi, 0.0, 1.05 * yhi);
    panel.axes(out, p == 0 ? "standardized error (clean)" : "standardized error (outliers)",
               p == 0 ? "density" : "", false);
    for (const auto& d : densities) {
      if (d.contaminated != (p == 1)) continue;
      out << "<polyline fill='none' stroke='" << color(d.kind) << "' stroke-width='1.5' points='";
      for (std::size_t g = 0; g < d.grid.size(); ++g) {
        out << num(panel.x(d.grid[g])) << ',' << num(panel.y(d.kde[g])) << ' ';
      }
      out << "'/>\n";
    }
  }
  legend(out, width - 60, 60, kinds_of(densities));
  out << "</svg>\n";
  return out.str();
}

}  // namespace waverobe
