#include "lmr/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "lmr/error.hpp"

namespace lmr {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string colour_at(std::size_t i) { return kPalette[i % (sizeof kPalette / sizeof kPalette[0])]; }

std::string escape(const std::string& s) {
  std::string out;
  for (const char c : s) {
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
  std::ostringstream s;
  s << std::fixed << std::setprecision(2) << v;
  return s.str();
}

std::string tick_label(double v) {
  std::ostringstream s;
  s << std::setprecision(4) << (std::abs(v) < 1e-12 ? 0.0 : v);
  return s.str();
}

// Roughly five round ticks covering [lo, hi].
std::vector<double> ticks(double lo, double hi) {
  const double span = hi - lo;
  if (!(span > 0.0)) return {lo};
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (const double m : {1.0, 2.0, 5.0, 10.0}) {
    step = m * mag;
    if (step >= raw) break;
  }
  std::vector<double> out;
  for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * span; t += step) out.push_back(t);
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io_error, "cannot write " + path.string());
  out << text;
}

struct Frame {
  double left = 70, right = 160, top = 40, bottom = 60;
  double width = 800, height = 450;
  double x0, x1, y0, y1;

  double px(double x) const { return left + (x - x0) / (x1 - x0) * (width - left - right); }
  double py(double y) const { return height - bottom - (y - y0) / (y1 - y0) * (height - top - bottom); }
};

void axes(std::ostringstream& s, const Frame& f, const std::string& title, const std::string& x_label,
          const std::string& y_label, bool x_ticks) {
  s << "<rect x=\"0\" y=\"0\" width=\"" << f.width << "\" height=\"" << f.height << "\" fill=\"white\"/>\n";
  s << "<text x=\"" << f.width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(title)
    << "</text>\n";
  const double bx = f.left, by = f.height - f.bottom, tx = f.width - f.right, ty = f.top;
  s << "<path d=\"M" << bx << ' ' << ty << " V" << by << " H" << tx << "\" stroke=\"#000\" fill=\"none\"/>\n";
  for (const double t : ticks(f.y0, f.y1)) {
    const double y = f.py(t);
    s << "<line x1=\"" << bx - 4 << "\" y1=\"" << num(y) << "\" x2=\"" << tx << "\" y2=\"" << num(y)
      << "\" stroke=\"#ddd\"/>\n";
    s << "<text x=\"" << bx - 6 << "\" y=\"" << num(y + 4) << "\" text-anchor=\"end\" font-size=\"11\">"
      << tick_label(t) << "</text>\n";
  }
  if (x_ticks) {
    for (const double t : ticks(f.x0, f.x1)) {
      const double x = f.px(t);
      s << "<line x1=\"" << num(x) << "\" y1=\"" << by << "\" x2=\"" << num(x) << "\" y2=\"" << by + 4
        << "\" stroke=\"#000\"/>\n";
      s << "<text x=\"" << num(x) << "\" y=\"" << by + 17 << "\" text-anchor=\"middle\" font-size=\"11\">"
        << tick_label(t) << "</text>\n";
    }
  }
  s << "<text x=\"" << (bx + tx) / 2 << "\" y=\"" << f.height - 15 << "\" text-anchor=\"middle\" font-size=\"12\">"
    << escape(x_label) << "</text>\n";
  s << "<text x=\"16\" y=\"" << (by + ty) / 2 << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 "
    << (by + ty) / 2 << ")\">" << escape(y_label) << "</text>\n";
}

void legend(std::ostringstream& s, const Frame& f, const std::vector<std::string>& names) {
  for (std::size_t i = 0; i < names.size(); ++i) {
    const double y = f.top + 10 + 18.0 * static_cast<double>(i);
    const double x = f.width - f.right + 12;
    s << "<rect x=\"" << x << "\" y=\"" << y - 8 << "\" width=\"12\" height=\"10\" fill=\"" << colour_at(i)
      << "\"/>\n";
    s << "<text x=\"" << x + 18 << "\" y=\"" << y + 1 << "\" font-size=\"11\">" << escape(names[i]) << "</text>\n";
  }
}

std::string wrap_svg(const Frame& f, const std::string& body) {
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << f.width << "\" height=\"" << f.height
    << "\" font-family=\"sans-serif\">\n"
    << body << "</svg>\n";
  return s.str();
}

}  // namespace

SvgCanvas::SvgCanvas(Vec2 lo, Vec2 hi, double width_px) : lo_(lo), hi_(hi), width_px_(width_px) {
  const Vec2 span = (hi - lo).cwiseMax(Vec2(1e-9, 1e-9));
  scale_ = width_px / span.x();
  height_px_ = span.y() * scale_;
}

void SvgCanvas::polyline(const Polyline& pts, const std::string& colour, double stroke_px, bool closed) {
  if (pts.empty()) return;
  std::ostringstream s;
  s << '<' << (closed ? "polygon" : "polyline") << " fill=\"none\" stroke=\"" << colour << "\" stroke-width=\""
    << stroke_px << "\" points=\"";
  for (const auto& p : pts) s << num(px(p.x())) << ',' << num(py(p.y())) << ' ';
  s << "\"/>";
  body_.push_back(s.str());
}

void SvgCanvas::points(const Polyline& pts, const std::string& colour, double radius_px) {
  std::ostringstream s;
  s << "<g fill=\"" << colour << "\">";
  for (const auto& p : pts) s << "<circle cx=\"" << num(px(p.x())) << "\" cy=\"" << num(py(p.y())) << "\" r=\"" << radius_px << "\"/>";
  s << "</g>";
  body_.push_back(s.str());
}

void SvgCanvas::segment(const Vec2& a, const Vec2& b, const std::string& colour, double stroke_px) {
  std::ostringstream s;
  s << "<line x1=\"" << num(px(a.x())) << "\" y1=\"" << num(py(a.y())) << "\" x2=\"" << num(px(b.x())) << "\" y2=\""
    << num(py(b.y())) << "\" stroke=\"" << colour << "\" stroke-width=\"" << stroke_px << "\"/>";
  body_.push_back(s.str());
}

void SvgCanvas::text(const Vec2& at, const std::string& label, double size_px, const std::string& colour) {
  std::ostringstream s;
  s << "<text x=\"" << num(px(at.x())) << "\" y=\"" << num(py(at.y())) << "\" font-size=\"" << size_px
    << "\" fill=\"" << colour << "\">" << escape(label) << "</text>";
  body_.push_back(s.str());
}

void SvgCanvas::occupancy(const TrackMap& map, const std::string& colour) {
  std::ostringstream s;
  s << "<g fill=\"" << colour << "\">";
  const double res = map.resolution();
  for (int r = 0; r < map.rows(); ++r) {
    int c = 0;
    while (c < map.cols()) {
      if (!map.occupied(r, c)) {
        ++c;
        continue;
      }
      const int start = c;
      while (c < map.cols() && map.occupied(r, c)) ++c;
      const double x = map.origin().x() + start * res;
      const double y = map.origin().y() + (r + 1) * res;
      s << "<rect x=\"" << num(px(x)) << "\" y=\"" << num(py(y)) << "\" width=\"" << num((c - start) * res * scale_)
        << "\" height=\"" << num(res * scale_) << "\"/>";
    }
  }
  s << "</g>";
  body_.push_back(s.str());
}

std::string SvgCanvas::str() const {
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width_px_) << "\" height=\"" << num(height_px_)
    << "\" font-family=\"sans-serif\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (const auto& e : body_) s << e << '\n';
  s << "</svg>\n";
  return s.str();
}

void SvgCanvas::save(const std::filesystem::path& path) const { write_file(path, str()); }

void save_line_chart(const std::vector<ChartSeries>& series, const std::string& title, const std::string& x_label,
                     const std::string& y_label, const std::filesystem::path& path) {
  Frame f;
  f.x0 = f.y0 = std::numeric_limits<double>::infinity();
  f.x1 = f.y1 = -std::numeric_limits<double>::infinity();
  for (const auto& sr : series) {
    for (std::size_t i = 0; i < std::min(sr.x.size(), sr.y.size()); ++i) {
      if (!std::isfinite(sr.x[i]) || !std::isfinite(sr.y[i])) continue;
      f.x0 = std::min(f.x0, sr.x[i]);
      f.x1 = std::max(f.x1, sr.x[i]);
      f.y0 = std::min(f.y0, sr.y[i]);
      f.y1 = std::max(f.y1, sr.y[i]);
    }
  }
  if (!std::isfinite(f.x0)) f.x0 = 0, f.x1 = 1, f.y0 = 0, f.y1 = 1;
  if (f.x1 - f.x0 < 1e-12) f.x1 = f.x0 + 1.0;
  const double pad = std::max(1e-9, 0.05 * (f.y1 - f.y0));
  f.y0 -= pad;
  f.y1 += pad;

  std::ostringstream s;
  axes(s, f, title, x_label, y_label, true);
  std::vector<std::string> names;
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& sr = series[k];
    names.push_back(sr.name);
    s << "<polyline fill=\"none\" stroke=\"" << colour_at(k) << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < std::min(sr.x.size(), sr.y.size()); ++i) {
      if (!std::isfinite(sr.x[i]) || !std::isfinite(sr.y[i])) continue;
      s << num(f.px(sr.x[i])) << ',' << num(f.py(sr.y[i])) << ' ';
    }
    s << "\"/>\n";
  }
  legend(s, f, names);
  write_file(path, wrap_svg(f, s.str()));
}

void save_bar_chart(const std::vector<BarGroup>& groups, const std::vector<std::string>& bar_names,
                    const std::string& title, const std::string& y_label, const std::filesystem::path& path,
                    double threshold) {
  Frame f;
  f.x0 = 0.0;
  f.x1 = std::max<double>(1.0, static_cast<double>(groups.size()));
  f.y0 = 0.0;
  f.y1 = std::isfinite(threshold) ? threshold : 0.0;
  for (const auto& g : groups) {
    for (const double v : g.values) {
      if (std::isfinite(v)) f.y1 = std::max(f.y1, v);
    }
  }
  f.y1 = f.y1 > 0.0 ? 1.1 * f.y1 : 1.0;

  std::ostringstream s;
  axes(s, f, title, "", y_label, false);
  const double bars = std::max<double>(1.0, static_cast<double>(bar_names.size()));
  const double group_px = f.px(1.0) - f.px(0.0);
  const double bar_px = 0.8 * group_px / bars;
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    const double gx = f.px(static_cast<double>(gi)) + 0.1 * group_px;
    const auto& g = groups[gi];
    for (std::size_t b = 0; b < g.values.size(); ++b) {
      if (!std::isfinite(g.values[b])) continue;
      const double top = f.py(g.values[b]);
      s << "<rect x=\"" << num(gx + bar_px * static_cast<double>(b)) << "\" y=\"" << num(top) << "\" width=\""
        << num(0.95 * bar_px) << "\" height=\"" << num(f.py(0.0) - top) << "\" fill=\"" << colour_at(b) << "\"/>\n";
    }
    s << "<text x=\"" << num(gx + 0.4 * group_px) << "\" y=\"" << f.height - f.bottom + 17
      << "\" text-anchor=\"middle\" font-size=\"11\">" << escape(g.label) << "</text>\n";
  }
  if (std::isfinite(threshold)) {
    const double y = f.py(threshold);
    s << "<line x1=\"" << f.left << "\" y1=\"" << num(y) << "\" x2=\"" << f.width - f.right << "\" y2=\"" << num(y)
      << "\" stroke=\"#d00\" stroke-dasharray=\"6 4\"/>\n";
  }
  legend(s, f, bar_names);
  write_file(path, wrap_svg(f, s.str()));
}

}  // namespace lmr
