#include "edyn/svg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "edyn/errors.hpp"

namespace edyn {

namespace {

constexpr std::array<const char*, 8> kPalette = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                                 "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finish() {
    if (!(lo <= hi)) {
      lo = 0.0;
      hi = 1.0;
    }
    if (lo == hi) {
      const double pad = lo == 0.0 ? 1.0 : 0.05 * std::abs(lo);
      lo -= pad;
      hi += pad;
    }
  }
};

}  // namespace

std::string render_svg(const std::vector<PlotSeries>& series, const PlotOptions& opt) {
  const double left = 70, right = 20, top = 40, bottom = 55;
  const double pw = opt.width - left - right;
  const double ph = opt.height - top - bottom;

  auto ty = [&](double y) { return opt.log_y ? std::log10(std::max(y, kLogClip)) : y; };

  Range rx, ry;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) throw DimensionError("plot series x and y differ in length");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      rx.add(s.x[i]);
      ry.add(ty(s.y[i]));
    }
  }
  rx.finish();
  ry.finish();

  auto px = [&](double x) { return left + (x - rx.lo) / (rx.hi - rx.lo) * pw; };
  auto py = [&](double y) { return top + (1.0 - (ty(y) - ry.lo) / (ry.hi - ry.lo)) * ph; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << opt.width << "\" height=\"" << opt.height
    << "\" viewBox=\"0 0 " << opt.width << ' ' << opt.height << "\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!opt.title.empty()) {
    o << "<text x=\"" << fmt(opt.width / 2.0) << "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" "
      << "font-size=\"15\">" << escape(opt.title) << "</text>\n";
  }
  o << "<rect x=\"" << fmt(left) << "\" y=\"" << fmt(top) << "\" width=\"" << fmt(pw) << "\" height=\"" << fmt(ph)
    << "\" fill=\"none\" stroke=\"black\"/>\n";

  // ticks: five per axis, log axis labelled with powers of ten
  for (int k = 0; k <= 4; ++k) {
    const double fx = rx.lo + (rx.hi - rx.lo) * k / 4.0;
    const double xx = left + pw * k / 4.0;
    o << "<line x1=\"" << fmt(xx) << "\" y1=\"" << fmt(top + ph) << "\" x2=\"" << fmt(xx) << "\" y2=\""
      << fmt(top + ph + 5) << "\" stroke=\"black\"/>\n";
    o << "<text x=\"" << fmt(xx) << "\" y=\"" << fmt(top + ph + 18)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << tick_label(fx) << "</text>\n";

    const double fy = ry.lo + (ry.hi - ry.lo) * k / 4.0;
    const double yy = top + ph * (1.0 - k / 4.0);
    o << "<line x1=\"" << fmt(left - 5) << "\" y1=\"" << fmt(yy) << "\" x2=\"" << fmt(left) << "\" y2=\"" << fmt(yy)
      << "\" stroke=\"black\"/>\n";
    const std::string label = opt.log_y ? "1e" + tick_label(fy) : tick_label(fy);
    o << "<text x=\"" << fmt(left - 8) << "\" y=\"" << fmt(yy + 4)
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << label << "</text>\n";
  }
  if (!opt.x_label.empty()) {
    o << "<text x=\"" << fmt(left + pw / 2) << "\" y=\"" << fmt(opt.height - 12.0)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" << escape(opt.x_label)
      << "</text>\n";
  }
  if (!opt.y_label.empty()) {
    o << "<text transform=\"translate(16," << fmt(top + ph / 2)
      << ") rotate(-90)\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">"
      << escape(opt.y_label) << "</text>\n";
  }

  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* colour = kPalette[si % kPalette.size()];
    if (s.scatter) {
      o << "<g fill=\"" << colour << "\">\n";
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
        o << "<circle cx=\"" << fmt(px(s.x[i])) << "\" cy=\"" << fmt(py(s.y[i])) << "\" r=\""
          << fmt(opt.point_radius) << "\"/>\n";
      }
      o << "</g>\n";
    } else {
      std::string pts;
      auto flush = [&] {
        if (!pts.empty()) {
          o << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.2\" points=\"" << pts
            << "\"/>\n";
          pts.clear();
        }
      };
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) {
          flush();
          continue;
        }
        if (!pts.empty()) pts += ' ';
        pts += fmt(px(s.x[i])) + ',' + fmt(py(s.y[i]));
      }
      flush();
    }
    if (!s.label.empty()) {
      const double ly = top + 14 + 16.0 * static_cast<double>(si);
      o << "<text x=\"" << fmt(left + pw - 6) << "\" y=\"" << fmt(ly) << "\" text-anchor=\"end\" fill=\"" << colour
        << "\" font-family=\"sans-serif\" font-size=\"12\">" << escape(s.label) << "</text>\n";
    }
  }
  o << "</svg>\n";
  return o.str();
}

void write_svg(const std::filesystem::path& path, const std::vector<PlotSeries>& series,
               const PlotOptions& opt) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << render_svg(series, opt);
}

}  // namespace edyn
