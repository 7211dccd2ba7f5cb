#include "drdcbf/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace drdcbf {

namespace {

constexpr int kWidth = 640;
constexpr int kHeight = 480;
constexpr int kMargin = 56;
constexpr std::size_t kMaxPoints = 2000;

const char* kRunColors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                            "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
                            "#bcbd22", "#17becf"};

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void pad(double frac) {
    if (!std::isfinite(lo)) {
      lo = 0.0;
      hi = 1.0;
    }
    if (hi - lo < 1e-12) {
      lo -= 0.5;
      hi += 0.5;
    }
    const double d = (hi - lo) * frac;
    lo -= d;
    hi += d;
  }
};

// Maps data coordinates into a pixel rectangle.
struct Frame {
  double px0, py0, pw, ph;
  Range xr, yr;

  double sx(double x) const { return px0 + (x - xr.lo) / (xr.hi - xr.lo) * pw; }
  double sy(double y) const { return py0 + ph - (y - yr.lo) / (yr.hi - yr.lo) * ph; }
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

int column_index(const Trajectory& t, const std::string& name) {
  for (std::size_t i = 0; i < t.state_names.size(); ++i) {
    if (t.state_names[i] == name) return static_cast<int>(i);
  }
  return -1;
}

// Keeps the first and last samples plus the min and max of each bucket so
// extrema survive decimation.
std::vector<std::size_t> decimate(const std::vector<double>& v) {
  std::vector<std::size_t> idx;
  const std::size_t n = v.size();
  if (n <= kMaxPoints) {
    for (std::size_t i = 0; i < n; ++i) idx.push_back(i);
    return idx;
  }
  const std::size_t buckets = kMaxPoints / 2;
  idx.push_back(0);
  for (std::size_t b = 0; b < buckets; ++b) {
    const std::size_t s = b * n / buckets;
    const std::size_t e = (b + 1) * n / buckets;
    std::size_t lo = s;
    std::size_t hi = s;
    for (std::size_t i = s; i < e; ++i) {
      if (v[i] < v[lo]) lo = i;
      if (v[i] > v[hi]) hi = i;
    }
    idx.push_back(std::min(lo, hi));
    if (lo != hi) idx.push_back(std::max(lo, hi));
  }
  idx.push_back(n - 1);
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  return idx;
}

// Round tick spacing of 1, 2 or 5 times a power of ten.
double tick_step(double span) {
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0}) {
    if (m * mag >= raw) return m * mag;
  }
  return 10.0 * mag;
}

void axes(std::ostringstream& os, const Frame& f, const std::string& xlabel,
          const std::string& ylabel) {
  os << "<rect x=\"" << num(f.px0) << "\" y=\"" << num(f.py0) << "\" width=\"" << num(f.pw)
     << "\" height=\"" << num(f.ph) << "\" fill=\"none\" stroke=\"#333\"/>\n";
  const double xs = tick_step(f.xr.hi - f.xr.lo);
  for (double xv = std::ceil(f.xr.lo / xs) * xs; xv <= f.xr.hi + 1e-9 * xs; xv += xs) {
    const double v = std::abs(xv) < 1e-9 * xs ? 0.0 : xv;
    os << "<text x=\"" << num(f.sx(v)) << "\" y=\"" << num(f.py0 + f.ph + 16)
       << "\" font-size=\"11\" text-anchor=\"middle\">" << tick(v) << "</text>\n";
  }
  const double ys = tick_step(f.yr.hi - f.yr.lo);
  for (double yv = std::ceil(f.yr.lo / ys) * ys; yv <= f.yr.hi + 1e-9 * ys; yv += ys) {
    const double v = std::abs(yv) < 1e-9 * ys ? 0.0 : yv;
    os << "<text x=\"" << num(f.px0 - 6) << "\" y=\"" << num(f.sy(v) + 4)
       << "\" font-size=\"11\" text-anchor=\"end\">" << tick(v) << "</text>\n";
  }
  os << "<text x=\"" << num(f.px0 + f.pw / 2) << "\" y=\"" << num(f.py0 + f.ph + 34)
     << "\" font-size=\"12\" text-anchor=\"middle\">" << xlabel << "</text>\n";
  os << "<text x=\"" << num(f.px0 - 42) << "\" y=\"" << num(f.py0 + f.ph / 2)
     << "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 " << num(f.px0 - 42)
     << " " << num(f.py0 + f.ph / 2) << ")\">" << ylabel << "</text>\n";
}

void polyline(std::ostringstream& os, const Frame& f, const std::vector<double>& xs,
              const std::vector<double>& ys, const std::vector<std::size_t>& idx,
              const std::string& color, const std::string& extra = "") {
  os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\"" << extra
     << " points=\"";
  bool first = true;
  for (std::size_t i : idx) {
    if (!std::isfinite(xs[i]) || !std::isfinite(ys[i])) continue;
    if (!first) os << ' ';
    os << num(f.sx(xs[i])) << ',' << num(f.sy(ys[i]));
    first = false;
  }
  os << "\"/>\n";
}

std::string header(int w, int h, const std::string& title) {
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
     << "\" viewBox=\"0 0 " << w << ' ' << h << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!title.empty()) {
    os << "<text x=\"" << w / 2 << "\" y=\"20\" font-size=\"14\" text-anchor=\"middle\">" << title
       << "</text>\n";
  }
  return os.str();
}

std::vector<double> cert_channel(const Trajectory& t, double CertificateChannels::*field) {
  std::vector<double> out;
  out.reserve(t.size());
  for (const CertificateChannels& c : t.cert) out.push_back(c.*field);
  return out;
}

void validate(const std::vector<Trajectory>& runs, const PlotOptions& opts) {
  if (runs.empty()) throw ConfigError("plot: no trajectories");
  for (const Trajectory& t : runs) {
    if (t.size() == 0) throw ConfigError("plot: empty trajectory");
    if (t.state_names != runs.front().state_names || t.input_dim != runs.front().input_dim) {
      throw ConfigError("plot: trajectories have different schemas");
    }
  }
  for (const std::string& c : {opts.x_column, opts.y_column}) {
    if (column_index(runs.front(), c) < 0) throw ConfigError("plot: no state column '" + c + "'");
  }
}

}  // namespace

std::vector<std::vector<std::pair<double, double>>> zero_contour(const PlaneField& field,
                                                                 double x0, double x1, double y0,
                                                                 double y1, int cells) {
  std::vector<std::vector<std::pair<double, double>>> segs;
  const double dx = (x1 - x0) / cells;
  const double dy = (y1 - y0) / cells;
  std::vector<double> v(static_cast<std::size_t>((cells + 1) * (cells + 1)));
  auto at = [&](int i, int j) -> double& { return v[static_cast<std::size_t>(j * (cells + 1) + i)]; };
  for (int j = 0; j <= cells; ++j) {
    for (int i = 0; i <= cells; ++i) at(i, j) = field(x0 + i * dx, y0 + j * dy);
  }
  for (int j = 0; j < cells; ++j) {
    for (int i = 0; i < cells; ++i) {
      // Corners counter-clockwise from (i, j).
      const double c[4] = {at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1)};
      const double px[4] = {x0 + i * dx, x0 + (i + 1) * dx, x0 + (i + 1) * dx, x0 + i * dx};
      const double py[4] = {y0 + j * dy, y0 + j * dy, y0 + (j + 1) * dy, y0 + (j + 1) * dy};
      std::vector<std::pair<double, double>> hits;
      for (int e = 0; e < 4; ++e) {
        const int a = e;
        const int b = (e + 1) % 4;
        if ((c[a] >= 0.0) == (c[b] >= 0.0)) continue;
        const double s = c[a] / (c[a] - c[b]);
        hits.emplace_back(px[a] + s * (px[b] - px[a]), py[a] + s * (py[b] - py[a]));
      }
      if (hits.size() == 2) {
        segs.push_back(hits);
      } else if (hits.size() == 4) {
        segs.push_back({hits[0], hits[1]});
        segs.push_back({hits[2], hits[3]});
      }
    }
  }
  return segs;
}

std::string path_svg(const std::vector<Trajectory>& runs, const PlotOptions& opts) {
  validate(runs, opts);
  const int xi = column_index(runs.front(), opts.x_column);
  const int yi = column_index(runs.front(), opts.y_column);

  std::vector<std::vector<double>> xs(runs.size());
  std::vector<std::vector<double>> ys(runs.size());
  Range xr, yr;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    for (const Vec& s : runs[r].states) {
      xs[r].push_back(s[xi]);
      ys[r].push_back(s[yi]);
      xr.add(s[xi]);
      yr.add(s[yi]);
    }
  }
  xr.pad(0.15);
  yr.pad(0.15);
  // Equal aspect ratio so circles stay round.
  const double pw = kWidth - 2.0 * kMargin;
  const double ph = kHeight - 2.0 * kMargin;
  const double scale = std::max((xr.hi - xr.lo) / pw, (yr.hi - yr.lo) / ph);
  const double cx = 0.5 * (xr.lo + xr.hi);
  const double cy = 0.5 * (yr.lo + yr.hi);
  xr = {cx - 0.5 * scale * pw, cx + 0.5 * scale * pw};
  yr = {cy - 0.5 * scale * ph, cy + 0.5 * scale * ph};
  const Frame f{static_cast<double>(kMargin), static_cast<double>(kMargin), pw, ph, xr, yr};

  std::ostringstream os;
  os << header(kWidth, kHeight, opts.title);
  if (opts.boundary) {
    os << "<path fill=\"none\" stroke=\"#444\" stroke-width=\"1.2\" stroke-dasharray=\"4 3\" d=\"";
    for (const auto& seg : zero_contour(opts.boundary, xr.lo, xr.hi, yr.lo, yr.hi)) {
      os << 'M' << num(f.sx(seg[0].first)) << ',' << num(f.sy(seg[0].second)) << 'L'
         << num(f.sx(seg[1].first)) << ',' << num(f.sy(seg[1].second));
    }
    os << "\"/>\n";
  }
  for (std::size_t r = 0; r < runs.size(); ++r) {
    const std::string color = kRunColors[r % std::size(kRunColors)];
    std::vector<std::size_t> idx(xs[r].size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    if (idx.size() > kMaxPoints) {
      std::vector<std::size_t> strided;
      const std::size_t stride = (idx.size() + kMaxPoints - 1) / kMaxPoints;
      for (std::size_t i = 0; i < idx.size(); i += stride) strided.push_back(i);
      strided.push_back(idx.size() - 1);
      idx = strided;
    }
    polyline(os, f, xs[r], ys[r], idx, color);
    os << "<circle cx=\"" << num(f.sx(xs[r].front())) << "\" cy=\"" << num(f.sy(ys[r].front()))
       << "\" r=\"3\" fill=\"" << color << "\"/>\n";
  }
  axes(os, f, opts.x_column, opts.y_column);
  os << "</svg>\n";
  return os.str();
}

std::string certificate_svg(const std::vector<Trajectory>& runs, const PlotOptions& opts) {
  validate(runs, opts);
  const double pw = kWidth - 2.0 * kMargin;
  const double panel = (kHeight - 3.0 * kMargin) / 2.0;

  Range tr, hr, vr;
  std::vector<std::vector<double>> h(runs.size()), h0(runs.size()), v(runs.size());
  for (std::size_t r = 0; r < runs.size(); ++r) {
    h[r] = cert_channel(runs[r], &CertificateChannels::h);
    h0[r] = cert_channel(runs[r], &CertificateChannels::h0);
    v[r] = cert_channel(runs[r], &CertificateChannels::V);
    for (double t : runs[r].times) tr.add(t);
    for (std::size_t i = 0; i < h[r].size(); ++i) {
      hr.add(h[r][i]);
      hr.add(h0[r][i]);
      vr.add(v[r][i]);
    }
  }
  hr.add(0.0);
  vr.add(0.0);
  tr.pad(0.0);
  hr.pad(0.05);
  vr.pad(0.05);
  const Frame top{static_cast<double>(kMargin), static_cast<double>(kMargin), pw, panel, tr, hr};
  const Frame bottom{static_cast<double>(kMargin), 2.0 * kMargin + panel, pw, panel, tr, vr};

  std::ostringstream os;
  os << header(kWidth, kHeight, opts.title);
  os << "<line x1=\"" << num(top.sx(tr.lo)) << "\" y1=\"" << num(top.sy(0.0)) << "\" x2=\""
     << num(top.sx(tr.hi)) << "\" y2=\"" << num(top.sy(0.0))
     << "\" stroke=\"#999\" stroke-dasharray=\"2 2\"/>\n";
  for (std::size_t r = 0; r < runs.size(); ++r) {
    polyline(os, top, runs[r].times, h[r], decimate(h[r]), "#1f77b4");
    polyline(os, top, runs[r].times, h0[r], decimate(h0[r]), "#ff7f0e");
    polyline(os, bottom, runs[r].times, v[r], decimate(v[r]), "#2ca02c");
  }
  axes(os, top, "", "h, h0");
  axes(os, bottom, "t [s]", "V");
  const double lx = top.px0 + top.pw - 90;
  os << "<text x=\"" << num(lx) << "\" y=\"" << num(top.py0 + 14)
     << "\" font-size=\"11\" fill=\"#1f77b4\">h</text>\n"
     << "<text x=\"" << num(lx + 30) << "\" y=\"" << num(top.py0 + 14)
     << "\" font-size=\"11\" fill=\"#ff7f0e\">h0</text>\n";
  os << "</svg>\n";
  return os.str();
}

PlotFiles write_plots(const std::vector<Trajectory>& runs, const std::string& out,
                      const PlotOptions& opts) {
  PlotFiles files{out + "_path.svg", out + "_cert.svg"};
  const std::string path = path_svg(runs, opts);
  const std::string cert = certificate_svg(runs, opts);
  for (const auto& [name, body] : {std::pair{files.path_svg, path}, std::pair{files.cert_svg, cert}}) {
    std::ofstream f(name);
    if (!f) throw Error("cannot write " + name);
    f << body;
  }
  return files;
}

}  // namespace drdcbf
