#include "fermi/svg.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <limits>

#include "fermi/errors.hpp"

namespace fermi {
namespace {

std::string num(double v, int precision = 4) {
  if (!std::isfinite(v)) return "0";
  if (std::abs(v) < 1e-12) v = 0.0;
  std::array<char, 40> buf{};
  const auto r = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general, precision);
  return std::string(buf.data(), r.ptr);
}

std::string escape(const std::string& s) {
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

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finish(bool include_zero) {
    if (!(lo <= hi)) {
      lo = 0.0;
      hi = 1.0;
    }
    if (include_zero) {
      lo = std::min(lo, 0.0);
      hi = std::max(hi, 0.0);
    }
    if (hi - lo < 1e-300) {
      lo -= 0.5;
      hi += 0.5;
    }
  }
};

// Roughly five ticks at 1, 2 or 5 times a power of ten.
std::vector<double> ticks(double lo, double hi) {
  const double raw = (hi - lo) / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    step = m * mag;
    if (step >= raw) break;
  }
  std::vector<double> out;
  for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * step; v += step) out.push_back(v);
  return out;
}

class Frame {
 public:
  Frame(double left, double top, double width, double height, Range x, Range y)
      : l_(left), t_(top), w_(width), h_(height), x_(x), y_(y) {}

  double px(double v) const { return l_ + (v - x_.lo) / (x_.hi - x_.lo) * w_; }
  double py(double v) const { return t_ + (y_.hi - v) / (y_.hi - y_.lo) * h_; }
  double left() const { return l_; }
  double top() const { return t_; }
  double width() const { return w_; }
  double height() const { return h_; }
  const Range& x() const { return x_; }
  const Range& y() const { return y_; }

 private:
  double l_, t_, w_, h_;
  Range x_, y_;
};

void polyline(std::string& s, const Frame& f, const Curve& c) {
  s += "<polyline fill=\"none\" stroke=\"" + c.color + "\" stroke-width=\"1.2\"";
  if (c.dashed) s += " stroke-dasharray=\"5,3\"";
  s += " points=\"";
  bool first = true;
  for (std::size_t i = 0; i < c.x.size() && i < c.y.size(); ++i) {
    if (!std::isfinite(c.x[i]) || !std::isfinite(c.y[i])) continue;
    if (!first) s += ' ';
    s += num(f.px(c.x[i]), 6) + "," + num(f.py(c.y[i]), 6);
    first = false;
  }
  s += "\"/>\n";
}

void panel_svg(std::string& s, const Panel& p, double top, double width, double height) {
  const double ml = 70, mr = p.y2_label.empty() ? 20 : 70, mt = 28, mb = 42;
  Range xr, yr, y2r;
  for (const Curve& c : p.curves) {
    for (double v : c.x) xr.add(v);
    for (double v : c.y) (c.right_axis ? y2r : yr).add(v);
  }
  xr.finish(false);
  yr.finish(true);
  y2r.finish(true);
  const Frame f(ml, top + mt, width - ml - mr, height - mt - mb, xr, yr);
  const Frame f2(ml, top + mt, width - ml - mr, height - mt - mb, xr, y2r);

  s += "<g>\n";
  s += "<text x=\"" + num(width / 2, 6) + "\" y=\"" + num(top + 18, 6) +
       "\" text-anchor=\"middle\" font-size=\"14\">" + escape(p.title) + "</text>\n";
  for (const Band& b : p.bands) {
    const double lo = std::max(b.lo, xr.lo), hi = std::min(b.hi, xr.hi);
    if (!(hi > lo)) continue;
    s += "<rect class=\"window\" x=\"" + num(f.px(lo), 6) + "\" y=\"" + num(f.top(), 6) + "\" width=\"" +
         num(f.px(hi) - f.px(lo), 6) + "\" height=\"" + num(f.height(), 6) +
         "\" fill=\"#f2c14e\" fill-opacity=\"0.35\" stroke=\"none\"/>\n";
  }
  s += "<rect x=\"" + num(f.left(), 6) + "\" y=\"" + num(f.top(), 6) + "\" width=\"" + num(f.width(), 6) +
       "\" height=\"" + num(f.height(), 6) + "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double v : ticks(xr.lo, xr.hi)) {
    const double x = f.px(v);
    s += "<line x1=\"" + num(x, 6) + "\" y1=\"" + num(f.top() + f.height(), 6) + "\" x2=\"" + num(x, 6) +
         "\" y2=\"" + num(f.top() + f.height() + 5, 6) + "\" stroke=\"black\"/>\n";
    s += "<text x=\"" + num(x, 6) + "\" y=\"" + num(f.top() + f.height() + 18, 6) +
         "\" text-anchor=\"middle\" font-size=\"11\">" + num(v) + "</text>\n";
  }
  for (double v : ticks(yr.lo, yr.hi)) {
    const double y = f.py(v);
    s += "<line x1=\"" + num(f.left() - 5, 6) + "\" y1=\"" + num(y, 6) + "\" x2=\"" + num(f.left(), 6) +
         "\" y2=\"" + num(y, 6) + "\" stroke=\"black\"/>\n";
    s += "<text x=\"" + num(f.left() - 8, 6) + "\" y=\"" + num(y + 4, 6) +
         "\" text-anchor=\"end\" font-size=\"11\">" + num(v) + "</text>\n";
  }
  if (!p.y2_label.empty()) {
    const double xr_edge = f.left() + f.width();
    for (double v : ticks(y2r.lo, y2r.hi)) {
      const double y = f2.py(v);
      s += "<line x1=\"" + num(xr_edge, 6) + "\" y1=\"" + num(y, 6) + "\" x2=\"" + num(xr_edge + 5, 6) +
           "\" y2=\"" + num(y, 6) + "\" stroke=\"black\"/>\n";
      s += "<text x=\"" + num(xr_edge + 8, 6) + "\" y=\"" + num(y + 4, 6) +
           "\" text-anchor=\"start\" font-size=\"11\">" + num(v) + "</text>\n";
    }
    s += "<text transform=\"translate(" + num(width - 14, 6) + "," + num(f.top() + f.height() / 2, 6) +
         ") rotate(90)\" text-anchor=\"middle\" font-size=\"12\">" + escape(p.y2_label) + "</text>\n";
  }
  if (p.zero_line && yr.lo < 0.0 && yr.hi > 0.0) {
    s += "<line x1=\"" + num(f.left(), 6) + "\" y1=\"" + num(f.py(0), 6) + "\" x2=\"" +
         num(f.left() + f.width(), 6) + "\" y2=\"" + num(f.py(0), 6) + "\" stroke=\"#888\"/>\n";
  }
  s += "<text x=\"" + num(f.left() + f.width() / 2, 6) + "\" y=\"" + num(top + height - 8, 6) +
       "\" text-anchor=\"middle\" font-size=\"12\">" + escape(p.x_label) + "</text>\n";
  s += "<text transform=\"translate(16," + num(f.top() + f.height() / 2, 6) +
       ") rotate(-90)\" text-anchor=\"middle\" font-size=\"12\">" + escape(p.y_label) + "</text>\n";

  s += "<clipPath id=\"clip" + num(top, 6) + "\"><rect x=\"" + num(f.left(), 6) + "\" y=\"" +
       num(f.top(), 6) + "\" width=\"" + num(f.width(), 6) + "\" height=\"" + num(f.height(), 6) +
       "\"/></clipPath>\n";
  s += "<g clip-path=\"url(#clip" + num(top, 6) + ")\">\n";
  for (const Curve& c : p.curves) polyline(s, c.right_axis ? f2 : f, c);
  s += "</g>\n";

  double ly = f.top() + 14;
  for (const Curve& c : p.curves) {
    if (c.label.empty()) continue;
    const double lx = f.left() + f.width() - 150;
    s += "<line x1=\"" + num(lx, 6) + "\" y1=\"" + num(ly - 4, 6) + "\" x2=\"" + num(lx + 20, 6) +
         "\" y2=\"" + num(ly - 4, 6) + "\" stroke=\"" + c.color + "\"" +
         (c.dashed ? " stroke-dasharray=\"5,3\"" : "") + "/>\n";
    s += "<text x=\"" + num(lx + 26, 6) + "\" y=\"" + num(ly, 6) + "\" font-size=\"11\">" +
         escape(c.label) + "</text>\n";
    ly += 15;
  }
  s += "</g>\n";
}

std::vector<Band> window_bands(const std::vector<double>& lambda) {
  std::vector<Band> out;
  if (lambda.empty()) return out;
  const double hi = *std::max_element(lambda.begin(), lambda.end());
  if (!(hi > 0.0)) return out;
  for (const Window& w : windows_up_to(hi)) out.push_back({w.lo(), w.hi()});
  return out;
}

void require(bool ok, std::vector<std::string>& missing, const std::string& name) {
  if (!ok) missing.emplace_back(name);
}

void throw_missing(const std::vector<std::string>& missing, const char* fig) {
  if (missing.empty()) return;
  std::string msg = std::string(fig) + ": missing or empty input series:";
  for (const auto& m : missing) msg += " " + m;
  throw InvalidParameter(msg);
}

}  // namespace

std::string render_svg(const std::vector<Panel>& panels, double width, double panel_height) {
  const double height = panel_height * static_cast<double>(panels.size());
  std::string s = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width, 6) + "\" height=\"" +
       num(height, 6) + "\" viewBox=\"0 0 " + num(width, 6) + " " + num(height, 6) +
       "\" font-family=\"Helvetica, Arial, sans-serif\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t i = 0; i < panels.size(); ++i) {
    panel_svg(s, panels[i], panel_height * static_cast<double>(i), width, panel_height);
  }
  s += "</svg>\n";
  return s;
}

std::string fig1_svg(const std::vector<double>& lambda, const std::vector<double>& dp,
                     const std::vector<double>& mean_bounces) {
  std::vector<std::string> missing;
  require(!lambda.empty(), missing, "lambda");
  require(dp.size() == lambda.size() && !dp.empty(), missing, "dp");
  require(mean_bounces.size() == lambda.size() && !mean_bounces.empty(), missing, "mean_bounces");
  throw_missing(missing, "fig1");
  const auto bands = window_bands(lambda);
  Panel a{"Momentum dispersion", "lambda", "dp", "", {{lambda, dp, "", "#1f4e9c"}}, bands};
  Panel b{"Mean number of bounces", "lambda", "<n>", "", {{lambda, mean_bounces, "", "#b03a2e"}}, {}};
  return render_svg({a, b});
}

std::string fig2_svg(const std::vector<MirrorPair>& pairs) {
  std::vector<std::string> missing;
  require(!pairs.empty(), missing, "lambda points");
  for (const MirrorPair& m : pairs) {
    const std::string at = " (lambda " + num(m.lambda) + ")";
    if (m.p_classical.empty() || m.p_classical.size() != m.classical.size()) missing.push_back("classical P(p)" + at);
    if (m.p_quantum.empty() || m.p_quantum.size() != m.quantum.size()) missing.push_back("quantum P(p)" + at);
  }
  throw_missing(missing, "fig2");
  std::vector<Panel> panels;
  for (const MirrorPair& m : pairs) {
    std::vector<double> down(m.quantum.size());
    std::transform(m.quantum.begin(), m.quantum.end(), down.begin(), [](double v) { return -v; });
    panels.push_back(Panel{"Momentum distribution, lambda = " + num(m.lambda), "p",
                           "P(p)  (quantum mirrored)", "",
                           {{m.p_classical, m.classical, "classical", "#1f4e9c"},
                            {m.p_quantum, down, "quantum", "#b03a2e"}},
                           {}, true});
  }
  return render_svg(panels, 720.0, 360.0);
}

std::string fig3_svg(const std::vector<double>& lambda, const std::vector<double>& dp) {
  std::vector<std::string> missing;
  require(!lambda.empty(), missing, "lambda");
  require(dp.size() == lambda.size() && !dp.empty(), missing, "dp");
  throw_missing(missing, "fig3");
  Curve law{{}, {}, "D_lambda / D0", "#555555", true, true};
  const double lo = std::max(1e-3, *std::min_element(lambda.begin(), lambda.end()));
  const double hi = *std::max_element(lambda.begin(), lambda.end());
  if (hi > lo) {
    for (int i = 0; i <= 400; ++i) {
      const double l = lo + (hi - lo) * i / 400.0;
      law.x.push_back(l);
      law.y.push_back(diffusion_coefficient(l).ratio());
    }
  }
  Panel p{"Dispersion and diffusion law", "lambda", "dp", "D_lambda / D0 (arb. units)",
          {{lambda, dp, "dp", "#1f4e9c"}, law}, window_bands(lambda)};
  return render_svg({p});
}

std::string fig4_svg(const std::vector<BreathingSeries>& runs) {
  std::vector<std::string> missing;
  require(!runs.empty(), missing, "lambda points");
  for (const BreathingSeries& r : runs) {
    const std::string at = " (lambda " + num(r.lambda) + ")";
    if (r.t.empty()) missing.push_back("t" + at);
    if (r.dp2.empty() || r.dp2.size() != r.t.size()) missing.push_back("dp2" + at);
    if (r.dz.empty() || r.dz.size() != r.t.size()) missing.push_back("dz" + at);
  }
  throw_missing(missing, "fig4");
  std::vector<Panel> panels;
  for (const BreathingSeries& r : runs) {
    panels.push_back(Panel{"Wavepacket breathing, lambda = " + num(r.lambda), "t", "dp^2", "dz",
                           {{r.t, r.dp2, "dp^2", "#1f4e9c"}, {r.t, r.dz, "dz", "#b03a2e", false, true}},
                           {}});
  }
  return render_svg(panels);
}

}  // namespace fermi
