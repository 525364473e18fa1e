#pragma once

// Self-contained SVG figures. Output depends only on the inputs (no
// timestamps, fixed number formatting), so reruns are byte-identical.

#include <string>
#include <vector>

#include "fermi/model.hpp"

namespace fermi {

struct Curve {
  std::vector<double> x;
  std::vector<double> y;
  std::string label;
  std::string color = "#1f4e9c";
  bool dashed = false;
  bool right_axis = false;  // plotted against the secondary y axis
};

struct Band {
  double lo = 0.0;
  double hi = 0.0;
};

struct Panel {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::string y2_label;  // empty: no secondary axis
  std::vector<Curve> curves;
  std::vector<Band> bands;
  bool zero_line = false;
};

/// Panels stacked vertically in one document.
std::string render_svg(const std::vector<Panel>& panels, double width = 720.0,
                       double panel_height = 300.0);

/// dp and <n> against lambda with shaded acceleration windows.
std::string fig1_svg(const std::vector<double>& lambda, const std::vector<double>& dp,
                     const std::vector<double>& mean_bounces);

struct MirrorPair {
  double lambda = 0.0;
  std::vector<double> p_classical;
  std::vector<double> classical;
  std::vector<double> p_quantum;
  std::vector<double> quantum;
};

/// One panel per lambda: classical P(p) upward, quantum P(p) mirrored downward.
std::string fig2_svg(const std::vector<MirrorPair>& pairs);

/// dp against lambda with the scaled diffusion law overlaid.
std::string fig3_svg(const std::vector<double>& lambda, const std::vector<double>& dp);

struct BreathingSeries {
  double lambda = 0.0;
  std::vector<double> t;
  std::vector<double> dp2;
  std::vector<double> dz;
};

/// One panel per lambda: dp^2(t) and dz(t) on twin axes.
std::string fig4_svg(const std::vector<BreathingSeries>& runs);

}  // namespace fermi
