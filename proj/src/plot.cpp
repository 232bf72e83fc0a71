#include "dirimult/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "dirimult/error.hpp"
#include "dirimult/special_functions.hpp"

namespace dirimult {

namespace {

constexpr const char* kPalette[] = {"#1b9e77", "#d95f02", "#7570b3", "#e7298a",
                                    "#66a61e", "#e6ab02", "#a6761d", "#666666"};
constexpr std::size_t kPaletteSize = sizeof(kPalette) / sizeof(kPalette[0]);

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string xml_escape(const std::string& s) {
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

void svg_open(std::ostringstream& out, double width, double height) {
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\""
      << num(height) << "\" viewBox=\"0 0 " << num(width) << ' ' << num(height) << "\">\n"
      << "<rect x=\"0\" y=\"0\" width=\"" << num(width) << "\" height=\"" << num(height)
      << "\" fill=\"white\"/>\n"
      << "<style>text{font-family:sans-serif;font-size:11px}</style>\n";
}

void text(std::ostringstream& out, double x, double y, const std::string& s,
          const char* anchor = "middle") {
  out << "<text x=\"" << num(x) << "\" y=\"" << num(y) << "\" text-anchor=\"" << anchor
      << "\">" << xml_escape(s) << "</text>\n";
}

void line(std::ostringstream& out, double x1, double y1, double x2, double y2,
          const char* stroke = "black") {
  out << "<line x1=\"" << num(x1) << "\" y1=\"" << num(y1) << "\" x2=\"" << num(x2)
      << "\" y2=\"" << num(y2) << "\" stroke=\"" << stroke << "\"/>\n";
}

}  // namespace

DensityCurve beta_density_curve(double a, double b, std::size_t points) {
  if (!(a > 0.0) || !(b > 0.0)) throw ValidationError("beta_density_curve: shapes must be positive");
  if (points < 3) throw ValidationError("beta_density_curve: need at least three grid points");
  const double p = std::max(1.0, 2.0 / std::min(a, b));
  const double log_norm = log_gamma(a + b) - log_gamma(a) - log_gamma(b);
  const double log_p = std::log(p);

  DensityCurve curve;
  curve.x.resize(points);
  curve.density.resize(points);
  curve.integrand.resize(points);
  for (std::size_t k = 0; k < points; ++k) {
    if (k == 0 || k + 1 == points) {
      const double x = k == 0 ? 0.0 : 1.0;
      curve.x[k] = x;
      curve.density[k] = std::exp(log_beta_pdf(a, b, x));
      curve.integrand[k] = 0.0;
      continue;
    }
    const double u = static_cast<double>(k) / static_cast<double>(points - 1);
    const double lu = std::log(u);
    const double l1u = std::log1p(-u);
    const double parts[] = {p * lu, p * l1u};
    const double lse = log_sum_exp(parts);
    const double log_x = p * lu - lse;
    const double log_1mx = p * l1u - lse;
    const double log_density = log_norm + (a - 1.0) * log_x + (b - 1.0) * log_1mx;
    curve.x[k] = std::exp(log_x);
    curve.density[k] = std::exp(log_density);
    curve.integrand[k] = std::exp(log_density + log_p + log_x + log_1mx - lu - l1u);
  }
  return curve;
}

double trapezoid_mass(const DensityCurve& curve) {
  const auto& g = curve.integrand;
  if (g.size() < 2) return 0.0;
  const double h = 1.0 / static_cast<double>(g.size() - 1);
  double sum = 0.0;
  for (std::size_t k = 0; k + 1 < g.size(); ++k) sum += 0.5 * h * (g[k] + g[k + 1]);
  return sum;
}

std::string render_mean_bars_svg(const FittedModel& model) {
  const auto table = posterior_mean_table(model.posteriors());
  const std::size_t types = table.categories();
  const std::size_t classes = table.classes();

  const double left = 60, right = 140, top = 40, bottom = 50;
  const double group_width = 20.0 * static_cast<double>(classes) + 20.0;
  const double plot_w = group_width * static_cast<double>(types);
  const double plot_h = 300;
  const double width = left + plot_w + right;
  const double height = top + plot_h + bottom;

  double y_max = 0.0;
  for (std::size_t j = 0; j < types; ++j)
    for (std::size_t i = 0; i < classes; ++i) y_max = std::max(y_max, table(j, i));
  y_max = std::min(1.0, std::ceil(y_max * 10.0) / 10.0);
  if (y_max <= 0.0) y_max = 1.0;
  auto y_of = [&](double v) { return top + plot_h * (1.0 - v / y_max); };

  std::ostringstream out;
  svg_open(out, width, height);
  text(out, left + plot_w / 2, 20, "Posterior mean proportion of each type, by class");
  line(out, left, top, left, top + plot_h);
  line(out, left, top + plot_h, left + plot_w, top + plot_h);
  for (int t = 0; t <= 5; ++t) {
    const double v = y_max * t / 5.0;
    line(out, left - 4, y_of(v), left, y_of(v));
    char label[16];
    std::snprintf(label, sizeof label, "%.2f", v);
    text(out, left - 6, y_of(v) + 4, label, "end");
  }
  for (std::size_t j = 0; j < types; ++j) {
    const double gx = left + group_width * static_cast<double>(j) + 10.0;
    for (std::size_t i = 0; i < classes; ++i) {
      const double v = table(j, i);
      const double x = gx + 20.0 * static_cast<double>(i);
      out << "<rect class=\"bar\" x=\"" << num(x) << "\" y=\"" << num(y_of(v))
          << "\" width=\"18.00\" height=\"" << num(top + plot_h - y_of(v)) << "\" fill=\""
          << kPalette[i % kPaletteSize] << "\"><title>" << xml_escape(model.class_labels()[i])
          << ", type " << xml_escape(model.typology().label(j)) << ": " << num(v * 100.0)
          << "%</title></rect>\n";
    }
    text(out, gx + 10.0 * static_cast<double>(classes), top + plot_h + 16,
         "type " + model.typology().label(j));
  }
  for (std::size_t i = 0; i < classes; ++i) {
    const double ly = top + 16.0 * static_cast<double>(i);
    out << "<rect x=\"" << num(left + plot_w + 20) << "\" y=\"" << num(ly) << "\" width=\"12.00\" height=\"12.00\" fill=\""
        << kPalette[i % kPaletteSize] << "\"/>\n";
    text(out, left + plot_w + 38, ly + 10, model.class_labels()[i], "start");
  }
  out << "</svg>\n";
  return out.str();
}

std::string render_marginals_svg(const FittedModel& model) {
  const std::size_t classes = model.num_classes();
  const std::size_t types = model.typology().size();
  const double panel_w = 260, panel_h = 180, gap = 50, left = 50, top = 40;
  const std::size_t cols = std::min<std::size_t>(classes, 3);
  const std::size_t rows = (classes + cols - 1) / cols;
  const double width = left + static_cast<double>(cols) * (panel_w + gap) + 80;
  const double height = top + static_cast<double>(rows) * (panel_h + gap) + 20;

  std::ostringstream out;
  svg_open(out, width, height);
  text(out, width / 2, 20, "Marginal posterior density of each type proportion");
  for (std::size_t i = 0; i < classes; ++i) {
    const auto& post = model.posteriors()[i];
    const double ox = left + static_cast<double>(i % cols) * (panel_w + gap);
    const double oy = top + static_cast<double>(i / cols) * (panel_h + gap);

    std::vector<DensityCurve> curves;
    double y_max = 0.0;
    for (std::size_t j = 0; j < types; ++j) {
      const auto m = marginal_beta(post, j);
      curves.push_back(beta_density_curve(m.a, m.b));
      for (std::size_t k = 0; k < curves.back().x.size(); ++k) {
        const double x = curves.back().x[k];
        if (x >= 0.005 && x <= 0.995) y_max = std::max(y_max, curves.back().density[k]);
      }
    }
    if (!(y_max > 0.0) || !std::isfinite(y_max)) y_max = 1.0;

    out << "<g class=\"panel\">\n";
    text(out, ox + panel_w / 2, oy - 6, model.class_labels()[i]);
    line(out, ox, oy, ox, oy + panel_h);
    line(out, ox, oy + panel_h, ox + panel_w, oy + panel_h);
    text(out, ox, oy + panel_h + 14, "0");
    text(out, ox + panel_w, oy + panel_h + 14, "1");
    char top_label[32];
    std::snprintf(top_label, sizeof top_label, "%.1f", y_max);
    text(out, ox - 4, oy + 8, top_label, "end");
    for (std::size_t j = 0; j < types; ++j) {
      const auto& c = curves[j];
      out << "<polyline class=\"density\" fill=\"none\" stroke=\"" << kPalette[j % kPaletteSize]
          << "\" points=\"";
      for (std::size_t k = 0; k < c.x.size(); ++k) {
        const double d = std::isfinite(c.density[k]) ? std::min(c.density[k], y_max) : y_max;
        if (k) out << ' ';
        out << num(ox + panel_w * c.x[k]) << ',' << num(oy + panel_h * (1.0 - d / y_max));
      }
      out << "\"/>\n";
    }
    out << "</g>\n";
  }
  for (std::size_t j = 0; j < types; ++j) {
    const double lx = width - 70;
    const double ly = top + 16.0 * static_cast<double>(j);
    line(out, lx, ly + 6, lx + 14, ly + 6, kPalette[j % kPaletteSize]);
    text(out, lx + 18, ly + 10, "type " + model.typology().label(j), "start");
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace dirimult
