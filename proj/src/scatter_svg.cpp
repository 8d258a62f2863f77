#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>

#include "leafmetric/error.hpp"
#include "leafmetric/eval.hpp"

namespace leafmetric::eval {
namespace {

constexpr double kSize = 480.0;
constexpr double kMargin = 64.0;

std::string xml_escape(std::string_view s) {
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

std::string fmt(const char* pattern, double a) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), pattern, a);
  return buf;
}

}  // namespace

std::string scatter_svg(std::span<const double> pred, std::span<const double> truth,
                        std::string_view title) {
  if (pred.size() != truth.size() || pred.empty()) {
    throw std::invalid_argument("scatter_svg: needs equal, non-empty inputs");
  }
  double lo = std::min(*std::min_element(pred.begin(), pred.end()),
                       *std::min_element(truth.begin(), truth.end()));
  double hi = std::max(*std::max_element(pred.begin(), pred.end()),
                       *std::max_element(truth.begin(), truth.end()));
  const double pad = hi > lo ? 0.05 * (hi - lo) : 1.0;
  lo -= pad;
  hi += pad;

  const double span = kSize - 2.0 * kMargin;
  auto px = [&](double x) { return kMargin + (x - lo) / (hi - lo) * span; };
  auto py = [&](double y) { return kSize - kMargin - (y - lo) / (hi - lo) * span; };
  auto pt = [&](double v) { return fmt("%.4f", v); };

  std::string s;
  s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"480\" height=\"480\" viewBox=\"0 0 480 480\">\n";
  s += "<defs><clipPath id=\"plot\"><rect x=\"" + pt(kMargin) + "\" y=\"" + pt(kMargin) +
       "\" width=\"" + pt(span) + "\" height=\"" + pt(span) + "\"/></clipPath></defs>\n";
  s += "<rect x=\"0\" y=\"0\" width=\"480\" height=\"480\" fill=\"white\"/>\n";
  s += "<text x=\"240\" y=\"28\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">" +
       xml_escape(title) + "</text>\n";

  // Axes and ticks.
  s += "<g stroke=\"black\" stroke-width=\"1\">\n";
  s += "<line x1=\"" + pt(kMargin) + "\" y1=\"" + pt(kSize - kMargin) + "\" x2=\"" +
       pt(kSize - kMargin) + "\" y2=\"" + pt(kSize - kMargin) + "\"/>\n";
  s += "<line x1=\"" + pt(kMargin) + "\" y1=\"" + pt(kMargin) + "\" x2=\"" + pt(kMargin) +
       "\" y2=\"" + pt(kSize - kMargin) + "\"/>\n";
  s += "</g>\n<g font-family=\"sans-serif\" font-size=\"11\">\n";
  for (int k = 0; k <= 4; ++k) {
    const double v = lo + (hi - lo) * k / 4.0;
    s += "<text x=\"" + pt(px(v)) + "\" y=\"" + pt(kSize - kMargin + 16) +
         "\" text-anchor=\"middle\">" + fmt("%.1f", v) + "</text>\n";
    s += "<text x=\"" + pt(kMargin - 6) + "\" y=\"" + pt(py(v) + 4) +
         "\" text-anchor=\"end\">" + fmt("%.1f", v) + "</text>\n";
  }
  s += "<text x=\"240\" y=\"" + pt(kSize - 18) +
       "\" text-anchor=\"middle\">Ground truth (mm)</text>\n";
  s += "<text x=\"18\" y=\"240\" text-anchor=\"middle\" transform=\"rotate(-90 18 240)\">Estimated (mm)</text>\n";
  s += "</g>\n";

  s += "<line id=\"identity\" x1=\"" + pt(px(lo)) + "\" y1=\"" + pt(py(lo)) + "\" x2=\"" +
       pt(px(hi)) + "\" y2=\"" + pt(py(hi)) +
       "\" stroke=\"gray\" stroke-dasharray=\"4 3\" clip-path=\"url(#plot)\"/>\n";

  // Least-squares line of estimate on truth.
  const double n = static_cast<double>(pred.size());
  double mt = 0.0, mp = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    mt += truth[i];
    mp += pred[i];
  }
  mt /= n;
  mp /= n;
  double stt = 0.0, stp = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    stt += (truth[i] - mt) * (truth[i] - mt);
    stp += (truth[i] - mt) * (pred[i] - mp);
  }
  if (stt > 0.0) {
    const double slope = stp / stt;
    const double icpt = mp - slope * mt;
    s += "<line id=\"fit\" x1=\"" + pt(px(lo)) + "\" y1=\"" + pt(py(icpt + slope * lo)) +
         "\" x2=\"" + pt(px(hi)) + "\" y2=\"" + pt(py(icpt + slope * hi)) +
         "\" stroke=\"#d62728\" stroke-width=\"1.5\" clip-path=\"url(#plot)\"/>\n";
  }

  s += "<g fill=\"#1f77b4\" fill-opacity=\"0.8\">\n";
  for (std::size_t i = 0; i < pred.size(); ++i) {
    s += "<circle cx=\"" + pt(px(truth[i])) + "\" cy=\"" + pt(py(pred[i])) + "\" r=\"3\"/>\n";
  }
  s += "</g>\n";

  std::string label = "RMSE = " + fmt("%.2f", rmse(pred, truth)) + " mm, R\xC2\xB2 = ";
  if (pred.size() >= 2 && stt > 0.0) {
    label += fmt("%.3f", r_squared(pred, truth));
  } else {
    label += "n/a";
  }
  s += "<text x=\"" + pt(kMargin + 8) + "\" y=\"" + pt(kMargin + 16) +
       "\" font-family=\"sans-serif\" font-size=\"12\">" + label + "</text>\n";
  s += "</svg>\n";
  return s;
}

}  // namespace leafmetric::eval
