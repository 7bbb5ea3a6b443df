#pragma once

// Output plumbing: deterministic CSV (17 significant digits), minimal SVG
// polyline plots, and atomic file writes (temp + rename).

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "eptrap/errors.hpp"
#include "eptrap/sweeps.hpp"

namespace eptrap {

inline std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void write_text_atomic(const std::filesystem::path& path,
                              const std::string& content) {
  namespace fs = std::filesystem;
  fs::path dir = path.parent_path();
  if (!dir.empty()) fs::create_directories(dir);
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot open " + tmp.string() + " for writing");
    out << content;
    if (!out.flush()) throw ConfigError("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

// branches CSV: one row per (sample, branch)
inline std::string csv_branches(const std::vector<Branch>& branches,
                                const std::vector<double>& samples) {
  std::string out = "param, branch, re_z, im_z, gamma, a_k, r_k\n";
  for (std::size_t i = 0; i < samples.size(); ++i)
    for (std::size_t k = 0; k < branches.size(); ++k) {
      const Branch& br = branches[k];
      out += fmt17(samples[i]) + ", " + std::to_string(br.label) + ", " +
             fmt17(br.z[i].real()) + ", " + fmt17(br.z[i].imag()) + ", " +
             fmt17(br.width(i)) + ", " + fmt17(br.a_k[i]) + ", " +
             fmt17(br.r_k[i]) + "\n";
    }
  return out;
}

// generic series CSV with a header comment naming the observable
inline std::string csv_series(const std::string& name,
                              const std::vector<double>& x,
                              const std::vector<double>& y) {
  if (x.size() != y.size()) throw DimensionError("series lengths differ");
  std::string out = "# " + name + " (model units, hbar = 1)\nx, value\n";
  for (std::size_t i = 0; i < x.size(); ++i)
    out += fmt17(x[i]) + ", " + fmt17(y[i]) + "\n";
  return out;
}

// plain polyline plot, one series per call
inline std::string svg_plot(const std::string& title,
                            const std::vector<double>& x,
                            const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw DimensionError("plot needs matching series with >= 2 points");
  const double w = 640, h = 400, ml = 60, mr = 20, mt = 30, mb = 40;
  double xmin = x[0], xmax = x[0], ymin = y[0], ymax = y[0];
  for (std::size_t i = 1; i < x.size(); ++i) {
    xmin = std::min(xmin, x[i]);
    xmax = std::max(xmax, x[i]);
    ymin = std::min(ymin, y[i]);
    ymax = std::max(ymax, y[i]);
  }
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymax = ymin + 1;
  auto px = [&](double v) { return ml + (v - xmin) / (xmax - xmin) * (w - ml - mr); };
  auto py = [&](double v) { return h - mb - (v - ymin) / (ymax - ymin) * (h - mt - mb); };
  char buf[256];
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" "
                  "height=\"400\" viewBox=\"0 0 640 400\">\n";
  std::snprintf(buf, sizeof(buf),
                "<text x=\"%g\" y=\"20\" font-size=\"14\">%s</text>\n", ml,
                title.c_str());
  s += buf;
  std::snprintf(buf, sizeof(buf),
                "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" "
                "stroke=\"black\"/>\n",
                ml, h - mb, w - mr, h - mb);
  s += buf;
  std::snprintf(buf, sizeof(buf),
                "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" "
                "stroke=\"black\"/>\n",
                ml, mt, ml, h - mb);
  s += buf;
  std::snprintf(buf, sizeof(buf),
                "<text x=\"%g\" y=\"%g\" font-size=\"11\">%.6g</text>\n", ml,
                h - mb + 16, xmin);
  s += buf;
  std::snprintf(buf, sizeof(buf),
                "<text x=\"%g\" y=\"%g\" font-size=\"11\">%.6g</text>\n",
                w - mr - 40, h - mb + 16, xmax);
  s += buf;
  std::snprintf(buf, sizeof(buf),
                "<text x=\"4\" y=\"%g\" font-size=\"11\">%.6g</text>\n",
                h - mb, ymin);
  s += buf;
  std::snprintf(buf, sizeof(buf),
                "<text x=\"4\" y=\"%g\" font-size=\"11\">%.6g</text>\n",
                mt + 8.0, ymax);
  s += buf;
  s += "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\" "
       "points=\"";
  for (std::size_t i = 0; i < x.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", px(x[i]), py(y[i]));
    s += buf;
  }
  s += "\"/>\n</svg>\n";
  return s;
}

}  // namespace eptrap
