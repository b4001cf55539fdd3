#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "format.hpp"
#include "mfk/app.hpp"
#include "mfk/error.hpp"

namespace mfk::app {

namespace {

using detail::format_double;

// Result object of a stage, or null when the stage did not run or produced nothing.
const Json* stage_result(const Json& report, const char* name) {
  if (!report.is_object() || !report.contains("stages")) return nullptr;
  const Json& st = report["stages"];
  if (!st.contains(name) || !st[name].contains("result")) return nullptr;
  return &st[name]["result"];
}

std::string num(const Json& j) {
  if (j.is_object()) return j.contains("value") ? num(j["value"]) : "";
  if (j.is_number()) return format_double(j.get<double>());
  if (j.is_boolean()) return j.get<bool>() ? "true" : "false";
  return "";
}

double dbl(const Json& j) {
  if (j.is_object()) return j.contains("value") ? dbl(j["value"]) : std::numeric_limits<double>::quiet_NaN();
  return j.is_number() ? j.get<double>() : std::numeric_limits<double>::quiet_NaN();
}

std::string field(const Json& obj, const char* key) { return obj.contains(key) ? num(obj[key]) : ""; }

// Minimal SVG line chart.
struct Series {
  std::string label;
  std::vector<double> x, y;
};

struct Chart {
  std::string title, xlabel, ylabel;
  bool logx = false, logy = false;
  std::vector<Series> series;
  std::vector<std::pair<double, double>> markers;
};

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

std::string svg(const Chart& c) {
  const double W = 640, H = 420, L = 70, R = 160, T = 40, B = 50;
  auto tx = [&](double v) { return c.logx ? std::log10(v) : v; };
  auto ty = [&](double v) { return c.logy ? std::log10(v) : v; };
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& s : c.series)
    for (size_t i = 0; i < s.x.size(); ++i) {
      const double a = tx(s.x[i]), b = ty(s.y[i]);
      if (!std::isfinite(a) || !std::isfinite(b)) continue;
      x0 = std::min(x0, a), x1 = std::max(x1, a), y0 = std::min(y0, b), y1 = std::max(y1, b);
    }
  const bool empty = !(x1 >= x0);
  if (empty) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x0 -= 0.5, x1 += 0.5;
  if (y1 == y0) y0 -= 0.5, y1 += 0.5;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad, y1 += pad;
  auto px = [&](double v) { return L + (tx(v) - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double v) { return H - B - (ty(v) - y0) / (y1 - y0) * (H - T - B); };
  auto f = [](double v) {
    std::ostringstream o;
    o.setf(std::ios::fixed);
    o.precision(2);
    o << v;
    return o.str();
  };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
    << ' ' << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << c.title << "</text>\n";
  o << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  // Ticks: five per axis, in data units (decades on log axes).
  for (int i = 0; i <= 4; ++i) {
    const double xv = x0 + (x1 - x0) * i / 4, yv = y0 + (y1 - y0) * i / 4;
    const double sx = L + (W - L - R) * i / 4, sy = H - B - (H - T - B) * i / 4;
    const std::string xl = c.logx ? "1e" + f(xv) : f(xv);
    const std::string yl = c.logy ? "1e" + f(yv) : f(yv);
    o << "<line x1=\"" << f(sx) << "\" y1=\"" << H - B << "\" x2=\"" << f(sx) << "\" y2=\"" << H - B + 5
      << "\" stroke=\"black\"/><text x=\"" << f(sx) << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\">" << xl
      << "</text>\n";
    o << "<line x1=\"" << L - 5 << "\" y1=\"" << f(sy) << "\" x2=\"" << L << "\" y2=\"" << f(sy)
      << "\" stroke=\"black\"/><text x=\"" << L - 8 << "\" y=\"" << f(sy + 4) << "\" text-anchor=\"end\">" << yl
      << "</text>\n";
  }
  o << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">" << c.xlabel
    << "</text>\n";
  o << "<text x=\"16\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
    << (T + H - B) / 2 << ")\">" << c.ylabel << "</text>\n";
  if (empty)
    o << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\">no data</text>\n";

  for (size_t k = 0; k < c.series.size(); ++k) {
    const auto& s = c.series[k];
    const char* col = kColors[k % 8];
    o << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"2\" points=\"";
    bool first = true;
    for (size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(tx(s.x[i])) || !std::isfinite(ty(s.y[i]))) continue;
      o << (first ? "" : " ") << f(px(s.x[i])) << ',' << f(py(s.y[i]));
      first = false;
    }
    o << "\"/>\n";
    if (c.logx || c.logy)
      for (size_t i = 0; i < s.x.size(); ++i)
        if (std::isfinite(tx(s.x[i])) && std::isfinite(ty(s.y[i])))
          o << "<circle cx=\"" << f(px(s.x[i])) << "\" cy=\"" << f(py(s.y[i])) << "\" r=\"3\" fill=\"" << col
            << "\"/>\n";
    if (!s.label.empty()) {
      const double ly = T + 16 + 18 * k;
      o << "<line x1=\"" << W - R + 12 << "\" y1=\"" << ly - 4 << "\" x2=\"" << W - R + 32 << "\" y2=\"" << ly - 4
        << "\" stroke=\"" << col << "\" stroke-width=\"2\"/><text x=\"" << W - R + 38 << "\" y=\"" << ly << "\">"
        << s.label << "</text>\n";
    }
  }
  for (const auto& [mx, my] : c.markers)
    if (std::isfinite(mx) && std::isfinite(my))
      o << "<circle cx=\"" << f(px(mx)) << "\" cy=\"" << f(py(my)) << "\" r=\"4\" fill=\"none\" stroke=\"black\"/>\n";
  o << "</svg>\n";
  return o.str();
}

void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  out << content;
  out.close();
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write '" + p.string() + "'");
}

}  // namespace

std::string landscape_csv(const Json& report) {
  std::string out = "m,hbar\n";
  const Json* r = stage_result(report, "landscape");
  if (!r || !r->contains("curve")) return out;
  const Json& c = (*r)["curve"];
  for (size_t i = 0; i < c["m"].size(); ++i) out += num(c["m"][i]) + "," + num(c["hbar"][i]) + "\n";
  return out;
}

std::string predictions_csv(const Json& report) {
  std::string out =
      "N,log_mean_time,mean_time,mc_mean,mc_se,mc_ci_low,mc_ci_high,ratio,within_factor3,dt_half_mean,dt_shift,"
      "discretization_bias\n";
  const Json* p = stage_result(report, "predict");
  const Json* s = stage_result(report, "simulate");
  // Rows come from predict when present, else from simulate.
  std::vector<int> Ns;
  auto collect = [&](const Json* r, const char* key) {
    if (!r) return;
    for (const auto& e : (*r)[key])
      if (std::find(Ns.begin(), Ns.end(), e["N"].get<int>()) == Ns.end()) Ns.push_back(e["N"].get<int>());
  };
  collect(p, "predictions");
  collect(s, "runs");
  auto find = [](const Json* r, const char* key, int N) -> const Json* {
    if (!r) return nullptr;
    for (const auto& e : (*r)[key])
      if (e["N"].get<int>() == N) return &e;
    return nullptr;
  };
  for (int N : Ns) {
    const Json* pe = find(p, "predictions", N);
    const Json* se = find(s, "runs", N);
    std::string logt, t;
    if (pe && pe->contains("mean_time")) {
      logt = num((*pe)["mean_time"]["log"]);
      t = num((*pe)["mean_time"]["value"]);
    } else if (se && se->contains("prediction")) {
      logt = num((*se)["prediction"]["log"]);
      t = num((*se)["prediction"]["value"]);
    }
    out += std::to_string(N) + "," + logt + "," + t;
    if (se && se->contains("estimate")) {
      const Json& e = (*se)["estimate"];
      out += "," + field(e, "mean") + "," + field(e, "se") + "," + field(e, "ci_low") + "," + field(e, "ci_high") + "," +
             field(*se, "ratio") + "," + field(*se, "within_factor3");
      if (se->contains("dt_halving")) {
        const Json& d = (*se)["dt_halving"];
        out += "," + field(d, "mean") + "," + field(d, "shift") + "," + field(d, "discretization_bias");
      } else {
        out += ",,,";
      }
    } else {
      out += ",,,,,,,,,";
    }
    out += "\n";
  }
  return out;
}

std::string cramer_csv(const Json& report) {
  std::string out = "N,m,phi_N,phi,phi2,ratio,deviation\n";
  const Json* r = stage_result(report, "verify-cramer");
  if (!r) return out;
  for (const auto& row : (*r)["rows"])
    out += num(row["N"]) + "," + num(row["m"]) + "," + num(row["phi_N"]) + "," + num(row["phi"]) + "," +
           num(row["phi2"]) + "," + num(row["ratio"]) + "," + num(row["deviation"]) + "\n";
  return out;
}

std::string observables_csv(const Json& report) {
  std::string out = "observable,N,m,fiber,tilted,gap\n";
  const Json* r = stage_result(report, "verify-observables");
  if (!r) return out;
  const std::string name = (*r)["observable"].get<std::string>();
  for (const auto& row : (*r)["rows"])
    out += "\"" + name + "\"," + num(row["N"]) + "," + num(row["m"]) + "," + num(row["fiber"]) + "," +
           num(row["tilted"]) + "," + num(row["gap"]) + "\n";
  return out;
}

std::string laplace_csv(const Json& report) {
  std::string out = "k,parity,eps,laplace,oracle,relative_error\n";
  const Json* r = stage_result(report, "verify-laplace");
  if (!r) return out;
  for (const auto& row : (*r)["rows"])
    out += num(row["k"]) + "," + row["parity"].get<std::string>() + "," + num(row["eps"]) + "," + num(row["laplace"]) +
           "," + num(row["oracle"]) + "," + num(row["relative_error"]) + "\n";
  return out;
}

std::string landscape_svg(const Json& report) {
  Chart c;
  c.title = "Macroscopic free energy";
  c.xlabel = "m";
  c.ylabel = "Hbar(m)";
  if (const Json* r = stage_result(report, "landscape"); r && r->contains("curve")) {
    Series s;
    for (size_t i = 0; i < (*r)["curve"]["m"].size(); ++i) {
      s.x.push_back(dbl((*r)["curve"]["m"][i]));
      s.y.push_back(dbl((*r)["curve"]["hbar"][i]));
    }
    c.series.push_back(std::move(s));
    const double m = dbl((*r)["m_star"]);
    c.markers = {{-m, dbl((*r)["hbar_minus"])}, {0.0, dbl((*r)["hbar_zero"])}, {m, dbl((*r)["hbar_plus"])}};
  }
  return svg(c);
}

std::string laplace_svg(const Json& report) {
  Chart c;
  c.title = "Laplace relative error";
  c.xlabel = "eps";
  c.ylabel = "relative error";
  c.logx = c.logy = true;
  if (const Json* r = stage_result(report, "verify-laplace")) {
    for (const auto& row : (*r)["rows"]) {
      const std::string label = "k=" + num(row["k"]) + " " + row["parity"].get<std::string>();
      auto it = std::find_if(c.series.begin(), c.series.end(), [&](const Series& s) { return s.label == label; });
      if (it == c.series.end()) {
        c.series.push_back(Series{label, {}, {}});
        it = c.series.end() - 1;
      }
      it->x.push_back(dbl(row["eps"]));
      it->y.push_back(dbl(row["relative_error"]));
    }
  }
  return svg(c);
}

void render_report(const Json& report, const std::filesystem::path& out) {
  std::error_code ec;
  std::filesystem::create_directories(out, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot create '" + out.string() + "': " + ec.message());
  write_file(out / "landscape.csv", landscape_csv(report));
  write_file(out / "landscape.svg", landscape_svg(report));
  write_file(out / "predictions.csv", predictions_csv(report));
  write_file(out / "cramer_verification.csv", cramer_csv(report));
  write_file(out / "observables_verification.csv", observables_csv(report));
  write_file(out / "laplace_errors.csv", laplace_csv(report));
  write_file(out / "laplace_errors.svg", laplace_svg(report));
}

void write_outputs(const RunResult& result, const std::filesystem::path& out) {
  render_report(result.report, out);
  write_file(out / "report.json", result.report.dump(2) + "\n");
  write_file(out / "timing.json", result.timing.dump(2) + "\n");
  for (const auto& [name, content] : result.files) write_file(out / name, content);
}

}  // namespace mfk::app
