#include "fcopf/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>

#include <json.hpp>

namespace fcopf {

using nlohmann::json;

namespace {

std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  std::string s = buf;
  if (s[0] == '-' && s.find_first_not_of("0.", 1) == std::string::npos) s.erase(0, 1);  // no "-0.000"
  return s;
}

std::string cell(const std::optional<double>& v) { return v ? fixed(*v) : "N/A"; }

const char* model_label(ModelKind k) {
  switch (k) {
    case ModelKind::topf: return "T-OPF";
    case ModelKind::lfcopf: return "L-FCOPF";
    case ModelKind::dnnfcopf: return "DNN-FCOPF";
  }
  return "?";
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

std::string report_table(const ComparisonReport& r) {
  std::ostringstream out;
  out << "metric\tcontingency";
  for (const auto& m : r.models) out << '\t' << to_string(m.kind);
  out << '\n';
  auto row = [&](const std::string& metric, const std::string& contingency, auto&& value) {
    out << metric << '\t' << contingency;
    for (const auto& m : r.models) out << '\t' << value(m);
    out << '\n';
  };
  row("cost_pwl_usd_per_h", "-", [](const ModelReport& m) { return fixed(m.dispatch.cost); });
  row("cost_quadratic_usd_per_h", "-", [](const ModelReport& m) { return fixed(m.dispatch.quadratic_cost); });
  if (!r.models.empty())
    for (std::size_t g = 0; g < r.models.front().dispatch.group_output.size(); ++g)
      row("unit_output_mw[group " + std::to_string(g) + "]", "-",
          [g](const ModelReport& m) { return fixed(m.dispatch.group_output[g]); });
  row("same_dispatch_as", "-",
      [](const ModelReport& m) { return m.same_dispatch_as.empty() ? std::string("distinct") : m.same_dispatch_as; });
  for (std::size_t c = 0; c < r.evaluated.size(); ++c) {
    const std::string& name = r.evaluated[c];
    auto chk = [c](const ModelReport& m) -> const ContingencyCheck& { return m.checks[c]; };
    row("predicted_nadir_hz", name, [&](const ModelReport& m) { return cell(chk(m).predicted_nadir); });
    row("simulated_nadir_hz", name, [&](const ModelReport& m) { return fixed(chk(m).simulated.nadir); });
    row("nadir_error_pct", name, [&](const ModelReport& m) { return cell(chk(m).nadir_error); });
    row("predicted_rocof_hz_per_s", name, [&](const ModelReport& m) { return cell(chk(m).predicted_rocof); });
    row("simulated_rocof_hz_per_s", name, [&](const ModelReport& m) { return fixed(chk(m).simulated.rocof); });
    row("rocof_error_pct", name, [&](const ModelReport& m) { return cell(chk(m).rocof_error); });
    row("nadir_threshold_met", name, [&](const ModelReport& m) { return std::string(chk(m).nadir_ok ? "yes" : "no"); });
    row("rocof_threshold_met", name, [&](const ModelReport& m) { return std::string(chk(m).rocof_ok ? "yes" : "no"); });
  }
  return out.str();
}

std::string report_summary(const ComparisonReport& r) {
  json j;
  j["scenario"] = r.scenario;
  j["case_fingerprint"] = r.case_fingerprint;
  j["load_mw"] = r.load_mw;
  j["thresholds"] = {{"nadir_hz", r.nadir_threshold}, {"rocof_hz_per_s", r.rocof_threshold}};
  j["critical_contingency"] = r.critical_contingency;
  j["evaluated"] = r.evaluated;
  j["ood_features"] = r.ood_features;
  j["notes"] = {"DNN-FCOPF and L-FCOPF enforce their frequency rows for every credible contingency",
                "solve times are printed by the CLI and kept out of written files"};
  json models = json::array();
  for (const auto& m : r.models) {
    json checks = json::array();
    for (const auto& c : m.checks)
      checks.push_back({{"contingency", c.contingency},
                        {"specified", c.specified},
                        {"critical", c.critical},
                        {"measurement_bus", c.simulated.bus},
                        {"simulated_nadir", c.simulated.nadir},
                        {"simulated_rocof", c.simulated.rocof},
                        {"predicted_nadir", optional_json(c.predicted_nadir)},
                        {"predicted_rocof", optional_json(c.predicted_rocof)},
                        {"nadir_error_pct", optional_json(c.nadir_error)},
                        {"rocof_error_pct", optional_json(c.rocof_error)},
                        {"nadir_ok", c.nadir_ok},
                        {"rocof_ok", c.rocof_ok}});
    models.push_back({{"model", to_string(m.kind)},
                      {"cost", m.dispatch.cost},
                      {"quadratic_cost", m.dispatch.quadratic_cost},
                      {"unit_output", m.dispatch.group_output},
                      {"nodes", m.dispatch.nodes},
                      {"same_dispatch_as", m.same_dispatch_as.empty() ? json(nullptr) : json(m.same_dispatch_as)},
                      {"passes", m.passes()},
                      {"checks", checks}});
  }
  j["models"] = models;
  return j.dump(2) + "\n";
}

namespace {

constexpr double kWidth = 640, kHeight = 400;
constexpr double kLeft = 70, kRight = 20, kTop = 40, kBottom = 50;
constexpr std::size_t kMaxPoints = 800;

std::string line_plot(const PlotSeries& s, const std::vector<double>& y, double threshold, const std::string& title,
                      const std::string& y_label, const std::string& column) {
  const std::size_t n = s.time.size();
  const std::size_t stride = std::max<std::size_t>(1, (n + kMaxPoints - 1) / kMaxPoints);
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < n; i += stride) idx.push_back(i);
  if (n > 0 && idx.back() != n - 1) idx.push_back(n - 1);

  const double x0 = n ? s.time.front() : 0.0, x1 = n ? s.time.back() : 1.0;
  double y0 = threshold, y1 = threshold;
  for (double v : y) y0 = std::min(y0, v), y1 = std::max(y1, v);
  const double pad = std::max(1e-6, 0.05 * (y1 - y0));
  y0 -= pad;
  y1 += pad;
  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto px = [&](double t) { return kLeft + (x1 > x0 ? (t - x0) / (x1 - x0) : 0.0) * pw; };
  auto py = [&](double v) { return kTop + (y1 - v) / (y1 - y0) * ph; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
    << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << kWidth / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"13\">" << title << "</text>\n";
  o << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 5; ++k) {
    const double t = x0 + (x1 - x0) * k / 5, v = y0 + (y1 - y0) * k / 5;
    o << "<line x1=\"" << fixed(px(t), 2) << "\" y1=\"" << kTop + ph << "\" x2=\"" << fixed(px(t), 2) << "\" y2=\""
      << kTop + ph + 4 << "\" stroke=\"black\"/>";
    o << "<text x=\"" << fixed(px(t), 2) << "\" y=\"" << kTop + ph + 16 << "\" text-anchor=\"middle\">" << fixed(t, 1)
      << "</text>\n";
    o << "<line x1=\"" << kLeft - 4 << "\" y1=\"" << fixed(py(v), 2) << "\" x2=\"" << kLeft << "\" y2=\""
      << fixed(py(v), 2) << "\" stroke=\"black\"/>";
    o << "<text x=\"" << kLeft - 6 << "\" y=\"" << fixed(py(v) + 4, 2) << "\" text-anchor=\"end\">" << fixed(v, 3)
      << "</text>\n";
  }
  o << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 10 << "\" text-anchor=\"middle\">time (s)</text>\n";
  o << "<text transform=\"translate(16 " << kTop + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">" << y_label
    << "</text>\n";
  o << "<line x1=\"" << kLeft << "\" y1=\"" << fixed(py(threshold), 2) << "\" x2=\"" << kLeft + pw << "\" y2=\""
    << fixed(py(threshold), 2) << "\" stroke=\"#c00\" stroke-dasharray=\"6 4\"/>\n";
  o << "<polyline fill=\"none\" stroke=\"#036\" stroke-width=\"1.5\" points=\"";
  for (std::size_t k = 0; k < idx.size(); ++k)
    o << (k ? " " : "") << fixed(px(s.time[idx[k]]), 2) << ',' << fixed(py(y[idx[k]]), 2);
  o << "\"/>\n";
  o << "<!-- data\ntime_s\t" << column << '\n';
  for (auto i : idx) o << fixed(s.time[i], 4) << '\t' << fixed(y[i], 6) << '\n';
  o << "threshold\t" << fixed(threshold, 6) << "\n-->\n</svg>\n";
  return o.str();
}

std::string where(const PlotSeries& s) {
  return s.bus ? "trip " + s.contingency + ", bus " + std::to_string(s.bus) : "trip " + s.contingency + ", COI";
}

}  // namespace

std::string frequency_svg(const PlotSeries& s, double threshold) {
  return line_plot(s, s.frequency, threshold, std::string(model_label(s.kind)) + " frequency, " + where(s),
                   "frequency (Hz)", "frequency_hz");
}

std::string rocof_svg(const PlotSeries& s, double threshold) {
  return line_plot(s, s.rocof, threshold, std::string(model_label(s.kind)) + " RoCoF, " + where(s), "RoCoF (Hz/s)",
                   "rocof_hz_per_s");
}

std::vector<std::string> emit_report(const ComparisonReport& report, const std::vector<PlotSeries>& plots,
                                     const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::io, dir, "cannot create output directory: " + ec.message());
  std::vector<std::string> written;
  auto put = [&](const std::string& name, const std::string& text) {
    write_file(dir + "/" + name, text);
    written.push_back(dir + "/" + name);
  };
  put("table.tsv", report_table(report));
  put("summary.json", report_summary(report));
  for (const auto& s : plots) {
    put(std::string("freq_") + to_string(s.kind) + ".svg", frequency_svg(s, report.nadir_threshold));
    put(std::string("rocof_") + to_string(s.kind) + ".svg", rocof_svg(s, report.rocof_threshold));
  }
  return written;
}

}  // namespace fcopf
