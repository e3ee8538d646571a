#include "binspp/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "binspp/error.hpp"
#include "binspp/model.hpp"

namespace binspp {

using json = nlohmann::json;

RocCurve roc_curve(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size())
    throw Error(ErrorCode::LengthMismatch, std::to_string(scores.size()) + " scores vs " +
                                               std::to_string(labels.size()) + " labels");
  std::size_t positives = 0;
  for (auto l : labels) positives += l ? 1 : 0;
  const std::size_t negatives = labels.size() - positives;
  if (positives == 0 || negatives == 0)
    throw Error(ErrorCode::SingleClass, "ROC needs both speech and non-speech bins");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocCurve c;
  c.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double s = scores[order[i]];
    while (i < order.size() && scores[order[i]] == s) {
      if (labels[order[i]]) ++tp; else ++fp;
      ++i;
    }
    c.points.push_back({static_cast<double>(fp) / static_cast<double>(negatives),
                        static_cast<double>(tp) / static_cast<double>(positives), s});
  }
  return c;
}

double auc(const RocCurve& c) {
  double area = 0.0;
  for (std::size_t i = 1; i < c.points.size(); ++i) {
    const auto& a = c.points[i - 1];
    const auto& b = c.points[i];
    area += (b.p_fa - a.p_fa) * (a.p_d + b.p_d) * 0.5;
  }
  return area;
}

double pd_at_pfa(const RocCurve& c, double pfa) {
  if (c.points.empty()) return 0.0;
  pfa = std::clamp(pfa, 0.0, 1.0);
  const auto it = std::lower_bound(c.points.begin(), c.points.end(), pfa,
                                   [](const RocPoint& p, double v) { return p.p_fa < v; });
  if (it == c.points.end()) return c.points.back().p_d;
  if (it->p_fa == pfa || it == c.points.begin()) return it->p_d;
  const auto& lo = *(it - 1);
  const auto& hi = *it;
  const double t = (pfa - lo.p_fa) / (hi.p_fa - lo.p_fa);
  return lo.p_d + t * (hi.p_d - lo.p_d);
}

Evaluation evaluate(std::span<const SppMatrix> scores, std::span<const LabelMatrix> labels,
                    const EstimatorInfo& info) {
  if (scores.size() != labels.size())
    throw Error(ErrorCode::ShapeMismatch, std::to_string(scores.size()) + " score matrices vs " +
                                              std::to_string(labels.size()) + " label matrices");
  std::vector<double> s;
  std::vector<std::uint8_t> l;
  for (std::size_t u = 0; u < scores.size(); ++u) {
    if (scores[u].bins() != labels[u].bins() || scores[u].frames() != labels[u].frames())
      throw Error(ErrorCode::ShapeMismatch, "utterance " + std::to_string(u) + ": scores " +
                                                std::to_string(scores[u].bins()) + "x" +
                                                std::to_string(scores[u].frames()) + ", labels " +
                                                std::to_string(labels[u].bins()) + "x" +
                                                std::to_string(labels[u].frames()));
    s.insert(s.end(), scores[u].values.data().begin(), scores[u].values.data().end());
    l.insert(l.end(), labels[u].values.data().begin(), labels[u].values.data().end());
  }

  Evaluation e;
  e.curve = roc_curve(s, l);
  auto& r = e.report;
  r.estimator = info.estimator;
  r.dataset = info.dataset;
  r.config_fingerprint = info.config_fingerprint;
  r.auc = auc(e.curve);
  r.pd_at_pfa05 = pd_at_pfa(e.curve, 0.05);
  r.params = info.params;
  r.macs_per_frame = info.macs_per_frame;
  r.mac_convention = kMacConvention;
  r.pooled_bins = s.size();
  r.speech_bins = static_cast<std::size_t>(std::count(l.begin(), l.end(), std::uint8_t{1}));
  return e;
}

std::string report_to_json(const MetricsReport& r) {
  json j = {{"estimator", r.estimator},
            {"dataset", r.dataset},
            {"config_fingerprint", r.config_fingerprint},
            {"auc", r.auc},
            {"pd_at_pfa05", r.pd_at_pfa05},
            {"params", r.params},
            {"macs_per_frame", r.macs_per_frame},
            {"mac_convention", r.mac_convention},
            {"pooled_bins", r.pooled_bins},
            {"speech_bins", r.speech_bins},
            {"roc_csv", r.roc_csv}};
  return j.dump(2) + "\n";
}

MetricsReport report_from_json(const std::string& text) {
  MetricsReport r;
  try {
    const json j = json::parse(text);
    r.estimator = j.at("estimator").get<std::string>();
    r.dataset = j.at("dataset").get<std::string>();
    r.config_fingerprint = j.at("config_fingerprint").get<std::string>();
    r.auc = j.at("auc").get<double>();
    r.pd_at_pfa05 = j.at("pd_at_pfa05").get<double>();
    r.params = j.at("params").get<std::size_t>();
    r.macs_per_frame = j.at("macs_per_frame").get<std::size_t>();
    r.mac_convention = j.value("mac_convention", std::string{});
    r.pooled_bins = j.value("pooled_bins", std::size_t{0});
    r.speech_bins = j.value("speech_bins", std::size_t{0});
    r.roc_csv = j.value("roc_csv", std::string{});
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::CorruptFile, std::string("malformed report: ") + ex.what());
  }
  if (!(r.auc >= 0.0 && r.auc <= 1.0) || !(r.pd_at_pfa05 >= 0.0 && r.pd_at_pfa05 <= 1.0))
    throw Error(ErrorCode::CorruptFile, "report metrics outside [0, 1]");
  return r;
}

std::string roc_to_csv(const RocCurve& c) {
  std::string out = "threshold,p_fa,p_d\n";
  char buf[96];
  for (const auto& p : c.points) {
    if (std::isinf(p.threshold))
      std::snprintf(buf, sizeof buf, "inf,%.17g,%.17g\n", p.p_fa, p.p_d);
    else
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", p.threshold, p.p_fa, p.p_d);
    out += buf;
  }
  return out;
}

RocCurve roc_from_csv(const std::string& text) {
  RocCurve c;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("threshold,p_fa,p_d", 0) != 0)
    throw Error(ErrorCode::CorruptFile, "ROC CSV lacks its header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    RocPoint p;
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
      throw Error(ErrorCode::CorruptFile, "bad ROC row '" + line + "'");
    const std::string t = line.substr(0, c1);
    p.threshold = t == "inf" ? std::numeric_limits<double>::infinity() : std::stod(t);
    p.p_fa = std::stod(line.substr(c1 + 1, c2 - c1 - 1));
    p.p_d = std::stod(line.substr(c2 + 1));
    c.points.push_back(p);
  }
  return c;
}

std::string comparison_table_csv(std::vector<MetricsReport> reports) {
  std::stable_sort(reports.begin(), reports.end(),
                   [](const MetricsReport& a, const MetricsReport& b) { return a.auc > b.auc; });
  std::string out = "estimator,pd_at_pfa05,auc,params,macs_per_frame\n";
  char buf[256];
  for (const auto& r : reports) {
    std::snprintf(buf, sizeof buf, ",%.6f,%.6f,%zu,%zu\n", r.pd_at_pfa05, r.auc, r.params,
                  r.macs_per_frame);
    out += r.estimator + buf;
  }
  return out;
}

std::string gnuplot_script(const std::vector<MetricsReport>& reports,
                           const std::string& output_png) {
  std::ostringstream gp;
  gp << "set terminal pngcairo size 800,600\n"
     << "set output '" << output_png << "'\n"
     << "set datafile separator ','\n"
     << "set key bottom right\n"
     << "set xlabel 'P_{fa}'\n"
     << "set ylabel 'P_d'\n"
     << "set xrange [0:1]\n"
     << "set yrange [0:1]\n"
     << "set arrow from 0.05,0 to 0.05,1 nohead dashtype 2\n"
     << "plot ";
  bool first = true;
  for (const auto& r : reports) {
    if (r.roc_csv.empty()) continue;
    if (!first) gp << ", \\\n     ";
    first = false;
    char auc_buf[32];
    std::snprintf(auc_buf, sizeof auc_buf, "%.4f", r.auc);
    gp << "'" << r.roc_csv << "' every ::1 using 2:3 with lines title '" << r.estimator
       << " (AUC " << auc_buf << ")'";
  }
  if (first) gp << "x with lines dashtype 3 title 'chance'";
  gp << "\n";
  return gp.str();
}

std::vector<double> mac_ratios(const std::vector<MetricsReport>& reports) {
  std::size_t largest = 0;
  for (const auto& r : reports) largest = std::max(largest, r.macs_per_frame);
  std::vector<double> out;
  for (const auto& r : reports)
    out.push_back(largest == 0 ? 0.0
                               : static_cast<double>(r.macs_per_frame) /
                                     static_cast<double>(largest));
  return out;
}

}  // namespace binspp
