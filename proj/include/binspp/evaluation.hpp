#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "binspp/spp_target.hpp"

namespace binspp {

struct RocPoint {
  double p_fa = 0.0;
  double p_d = 0.0;
  double threshold = 0.0;  // +inf for the (0,0) point
};

/// Operating points sorted by p_fa, from (0,0) to (1,1).
struct RocCurve {
  std::vector<RocPoint> points;
};

/// Exact ROC: scores are swept in descending order and equal scores form a
/// single operating point.
RocCurve roc_curve(std::span<const double> scores, std::span<const std::uint8_t> labels);

/// Trapezoidal area under the curve.
double auc(const RocCurve& c);

/// Detection probability at the given false-alarm rate, linearly
/// interpolated between the bracketing points. At an abscissa shared by
/// several points the lowest p_d is used, so pd_at_pfa(c, 0) == 0.
double pd_at_pfa(const RocCurve& c, double pfa = 0.05);

struct EstimatorInfo {
  std::string estimator;
  std::string dataset;
  std::string config_fingerprint;
  std::size_t params = 0;
  std::size_t macs_per_frame = 0;
};

struct MetricsReport {
  std::string estimator;
  std::string dataset;
  std::string config_fingerprint;
  double auc = 0.0;
  double pd_at_pfa05 = 0.0;
  std::size_t params = 0;
  std::size_t macs_per_frame = 0;
  std::string mac_convention;
  std::size_t pooled_bins = 0;
  std::size_t speech_bins = 0;
  std::string roc_csv;  // path of the ROC point file, if written

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

struct Evaluation {
  MetricsReport report;
  RocCurve curve;
};

/// Pools every T-F bin of every utterance into one score/label set.
Evaluation evaluate(std::span<const SppMatrix> scores, std::span<const LabelMatrix> labels,
                    const EstimatorInfo& info);

std::string report_to_json(const MetricsReport& r);
MetricsReport report_from_json(const std::string& text);

/// CSV with header threshold,p_fa,p_d.
std::string roc_to_csv(const RocCurve& c);
RocCurve roc_from_csv(const std::string& text);

/// Merged comparison table: estimator,pd_at_pfa05,auc,params,macs_per_frame,
/// sorted by AUC descending.
std::string comparison_table_csv(std::vector<MetricsReport> reports);

/// Gnuplot script overlaying each report's ROC CSV with a P_fa = 0.05 marker.
std::string gnuplot_script(const std::vector<MetricsReport>& reports,
                           const std::string& output_png = "roc.png");

/// MACs of each model-based report relative to the largest one (0 for
/// reports without a model).
std::vector<double> mac_ratios(const std::vector<MetricsReport>& reports);

}  // namespace binspp
