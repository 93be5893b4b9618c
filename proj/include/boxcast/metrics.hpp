#pragma once

#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "boxcast/backends.hpp"

namespace boxcast {

/// 2 iou iog / (iou + iog); 0 when both are 0.
double f1(double iou, double iog);

/// Minimum over the 6 axis permutations of sum |d_perm - d_gt|.
double err_dim(const Vec3& d, const Vec3& d_gt);

/// Minimum of 2 acos(|<q, q'>|) over the rotations q' = q_gt P of the
/// ground truth's equivalent parameterizations (P in symmetry_group(mode)).
double err_quat(const Quaternion& q, const Quaternion& q_gt, SymmetryMode mode);
double err_quat(const BoxParams& pred, const BoxParams& gt, SymmetryMode mode);

double err_center(const Vec3& c, const Vec3& c_gt);

struct EvalPair {
  std::string id;
  std::string method;
  BoxParams pred;
  BoxParams gt;
  SymmetryMode symmetry = SymmetryMode::none;
  std::optional<double> score;
};

struct ObjectMetrics {
  std::string id;
  std::string method;
  double iou = 0.0;
  double iog = 0.0;
  double f1 = 0.0;
  double err_dim = 0.0;
  double err_quat = 0.0;
  double err_center = 0.0;
  std::optional<double> score;
  bool degenerate_gt = false;
};

ObjectMetrics evaluate_pair(const EvalPair& p);

struct AggregateMetrics {
  std::string method;
  std::size_t n = 0;
  double mean_iou = 0.0;
  double mean_iog = 0.0;
  /// f1(mean_iou, mean_iog).
  double f1 = 0.0;
  double err_dim = 0.0;
  double err_quat = 0.0;
  double err_center = 0.0;
};

/// One aggregate per method, in order of first appearance.
std::vector<AggregateMetrics> aggregate(std::span<const ObjectMetrics> rows);

struct CurveSample {
  double q = 0.0;
  BoxParams pred;
  BoxParams gt;
};

struct CurvePoint {
  double q = 0.0;
  double f = 0.0;
  std::size_t n = 0;
};

inline constexpr double kContainmentIog = 0.95;

/// f(q) = fraction of pairs at quantile q with iog(pred, gt) > 0.95,
/// sorted by q.
std::vector<CurvePoint> containment_curve(std::span<const CurveSample> samples);

struct UncertaintyQuality {
  /// Absent when only one class is present.
  std::optional<double> roc_auc;
  /// Absent when either side has no rank variance.
  std::optional<double> spearman;
};

/// Average ranks (1-based) with ties sharing their mean rank.
std::vector<double> average_ranks(std::span<const double> values);

/// AUC of the score for the positive class 1{iou < threshold}, by the
/// Mann-Whitney rank statistic; Spearman r between score and iou.
UncertaintyQuality uncertainty_quality(std::span<const double> scores, std::span<const double> ious,
                                       double iou_threshold = 0.25);

/// G = sigma_dx sigma_dy sigma_dz / (mu_dx mu_dy mu_dz). Throws on a
/// non-positive mean.
double gaussian_uncertainty(const Vec3& mu, const Vec3& sigma);
double gaussian_uncertainty(const GaussianBaseline& g, const Context& ctx);

struct MetricsReport {
  std::vector<ObjectMetrics> rows;
  std::vector<AggregateMetrics> aggregates;
  std::vector<CurvePoint> curve;
  std::optional<UncertaintyQuality> uncertainty;
};

/// Columns: id,method,iou,iog,f1,err_dim,err_quat,err_center,score
void write_rows_csv(std::ostream& out, std::span<const ObjectMetrics> rows);
/// Columns: method,n,mean_iou,mean_iog,f1,err_dim,err_quat,err_center
void write_aggregate_csv(std::ostream& out, std::span<const AggregateMetrics> rows);
/// Columns: q,f,n
void write_curve_csv(std::ostream& out, std::span<const CurvePoint> curve);

}  // namespace boxcast
