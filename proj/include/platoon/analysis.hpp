#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "platoon/segments.hpp"
#include "platoon/trajectory.hpp"

namespace platoon {

// --- gaps -------------------------------------------------------------------

enum class GapReference { Follower, Preceding };
std::string to_string(GapReference reference);
GapReference parse_gap_reference(const std::string& text);

inline constexpr double kMinTimeGapSpeed = 1.0;  // m/s

/// Space and time gap of one follower behind its predecessor. A time gap is
/// undefined (nullopt) where the reference speed is below v_min.
struct GapSeries {
  std::string leader_id;
  std::string follower_id;
  std::vector<double> t;
  std::vector<double> space_gap;
  std::vector<std::optional<double>> time_gap;
  std::vector<double> reference_speed;

  std::vector<double> defined_time_gaps() const;
};

std::vector<GapSeries> compute_gaps(const PlatoonDataset& dataset,
                                    GapReference reference = GapReference::Follower,
                                    double v_min = kMinTimeGapSpeed);

// --- histograms -------------------------------------------------------------

struct SummaryStats {
  std::size_t count = 0;
  double mean = 0.0;
  double median = 0.0;
  double stddev = 0.0;  // population
};
SummaryStats summarize(std::span<const double> values);

/// Normalized frequency histogram. Bins are [edges[k], edges[k+1]); the last
/// bin also holds its right edge.
struct Histogram {
  std::vector<double> edges;
  std::vector<double> mass;
  SummaryStats stats;

  std::size_t bins() const noexcept { return mass.size(); }
  /// Center of the heaviest bin (first one on ties).
  double mode() const;
};

/// Bins aligned to integer multiples of `width`, spanning the data.
Histogram histogram(std::span<const double> values, double width);

struct GapHistograms {
  Histogram time_gap;
  Histogram space_gap;
};

/// Throws DataError when no time gap is defined.
GapHistograms gap_histograms(const GapSeries& gaps, double time_bin = 0.1,
                             double space_bin = 1.0);
/// Pools several pairs, e.g. every follower of a campaign.
GapHistograms gap_histograms(std::span<const GapSeries> gaps, double time_bin = 0.1,
                             double space_bin = 1.0);

/// Ordinary least-squares fit y = intercept + slope * x.
struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  std::size_t count = 0;
};
LinearFit least_squares(std::span<const double> x, std::span<const double> y);

/// (reference speed, time gap) points where the time gap is defined.
struct GapSpeedScatter {
  std::vector<double> speed;
  std::vector<double> time_gap;
  std::vector<double> space_gap;
};
GapSpeedScatter gap_speed_scatter(const GapSeries& gaps);

// --- segmentation -----------------------------------------------------------

struct SegmentationOptions {
  double accel_threshold = 0.3;  // m/s^2
  double min_duration = 5.0;     // s
  double pad = 2.0;              // s
};

/// Perturbation where |a_leader| exceeds the threshold (padded, merged when
/// closer than min_duration); Steady elsewhere. Intervals shorter than
/// min_duration are absorbed by their neighbours.
SegmentLabel segment_steady_perturbation(const Trajectory& leader,
                                         const SegmentationOptions& options = {});

/// Population standard deviation of speed for each vehicle over the samples
/// of `segment`. Throws DataError when the class holds no samples.
std::vector<double> speed_std(const PlatoonDataset& dataset, const SegmentLabel& labels,
                              SegmentClass segment);

// --- string stability -------------------------------------------------------

/// Result for one follower within one perturbation interval.
struct PairStability {
  std::string vehicle_id;
  std::optional<double> l2_ratio;  // undefined when the head barely moves
  double overshoot_peak = 0.0;     // max(v_follower) - max(v_head), m/s
};

struct IntervalStability {
  Segment interval;
  std::vector<PairStability> followers;  // platoon order, head excluded
  bool strictly_increasing = false;
  bool all_attenuated = false;           // every defined ratio <= 1
};

enum class StabilityVerdict { Amplifying, Attenuating, Indeterminate };
std::string to_string(StabilityVerdict verdict);

struct StabilityMetrics {
  std::vector<IntervalStability> intervals;
  StabilityVerdict verdict = StabilityVerdict::Indeterminate;
};

inline constexpr double kMinLeaderDeviationNorm = 1e-6;

/// L2 ratio of speed deviations (from each vehicle's own interval mean) of
/// `follower` against `head` over samples [first, last].
PairStability l2_pair(const Trajectory& head, const Trajectory& follower, std::size_t first,
                      std::size_t last, double min_norm = kMinLeaderDeviationNorm);

/// Evaluates every follower against the platoon head over every perturbation
/// interval. Amplifying when ratios strictly increase along the chain in a
/// majority of intervals; Attenuating when every ratio is <= 1 in a majority.
StabilityMetrics l2_amplification(const PlatoonDataset& dataset, const SegmentLabel& labels,
                                  double min_norm = kMinLeaderDeviationNorm);

// --- joint distributions ----------------------------------------------------

/// Probability map over speed x acceleration cells, row-major by speed.
struct JointDistribution {
  std::vector<double> v_edges;
  std::vector<double> a_edges;
  std::vector<double> mass;
  std::size_t sample_count = 0;
  std::size_t clipped_count = 0;

  std::size_t v_bins() const noexcept { return v_edges.size() - 1; }
  std::size_t a_bins() const noexcept { return a_edges.size() - 1; }
  double at(std::size_t iv, std::size_t ia) const { return mass.at(iv * a_bins() + ia); }
};

/// Edges at multiples of `width` covering [min, max] of the values.
std::vector<double> auto_edges(std::span<const double> values, double width);

/// Out-of-range samples are clipped into the edge bins and counted.
JointDistribution joint_distribution(const Trajectory& traj, std::span<const double> v_edges,
                                     std::span<const double> a_edges);

/// Pearson correlation between two maps' flattened cell vectors.
double map_correlation(const JointDistribution& lhs, const JointDistribution& rhs);
double pearson(std::span<const double> x, std::span<const double> y);

/// Leader-to-follower correlation of joint maps for every follower, on edges
/// fitted to the whole platoon. Entry k is C1 vs vehicle k+1.
struct CorrelationRow {
  std::string label;
  std::vector<std::string> pairs;  // "C1-C2", ...
  std::vector<double> r;
};
CorrelationRow leader_correlations(const PlatoonDataset& dataset, double v_bin = 1.0,
                                   double a_bin = 0.1);

}  // namespace platoon
