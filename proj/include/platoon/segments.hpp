#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace platoon {

enum class SegmentClass { Whole, Steady, Perturbation };
std::string to_string(SegmentClass segment);

struct Segment {
  double t_start = 0.0;
  double t_end = 0.0;
  SegmentClass segment = SegmentClass::Steady;

  double duration() const noexcept { return t_end - t_start; }
};

/// Contiguous, non-overlapping intervals covering an analysis window. Interval
/// boundaries coincide with sample times of the grid they were built on.
struct SegmentLabel {
  std::vector<Segment> intervals;

  double window_start() const { return intervals.empty() ? 0.0 : intervals.front().t_start; }
  double window_end() const { return intervals.empty() ? 0.0 : intervals.back().t_end; }
  double total_duration(SegmentClass segment) const;
  std::vector<Segment> of_class(SegmentClass segment) const;
  /// Throws std::logic_error unless the intervals tile the window exactly.
  void validate() const;
};

/// Inclusive sample index range [first, last] spanned by `seg` on grid t.
std::pair<std::size_t, std::size_t> sample_range(std::span<const double> t, const Segment& seg);

/// Per-sample membership: a sample belongs to the interval whose half-open
/// range [t_start, t_end) contains it; the final sample joins the last one.
std::vector<bool> class_mask(std::span<const double> t, const SegmentLabel& label,
                             SegmentClass segment);

}  // namespace platoon
