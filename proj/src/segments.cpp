#include "platoon/segments.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace platoon {

std::string to_string(SegmentClass segment) {
  switch (segment) {
    case SegmentClass::Whole: return "whole";
    case SegmentClass::Steady: return "steady";
    case SegmentClass::Perturbation: return "perturbation";
  }
  return "whole";
}

double SegmentLabel::total_duration(SegmentClass segment) const {
  double sum = 0.0;
  for (const auto& seg : intervals) {
    if (segment == SegmentClass::Whole || seg.segment == segment) sum += seg.duration();
  }
  return sum;
}

std::vector<Segment> SegmentLabel::of_class(SegmentClass segment) const {
  std::vector<Segment> out;
  std::copy_if(intervals.begin(), intervals.end(), std::back_inserter(out),
               [segment](const Segment& s) { return s.segment == segment; });
  return out;
}

void SegmentLabel::validate() const {
  if (intervals.empty()) throw std::logic_error("segment label is empty");
  for (std::size_t i = 0; i < intervals.size(); ++i) {
    const auto& seg = intervals[i];
    if (seg.segment == SegmentClass::Whole) throw std::logic_error("interval labeled 'whole'");
    if (!(seg.t_end >= seg.t_start)) throw std::logic_error("interval ends before it starts");
    if (i > 0 && seg.t_start != intervals[i - 1].t_end) {
      throw std::logic_error("intervals do not tile the window");
    }
  }
}

std::pair<std::size_t, std::size_t> sample_range(std::span<const double> t, const Segment& seg) {
  if (t.empty()) throw std::invalid_argument("sample_range: empty grid");
  auto lo = std::lower_bound(t.begin(), t.end(), seg.t_start);
  auto hi = std::upper_bound(t.begin(), t.end(), seg.t_end);
  if (lo == t.end() || hi == t.begin()) throw std::out_of_range("segment outside the grid");
  const auto first = static_cast<std::size_t>(lo - t.begin());
  const auto last = static_cast<std::size_t>(hi - t.begin()) - 1;
  if (last < first) throw std::out_of_range("segment contains no samples");
  return {first, last};
}

std::vector<bool> class_mask(std::span<const double> t, const SegmentLabel& label,
                             SegmentClass segment) {
  std::vector<bool> mask(t.size(), false);
  if (label.intervals.empty()) return mask;
  for (std::size_t k = 0; k < label.intervals.size(); ++k) {
    const auto& seg = label.intervals[k];
    const bool last_interval = k + 1 == label.intervals.size();
    const bool match = segment == SegmentClass::Whole || seg.segment == segment;
    if (!match) continue;
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (t[i] >= seg.t_start && (t[i] < seg.t_end || (last_interval && t[i] <= seg.t_end))) {
        mask[i] = true;
      }
    }
  }
  return mask;
}

}  // namespace platoon
