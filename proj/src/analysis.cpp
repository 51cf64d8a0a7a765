#include "platoon/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace platoon {

namespace {

double grid_step(const Trajectory& traj) {
  if (auto dt = traj.uniform_step()) return *dt;
  if (traj.size() < 2) throw DataError("vehicle " + traj.vehicle_id + ": too few samples");
  return traj.duration() / static_cast<double>(traj.size() - 1);
}

struct IndexInterval {
  std::size_t first;
  std::size_t last;
  SegmentClass segment;
};

// Merges neighbours of equal class in place.
void coalesce(std::vector<IndexInterval>& parts) {
  std::vector<IndexInterval> out;
  for (const auto& p : parts) {
    if (!out.empty() && out.back().segment == p.segment) {
      out.back().last = p.last;
    } else {
      out.push_back(p);
    }
  }
  parts = std::move(out);
}

std::size_t bin_index(std::span<const double> edges, double x, bool& clipped) {
  const std::size_t bins = edges.size() - 1;
  clipped = false;
  if (x < edges.front()) {
    clipped = true;
    return 0;
  }
  if (x > edges.back()) {
    clipped = true;
    return bins - 1;
  }
  auto it = std::upper_bound(edges.begin(), edges.end(), x);
  const auto idx = static_cast<std::size_t>(it - edges.begin());
  return idx == 0 ? 0 : std::min(idx - 1, bins - 1);
}

void check_edges(std::span<const double> edges, const char* name) {
  if (edges.size() < 2) throw std::invalid_argument(std::string(name) + ": need >= 2 edges");
  for (std::size_t i = 1; i < edges.size(); ++i) {
    if (!(edges[i] > edges[i - 1])) {
      throw std::invalid_argument(std::string(name) + ": edges must be strictly increasing");
    }
  }
}

}  // namespace

std::string to_string(GapReference reference) {
  return reference == GapReference::Follower ? "follower" : "preceding";
}

GapReference parse_gap_reference(const std::string& text) {
  if (text == "follower") return GapReference::Follower;
  if (text == "preceding") return GapReference::Preceding;
  throw std::invalid_argument("time-gap reference must be 'follower' or 'preceding'");
}

std::vector<double> GapSeries::defined_time_gaps() const {
  std::vector<double> out;
  for (const auto& tg : time_gap) {
    if (tg) out.push_back(*tg);
  }
  return out;
}

std::vector<GapSeries> compute_gaps(const PlatoonDataset& dataset, GapReference reference,
                                    double v_min) {
  dataset.validate();
  if (!dataset.has_ivs()) throw DataError("compute_gaps: inter-vehicle spacing not available");
  std::vector<GapSeries> out;
  for (std::size_t k = 0; k < dataset.pair_count(); ++k) {
    const auto& lead = dataset.vehicles[k];
    const auto& follow = dataset.vehicles[k + 1];
    const auto& ref = reference == GapReference::Follower ? follow : lead;
    GapSeries gs;
    gs.leader_id = lead.vehicle_id;
    gs.follower_id = follow.vehicle_id;
    gs.t = lead.t;
    gs.space_gap = dataset.ivs[k];
    gs.reference_speed = ref.v;
    gs.time_gap.reserve(gs.t.size());
    for (std::size_t i = 0; i < gs.t.size(); ++i) {
      if (ref.v[i] < v_min) {
        gs.time_gap.emplace_back(std::nullopt);
      } else {
        gs.time_gap.emplace_back(gs.space_gap[i] / ref.v[i]);
      }
    }
    out.push_back(std::move(gs));
  }
  return out;
}

SummaryStats summarize(std::span<const double> values) {
  SummaryStats st;
  st.count = values.size();
  if (values.empty()) return st;
  st.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(st.count);
  double ss = 0.0;
  for (double x : values) ss += (x - st.mean) * (x - st.mean);
  st.stddev = std::sqrt(ss / static_cast<double>(st.count));
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t mid = st.count / 2;
  st.median = st.count % 2 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
  return st;
}

double Histogram::mode() const {
  if (mass.empty()) throw std::logic_error("empty histogram");
  const auto it = std::max_element(mass.begin(), mass.end());
  const auto k = static_cast<std::size_t>(it - mass.begin());
  return 0.5 * (edges[k] + edges[k + 1]);
}

std::vector<double> auto_edges(std::span<const double> values, double width) {
  if (!(width > 0.0)) throw std::invalid_argument("bin width must be positive");
  if (values.empty()) throw DataError("cannot fit bins to empty data");
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  constexpr double eps = 1e-9;
  const double lo = std::floor(*mn / width + eps);
  double hi = std::ceil(*mx / width - eps);
  if (hi <= lo) hi = lo + 1.0;
  const auto bins = static_cast<std::size_t>(std::llround(hi - lo));
  std::vector<double> edges(bins + 1);
  for (std::size_t k = 0; k <= bins; ++k) edges[k] = (lo + static_cast<double>(k)) * width;
  return edges;
}

Histogram histogram(std::span<const double> values, double width) {
  Histogram h;
  h.edges = auto_edges(values, width);
  h.mass.assign(h.edges.size() - 1, 0.0);
  bool clipped = false;
  for (double x : values) h.mass[bin_index(h.edges, x, clipped)] += 1.0;
  for (double& m : h.mass) m /= static_cast<double>(values.size());
  h.stats = summarize(values);
  return h;
}

GapHistograms gap_histograms(const GapSeries& gaps, double time_bin, double space_bin) {
  return gap_histograms(std::span<const GapSeries>(&gaps, 1), time_bin, space_bin);
}

GapHistograms gap_histograms(std::span<const GapSeries> gaps, double time_bin,
                             double space_bin) {
  std::vector<double> tg, sg;
  for (const auto& g : gaps) {
    for (std::size_t i = 0; i < g.time_gap.size(); ++i) {
      if (!g.time_gap[i]) continue;
      tg.push_back(*g.time_gap[i]);
      sg.push_back(g.space_gap[i]);
    }
  }
  if (tg.empty()) throw DataError("gap_histograms: no defined time-gap samples");
  return {histogram(tg, time_bin), histogram(sg, space_bin)};
}

LinearFit least_squares(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("least_squares: length mismatch");
  if (x.size() < 2) throw DataError("least_squares: need at least two points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw DataError("least_squares: x has zero variance");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.count = x.size();
  return fit;
}

GapSpeedScatter gap_speed_scatter(const GapSeries& gaps) {
  GapSpeedScatter out;
  for (std::size_t i = 0; i < gaps.time_gap.size(); ++i) {
    if (!gaps.time_gap[i]) continue;
    out.speed.push_back(gaps.reference_speed[i]);
    out.time_gap.push_back(*gaps.time_gap[i]);
    out.space_gap.push_back(gaps.space_gap[i]);
  }
  return out;
}

SegmentLabel segment_steady_perturbation(const Trajectory& leader,
                                         const SegmentationOptions& options) {
  if (!leader.has_accel()) throw DataError("segmentation: leader acceleration not derived");
  if (leader.size() < 2) throw DataError("segmentation: leader has too few samples");
  const double dt = grid_step(leader);
  const std::size_t n = leader.size();
  const auto pad = static_cast<std::size_t>(std::llround(options.pad / dt));
  const double min_duration = options.min_duration;

  // Padded runs of |a| above threshold, merged when the gap is too short.
  std::vector<std::pair<std::size_t, std::size_t>> runs;
  for (std::size_t i = 0; i < n;) {
    if (std::abs(leader.a[i]) <= options.accel_threshold) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < n && std::abs(leader.a[j + 1]) > options.accel_threshold) ++j;
    const std::size_t first = i > pad ? i - pad : 0;
    const std::size_t last = std::min(n - 1, j + pad);
    if (!runs.empty() &&
        (first <= runs.back().second ||
         leader.t[first] - leader.t[runs.back().second] < min_duration)) {
      runs.back().second = std::max(runs.back().second, last);
    } else {
      runs.emplace_back(first, last);
    }
    i = j + 1;
  }

  std::vector<IndexInterval> parts;
  std::size_t cursor = 0;
  for (auto [first, last] : runs) {
    if (first > cursor) parts.push_back({cursor, first, SegmentClass::Steady});
    parts.push_back({first, last, SegmentClass::Perturbation});
    cursor = last;
  }
  if (cursor < n - 1 || parts.empty()) parts.push_back({cursor, n - 1, SegmentClass::Steady});

  auto length = [&](const IndexInterval& p) { return leader.t[p.last] - leader.t[p.first]; };
  auto absorb = [&](SegmentClass victim, SegmentClass into) {
    if (parts.size() < 2) return;
    for (auto& p : parts) {
      if (p.segment == victim && length(p) < min_duration) p.segment = into;
    }
    coalesce(parts);
  };
  // Short perturbations are noise; short steady stubs at the window ends join
  // the perturbation next to them.
  absorb(SegmentClass::Perturbation, SegmentClass::Steady);
  absorb(SegmentClass::Steady, SegmentClass::Perturbation);

  SegmentLabel label;
  for (const auto& p : parts) {
    label.intervals.push_back({leader.t[p.first], leader.t[p.last], p.segment});
  }
  return label;
}

std::vector<double> speed_std(const PlatoonDataset& dataset, const SegmentLabel& labels,
                              SegmentClass segment) {
  dataset.validate();
  const auto mask = class_mask(dataset.vehicles.front().t, labels, segment);
  if (std::none_of(mask.begin(), mask.end(), [](bool b) { return b; })) {
    throw DataError("speed_std: no samples in class '" + to_string(segment) + "'");
  }
  std::vector<double> out;
  for (const auto& traj : dataset.vehicles) {
    std::vector<double> vs;
    for (std::size_t i = 0; i < traj.size(); ++i) {
      if (mask[i]) vs.push_back(traj.v[i]);
    }
    out.push_back(summarize(vs).stddev);
  }
  return out;
}

std::string to_string(StabilityVerdict verdict) {
  switch (verdict) {
    case StabilityVerdict::Amplifying: return "amplifying";
    case StabilityVerdict::Attenuating: return "attenuating";
    case StabilityVerdict::Indeterminate: return "indeterminate";
  }
  return "indeterminate";
}

PairStability l2_pair(const Trajectory& head, const Trajectory& follower, std::size_t first,
                      std::size_t last, double min_norm) {
  if (last >= head.size() || last >= follower.size() || first > last) {
    throw std::out_of_range("l2_pair: bad sample range");
  }
  auto deviation_norm = [&](const std::vector<double>& v) {
    const auto begin = v.begin() + static_cast<std::ptrdiff_t>(first);
    const auto end = v.begin() + static_cast<std::ptrdiff_t>(last) + 1;
    const double mean = std::accumulate(begin, end, 0.0) / static_cast<double>(last - first + 1);
    double ss = 0.0;
    for (auto it = begin; it != end; ++it) ss += (*it - mean) * (*it - mean);
    return std::sqrt(ss);
  };
  auto peak = [&](const std::vector<double>& v) {
    return *std::max_element(v.begin() + static_cast<std::ptrdiff_t>(first),
                             v.begin() + static_cast<std::ptrdiff_t>(last) + 1);
  };

  PairStability out;
  out.vehicle_id = follower.vehicle_id;
  const double head_norm = deviation_norm(head.v);
  if (head_norm >= min_norm) out.l2_ratio = deviation_norm(follower.v) / head_norm;
  out.overshoot_peak = peak(follower.v) - peak(head.v);
  return out;
}

StabilityMetrics l2_amplification(const PlatoonDataset& dataset, const SegmentLabel& labels,
                                  double min_norm) {
  dataset.validate();
  const auto& head = dataset.vehicles.front();
  StabilityMetrics metrics;
  std::size_t amplifying = 0, attenuating = 0;
  for (const auto& seg : labels.of_class(SegmentClass::Perturbation)) {
    const auto [first, last] = sample_range(head.t, seg);
    IntervalStability is;
    is.interval = seg;
    for (std::size_t v = 1; v < dataset.vehicles.size(); ++v) {
      is.followers.push_back(l2_pair(head, dataset.vehicles[v], first, last, min_norm));
    }
    std::vector<double> ratios;
    bool all_defined = !is.followers.empty();
    for (const auto& f : is.followers) {
      if (f.l2_ratio) {
        ratios.push_back(*f.l2_ratio);
      } else {
        all_defined = false;
      }
    }
    if (all_defined) {
      if (ratios.size() == 1) {
        is.strictly_increasing = ratios.front() > 1.0;
      } else {
        is.strictly_increasing =
            std::adjacent_find(ratios.begin(), ratios.end(), std::greater_equal<>()) ==
            ratios.end();
      }
      is.all_attenuated =
          std::all_of(ratios.begin(), ratios.end(), [](double r) { return r <= 1.0; });
    }
    amplifying += is.strictly_increasing ? 1 : 0;
    attenuating += is.all_attenuated ? 1 : 0;
    metrics.intervals.push_back(std::move(is));
  }
  const std::size_t total = metrics.intervals.size();
  if (total > 0 && 2 * amplifying > total) {
    metrics.verdict = StabilityVerdict::Amplifying;
  } else if (total > 0 && 2 * attenuating > total) {
    metrics.verdict = StabilityVerdict::Attenuating;
  }
  return metrics;
}

JointDistribution joint_distribution(const Trajectory& traj, std::span<const double> v_edges,
                                     std::span<const double> a_edges) {
  if (traj.empty()) throw DataError("joint_distribution: empty trajectory");
  if (!traj.has_accel()) throw DataError("joint_distribution: acceleration not derived");
  check_edges(v_edges, "speed bins");
  check_edges(a_edges, "acceleration bins");
  JointDistribution jd;
  jd.v_edges.assign(v_edges.begin(), v_edges.end());
  jd.a_edges.assign(a_edges.begin(), a_edges.end());
  jd.mass.assign(jd.v_bins() * jd.a_bins(), 0.0);
  for (std::size_t i = 0; i < traj.size(); ++i) {
    bool clip_v = false, clip_a = false;
    const std::size_t iv = bin_index(v_edges, traj.v[i], clip_v);
    const std::size_t ia = bin_index(a_edges, traj.a[i], clip_a);
    jd.mass[iv * jd.a_bins() + ia] += 1.0;
    if (clip_v || clip_a) ++jd.clipped_count;
  }
  jd.sample_count = traj.size();
  for (double& m : jd.mass) m /= static_cast<double>(jd.sample_count);
  return jd;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.empty()) throw std::invalid_argument("pearson: bad input");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) throw DataError("pearson: zero-variance input");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double map_correlation(const JointDistribution& lhs, const JointDistribution& rhs) {
  if (lhs.v_edges != rhs.v_edges || lhs.a_edges != rhs.a_edges) {
    throw DataError("map_correlation: maps use different bins");
  }
  return pearson(lhs.mass, rhs.mass);
}

CorrelationRow leader_correlations(const PlatoonDataset& dataset, double v_bin, double a_bin) {
  dataset.validate();
  std::vector<double> all_v, all_a;
  for (const auto& traj : dataset.vehicles) {
    if (!traj.has_accel()) throw DataError("vehicle " + traj.vehicle_id + ": no acceleration");
    all_v.insert(all_v.end(), traj.v.begin(), traj.v.end());
    all_a.insert(all_a.end(), traj.a.begin(), traj.a.end());
  }
  const auto v_edges = auto_edges(all_v, v_bin);
  const auto a_edges = auto_edges(all_a, a_bin);
  const auto head = joint_distribution(dataset.vehicles.front(), v_edges, a_edges);
  CorrelationRow row;
  row.label = to_string(dataset.mode);
  for (std::size_t v = 1; v < dataset.vehicles.size(); ++v) {
    const auto map = joint_distribution(dataset.vehicles[v], v_edges, a_edges);
    row.pairs.push_back(dataset.vehicles.front().vehicle_id + "-" + dataset.vehicles[v].vehicle_id);
    row.r.push_back(map_correlation(head, map));
  }
  return row;
}

}  // namespace platoon
