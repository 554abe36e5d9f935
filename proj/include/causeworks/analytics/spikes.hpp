#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "causeworks/propagation.hpp"

namespace causeworks {

inline constexpr double kDefaultSpikeTheta = 0.4;

enum class SpikeDirection { rise, fall };

inline const char* to_string(SpikeDirection d) { return d == SpikeDirection::rise ? "rise" : "fall"; }

struct Spike {
  int step = 0;  // series index of the jump's end, 1..T
  SpikeDirection direction = SpikeDirection::rise;
  double magnitude = 0.0;

  friend bool operator==(const Spike&, const Spike&) = default;
};

struct NodeSpike {
  NodeId node;
  Spike spike;
};

struct SpikeReport {
  std::vector<NodeSpike> spikes;
};

// A step is sudden when it covers more than `theta` of the series' total
// range; gradual changes spread across several steps stay below it.
inline std::vector<Spike> detect_spikes(std::span<const double> series, double theta = kDefaultSpikeTheta) {
  std::vector<Spike> out;
  if (series.size() < 2) return out;
  const auto [lo, hi] = std::minmax_element(series.begin(), series.end());
  const double range = *hi - *lo;
  if (!(range > 0.0)) return out;
  const double threshold = theta * range;
  for (std::size_t t = 1; t < series.size(); ++t) {
    const double step = series[t] - series[t - 1];
    if (std::abs(step) > threshold) {
      out.push_back({static_cast<int>(t), step > 0 ? SpikeDirection::rise : SpikeDirection::fall, std::abs(step)});
    }
  }
  return out;
}

inline SpikeReport detect_spikes(const PropagationTrace& trace, std::span<const NodeId> nodes,
                                 double theta = kDefaultSpikeTheta) {
  SpikeReport report;
  for (const auto& id : nodes) {
    for (const auto& s : detect_spikes(trace.at(id), theta)) report.spikes.push_back({id, s});
  }
  return report;
}

}  // namespace causeworks
