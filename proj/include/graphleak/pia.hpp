#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "graphleak/graph.hpp"
#include "graphleak/io.hpp"
#include "graphleak/parallel.hpp"
#include "graphleak/stats.hpp"

namespace graphleak {

struct PropertyValues {
  std::vector<double> values;
  std::size_t skipped = 0;
};

inline PropertyValues collect_property(const GraphSet& gs, Property p, const Executor& exec = Executor{}) {
  const auto vals = exec.map<std::optional<double>>(gs.size(), [&](std::size_t i) -> std::optional<double> {
    if (!property_defined(gs[i], p)) return std::nullopt;
    return property_value(gs[i], p);
  });
  PropertyValues out;
  for (const auto& v : vals) {
    if (v) out.values.push_back(*v);
    else ++out.skipped;
  }
  return out;
}

inline PropertyReport summarize_property(Property p, const PropertyValues& pv, std::span<const double> edges,
                                         bool degenerate) {
  if (pv.values.empty())
    throw ValidationError(std::string("property '") + to_string(p) + "' is undefined on every graph");
  PropertyReport r;
  r.property = p;
  double s = 0.0;
  for (double v : pv.values) s += v;
  r.mean = s / static_cast<double>(pv.values.size());
  r.bucket_edges.assign(edges.begin(), edges.end());
  r.degenerate = degenerate;
  r.skipped = pv.skipped;
  if (degenerate) {
    r.distribution.assign(edges.size() - 1, 0.0);
    r.distribution[0] = 1.0;
  } else {
    r.distribution = bucket_proportions(pv.values, edges);
  }
  return r;
}

// Elementwise |inferred - truth| of two distributions over the same buckets.
inline std::vector<double> compare_distributions(const PropertyReport& inferred, const PropertyReport& truth) {
  if (inferred.bucket_edges != truth.bucket_edges || inferred.distribution.size() != truth.distribution.size())
    throw InvalidArgument("compare_distributions: bucket edges differ");
  std::vector<double> d(inferred.distribution.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = std::abs(inferred.distribution[i] - truth.distribution[i]);
  return d;
}

struct PropertyInference {
  PropertyReport inferred;
  std::optional<PropertyReport> truth;
  double abs_diff = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> bucket_diffs;
};

struct PiaReport {
  std::size_t k = 5;
  std::vector<PropertyInference> properties;
};

// Property means and bucketized distributions of the generated graphs. With a
// truth set, both sides share bucket edges taken from the pooled values.
inline PiaReport infer_properties(const GraphSet& generated, std::span<const Property> properties, std::size_t k,
                                  const GraphSet* truth = nullptr, const Executor& exec = Executor{}) {
  if (generated.empty()) throw InvalidArgument("infer_properties: generated set is empty");
  if (truth && truth->empty()) throw InvalidArgument("infer_properties: truth set is empty");
  PiaReport out;
  out.k = k;
  for (Property p : properties) {
    const PropertyValues gen = collect_property(generated, p, exec);
    std::optional<PropertyValues> ref;
    if (truth) ref = collect_property(*truth, p, exec);

    std::vector<double> pooled = gen.values;
    if (ref) pooled.insert(pooled.end(), ref->values.begin(), ref->values.end());
    if (pooled.empty())
      throw ValidationError(std::string("property '") + to_string(p) + "' is undefined on every graph");
    const auto [mn, mx] = std::minmax_element(pooled.begin(), pooled.end());
    const Buckets b = bucket_edges(*mn, *mx, k);

    PropertyInference pi;
    pi.inferred = summarize_property(p, gen, b.edges, b.degenerate);
    if (ref) {
      pi.truth = summarize_property(p, *ref, b.edges, b.degenerate);
      pi.abs_diff = std::abs(pi.inferred.mean - pi.truth->mean);
      pi.bucket_diffs = compare_distributions(pi.inferred, *pi.truth);
    }
    out.properties.push_back(std::move(pi));
  }
  return out;
}

inline Report to_report(const PiaReport& r) {
  Report out;
  out["k"] = static_cast<double>(r.k);
  for (const auto& pi : r.properties) {
    const std::string p = to_string(pi.inferred.property);
    out[p + ".inferred_mean"] = pi.inferred.mean;
    out[p + ".inferred_distribution"] = pi.inferred.distribution;
    out[p + ".bucket_edges"] = pi.inferred.bucket_edges;
    out[p + ".degenerate"] = pi.inferred.degenerate ? 1.0 : 0.0;
    out[p + ".skipped"] = static_cast<double>(pi.inferred.skipped);
    if (pi.truth) {
      out[p + ".true_mean"] = pi.truth->mean;
      out[p + ".true_distribution"] = pi.truth->distribution;
      out[p + ".abs_diff"] = pi.abs_diff;
      out[p + ".bucket_diffs"] = pi.bucket_diffs;
    }
  }
  return out;
}

}  // namespace graphleak
