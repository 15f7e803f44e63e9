#include "prism/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace prism {

namespace {
constexpr size_t kPairwiseThreshold = 10000;

double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 1024) {
    double acc = 0.0;
    for (double x : v) acc += x;
    return acc;
  }
  const size_t half = v.size() / 2;
  return pairwise_sum(v.subspan(0, half)) + pairwise_sum(v.subspan(half));
}
}  // namespace

double stable_sum(std::span<const double> values) {
  if (values.size() < kPairwiseThreshold) {
    double acc = 0.0;
    for (double x : values) acc += x;
    return acc;
  }
  return pairwise_sum(values);
}

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ValidationError("pearson: length mismatch");
  if (x.empty()) throw ValidationError("pearson: empty series");
  const double n = static_cast<double>(x.size());
  const double mean_x = stable_sum(x) / n;
  const double mean_y = stable_sum(y) / n;
  std::vector<double> cov(x.size()), var_x(x.size()), var_y(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mean_x;
    const double dy = y[i] - mean_y;
    cov[i] = dx * dy;
    var_x[i] = dx * dx;
    var_y[i] = dy * dy;
  }
  const double sxx = stable_sum(var_x);
  const double syy = stable_sum(var_y);
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;  // constant series
  return stable_sum(cov) / std::sqrt(sxx * syy);
}

std::vector<double> average_ranks(std::span<const double> values) {
  const size_t n = values.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n, 0.0);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    // positions i..j (0-based) share the mean of ranks i+1..j+1
    const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

std::optional<double> spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ValidationError("spearman: length mismatch");
  if (x.empty()) throw ValidationError("spearman: empty series");
  const std::vector<double> rx = average_ranks(x);
  const std::vector<double> ry = average_ranks(y);
  return pearson(rx, ry);
}

double mse_norm(const ScorePairSeries& series, const ScoreScale& scale) {
  if (series.pairs.empty()) throw ValidationError("mse_norm: empty series");
  const double range = static_cast<double>(scale.range());
  std::vector<double> sq;
  sq.reserve(series.pairs.size());
  for (const auto& [pred, gt] : series.pairs) {
    if (!scale.contains(pred) || !scale.contains(gt)) {
      throw ValidationError("mse_norm: score outside scale for dimension " +
                            std::to_string(series.dimension_id));
    }
    const double e = static_cast<double>(pred - gt) / range;
    sq.push_back(e * e);
  }
  return stable_sum(sq) / static_cast<double>(sq.size());
}

double rsc_aggregate(const std::vector<bool>& supports) {
  if (supports.empty()) throw ValidationError("rsc_aggregate: empty verdict list");
  size_t count = 0;
  for (bool s : supports) {
    if (s) ++count;
  }
  return static_cast<double>(count) / static_cast<double>(supports.size());
}

std::vector<AlignmentRow> alignment_table(
    const std::map<std::string, std::map<int, int>>& predicted,
    const std::map<std::string, std::map<int, int>>& ground_truth,
    const Schema& schema) {
  std::vector<AlignmentRow> rows;
  for (const auto& dim : schema.dimensions) {
    ScorePairSeries series;
    series.dimension_id = dim.id;
    for (const auto& [sample_id, pred_scores] : predicted) {
      auto pit = pred_scores.find(dim.id);
      if (pit == pred_scores.end()) continue;
      auto git = ground_truth.find(sample_id);
      if (git == ground_truth.end()) continue;
      auto sit = git->second.find(dim.id);
      if (sit == git->second.end()) continue;
      series.pairs.emplace_back(pit->second, sit->second);
    }
    AlignmentRow row;
    row.dimension_id = dim.id;
    row.n = series.pairs.size();
    if (!series.pairs.empty()) {
      std::vector<double> xs, ys;
      xs.reserve(series.pairs.size());
      ys.reserve(series.pairs.size());
      for (const auto& [p, g] : series.pairs) {
        xs.push_back(p);
        ys.push_back(g);
      }
      row.lcc = pearson(xs, ys);
      row.srcc = spearman(xs, ys);
      row.mse_norm = mse_norm(series, schema.scale(dim.id));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

LayerAverages layer_averages(const std::vector<AlignmentRow>& rows, const Schema& schema) {
  if (rows.size() != 12) {
    throw ValidationError("layer_averages: expected 12 rows, got " + std::to_string(rows.size()));
  }
  std::string sentinels;
  for (const auto& row : rows) {
    if (!row.lcc || !row.srcc || !row.mse_norm) {
      if (!sentinels.empty()) sentinels += ", ";
      sentinels += std::to_string(row.dimension_id);
    }
  }
  if (!sentinels.empty()) {
    throw ValidationError("layer_averages: sentinel metrics for dimensions [" + sentinels + "]");
  }

  auto mean_over = [&](Layer layer, bool all) {
    LayerAverages::Triple t;
    size_t count = 0;
    for (const auto& row : rows) {
      if (!all && schema.dimension(row.dimension_id).layer != layer) continue;
      t.lcc += *row.lcc;
      t.srcc += *row.srcc;
      t.mse_norm += *row.mse_norm;
      ++count;
    }
    t.lcc /= static_cast<double>(count);
    t.srcc /= static_cast<double>(count);
    t.mse_norm /= static_cast<double>(count);
    return t;
  };

  LayerAverages out;
  out.basic = mean_over(Layer::Basic, false);
  out.advanced = mean_over(Layer::Advanced, false);
  out.overall = mean_over(Layer::Basic, true);
  return out;
}

}  // namespace prism
