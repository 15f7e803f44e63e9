#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "prism/errors.hpp"
#include "prism/schema.hpp"

namespace prism {

// Per-dimension (predicted, ground-truth) integer score pairs.
struct ScorePairSeries {
  int dimension_id = 0;
  std::vector<std::pair<int, int>> pairs;  // (predicted, ground truth)
};

// One row of the alignment table. Correlations are empty (undefined)
// when either side of the series is constant or n == 0; silent zeros
// would corrupt layer averages.
struct AlignmentRow {
  int dimension_id = 0;
  std::optional<double> lcc;
  std::optional<double> srcc;
  std::optional<double> mse_norm;
  size_t n = 0;
  std::optional<double> rsc;  // populated only when verifier verdicts exist
};

struct LayerAverages {
  struct Triple {
    double lcc = 0.0;
    double srcc = 0.0;
    double mse_norm = 0.0;
  };
  Triple basic;
  Triple advanced;
  Triple overall;
};

// Deterministic summation helper; switches to pairwise recursion for
// long series so accumulation error stays bounded.
double stable_sum(std::span<const double> values);

// Pearson product-moment coefficient. nullopt when either series is
// constant; throws on length mismatch or empty input.
std::optional<double> pearson(std::span<const double> x, std::span<const double> y);

// Pearson over average ranks; ties get the mean of the positions they
// occupy.
std::optional<double> spearman(std::span<const double> x, std::span<const double> y);

// Average ranks (1-based) with tie mid-ranking; exposed for the
// independent oracle tests.
std::vector<double> average_ranks(std::span<const double> values);

// Mean over pairs of ((pred - gt) / scale.range())^2, so a maximal
// error is 1.0 on both score layers.
double mse_norm(const ScorePairSeries& pairs, const ScoreScale& scale);

// Fraction of Supports verdicts; supports=true per verdict.
double rsc_aggregate(const std::vector<bool>& supports);

// One AlignmentRow per schema dimension. Only samples present on both
// sides of a dimension enter that dimension's series.
std::vector<AlignmentRow> alignment_table(
    const std::map<std::string, std::map<int, int>>& predicted,
    const std::map<std::string, std::map<int, int>>& ground_truth,
    const Schema& schema);

// Unweighted means over the 8 basic rows, the 4 advanced rows, and all
// 12. Requires 12 rows with no sentinel metrics; otherwise throws a
// ValidationError listing the offending dimensions.
LayerAverages layer_averages(const std::vector<AlignmentRow>& rows, const Schema& schema);

}  // namespace prism
