#include "airsparse/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "airsparse/errors.hpp"

namespace airsparse {

DiceResult dice(std::span<const double> pred, std::span<const double> gt, bool smooth) {
  require(pred.size() == gt.size(), ErrorKind::argument, "prediction and ground truth differ in size");
  DiceResult out;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double p = pred[i];
    const double g = gt[i];
    require(p >= 0.0 && p <= 1.0, ErrorKind::argument, "prediction values must lie in [0,1]");
    require(g == 0.0 || g == 1.0, ErrorKind::argument, "ground truth must be binary");
    out.intersection_weight += p * g;
    out.pred_weight += p;
    out.gt_weight += g;
  }
  const double denom = out.pred_weight + out.gt_weight;
  if (smooth) {
    out.dice = (2.0 * out.intersection_weight + kDiceSmoothing) / (denom + kDiceSmoothing);
  } else {
    require(denom > 0.0, ErrorKind::undefined_dice, "both prediction and ground truth are empty");
    out.dice = 2.0 * out.intersection_weight / denom;
  }
  out.loss = 1.0 - out.dice;
  return out;
}

DiceResult dice(const MaskVolume& pred, const MaskVolume& gt, bool smooth) {
  require(pred.shape == gt.shape, ErrorKind::argument, "prediction and ground truth dims differ");
  std::vector<double> p(pred.data.begin(), pred.data.end());
  std::vector<double> g(gt.data.begin(), gt.data.end());
  return dice(p, g, smooth);
}

SparsityStats sparsity_stats(const CoefficientMaps& maps) {
  SparsityStats stats;
  stats.per_atom_l1.assign(maps.count(), 0.0);
  std::size_t zeros = 0;
  for (std::size_t k = 0; k < maps.count(); ++k) {
    for (double v : maps.map(k)) {
      require(std::isfinite(v), ErrorKind::argument, "coefficient maps contain non-finite values");
      if (v == 0.0) ++zeros;
      stats.per_atom_l1[k] += std::abs(v);
      stats.max_abs = std::max(stats.max_abs, std::abs(v));
    }
    stats.l1_norm += stats.per_atom_l1[k];
  }
  const std::size_t total = maps.data().size();
  stats.zero_fraction = total == 0 ? 1.0 : static_cast<double>(zeros) / static_cast<double>(total);
  return stats;
}

double psnr(std::span<const double> reference, std::span<const double> candidate, double peak) {
  require(reference.size() == candidate.size(), ErrorKind::argument, "psnr inputs differ in size");
  require(!reference.empty(), ErrorKind::argument, "psnr inputs are empty");
  require(peak > 0.0, ErrorKind::argument, "psnr peak must be > 0");
  double acc = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const double e = reference[i] - candidate[i];
    acc += e * e;
  }
  const double mse = acc / static_cast<double>(reference.size());
  if (mse == 0.0) return kInfinitePsnr;
  return 10.0 * std::log10(peak * peak / mse);
}

}  // namespace airsparse
