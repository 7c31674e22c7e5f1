#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "airsparse/types.hpp"

namespace airsparse {

struct DiceResult {
  double dice = 0.0;
  double loss = 1.0;  // 1 - dice
  double intersection_weight = 0.0;
  double pred_weight = 0.0;
  double gt_weight = 0.0;
};

/// Smoothing constant added to numerator and denominator when requested.
inline constexpr double kDiceSmoothing = 1e-7;

/// dice = 2 sum p_i g_i / (sum p_i + sum g_i) for soft predictions p in
/// [0,1] and binary ground truth g. Both empty is an undefined-dice error
/// unless `smooth` is set.
DiceResult dice(std::span<const double> pred, std::span<const double> gt, bool smooth = false);
DiceResult dice(const MaskVolume& pred, const MaskVolume& gt, bool smooth = false);

struct SparsityStats {
  double zero_fraction = 1.0;
  double l1_norm = 0.0;
  double max_abs = 0.0;
  std::vector<double> per_atom_l1;
};

SparsityStats sparsity_stats(const CoefficientMaps& maps);

/// Distinguished value returned when the two inputs are identical.
inline constexpr double kInfinitePsnr = std::numeric_limits<double>::infinity();

/// 10 log10(peak^2 / MSE) in dB.
double psnr(std::span<const double> reference, std::span<const double> candidate, double peak);

}  // namespace airsparse
