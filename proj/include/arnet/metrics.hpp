#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "arnet/labels.hpp"

namespace arnet::metrics {

struct ScoreEntry {
  std::string utt_id;
  double score = 0.0;
  Label label = Label::bonafide;
};

using ScoreSet = std::vector<ScoreEntry>;

/// One threshold of the sweep. A trial is accepted as bona fide when score >= threshold.
struct DetPoint {
  double threshold = 0.0;
  double far = 0.0;  // spoof trials accepted / spoof trials
  double frr = 0.0;  // bona fide trials rejected / bona fide trials
};

/// Thresholds -inf, every distinct score ascending, +inf. Throws DataError
/// unless both classes are present and every score is finite.
std::vector<DetPoint> det_points(const ScoreSet& s);

struct EerResult {
  double eer = 0.0;
  double threshold = 0.0;
};

/// Linear interpolation between the first pair of adjacent sweep points where
/// FAR - FRR reaches or crosses zero.
EerResult compute_eer(const ScoreSet& s);
EerResult eer_from_sweep(const std::vector<DetPoint>& sweep);

struct AsvOperatingPoint {
  double p_miss_asv = 0.01;
  double p_fa_asv = 0.01;
  double p_miss_spoof_asv = 0.05;
  double pi_tar = 0.9405;
  double pi_non = 0.0095;
  double pi_spoof = 0.05;
  double c_miss_asv = 1.0;
  double c_fa_asv = 10.0;
  double c_miss_cm = 1.0;
  double c_fa_cm = 10.0;

  double c1() const { return pi_tar * (c_miss_cm - c_miss_asv * p_miss_asv) - pi_non * c_fa_asv * p_fa_asv; }
  double c2() const { return c_fa_cm * pi_spoof * (1.0 - p_miss_spoof_asv); }
  /// Throws ConfigError on rates outside [0, 1], negative costs, priors not
  /// summing to 1, or a non-positive C1 or C2.
  void validate() const;
};

struct TdcfResult {
  double min_tdcf = 0.0;
  double threshold = 0.0;
};

/// Minimum over the sweep of (C1 P_miss + C2 P_fa) / min(C1, C2).
TdcfResult compute_min_tdcf(const ScoreSet& s, const AsvOperatingPoint& op = {});
TdcfResult min_tdcf_from_sweep(const std::vector<DetPoint>& sweep, const AsvOperatingPoint& op);

struct EvalReport {
  double eer = 0.0;
  double eer_threshold = 0.0;
  double min_tdcf = 0.0;
  double tdcf_threshold = 0.0;
  std::size_t n_bonafide = 0;
  std::size_t n_spoof = 0;
  ScoreSet scores;
  std::vector<DetPoint> sweep;
};

EvalReport evaluate(ScoreSet scores, const AsvOperatingPoint& op = {});

/// "EER: 12.3456%" and "min-tDCF: 0.1234".
std::string format_eer_line(double eer);
std::string format_tdcf_line(double min_tdcf);

}  // namespace arnet::metrics
