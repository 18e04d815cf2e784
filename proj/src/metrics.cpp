#include "arnet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "arnet/error.hpp"

namespace arnet::metrics {

std::vector<DetPoint> det_points(const ScoreSet& s) {
  std::vector<double> bona;
  std::vector<double> spoof;
  for (const auto& e : s) {
    if (!std::isfinite(e.score)) throw DataError("score of '" + e.utt_id + "' is not finite");
    (e.label == Label::bonafide ? bona : spoof).push_back(e.score);
  }
  if (bona.empty() || spoof.empty()) {
    throw DataError("metrics need both classes (bonafide " + std::to_string(bona.size()) + ", spoof " +
                    std::to_string(spoof.size()) + ")");
  }
  std::sort(bona.begin(), bona.end());
  std::sort(spoof.begin(), spoof.end());
  std::vector<double> thresholds;
  thresholds.reserve(bona.size() + spoof.size());
  std::merge(bona.begin(), bona.end(), spoof.begin(), spoof.end(), std::back_inserter(thresholds));
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  const double inf = std::numeric_limits<double>::infinity();
  const auto nb = static_cast<double>(bona.size());
  const auto ns = static_cast<double>(spoof.size());
  std::vector<DetPoint> out;
  out.reserve(thresholds.size() + 2);
  out.push_back({-inf, 1.0, 0.0});
  std::size_t bona_below = 0;
  std::size_t spoof_below = 0;
  for (double t : thresholds) {
    while (bona_below < bona.size() && bona[bona_below] < t) ++bona_below;
    while (spoof_below < spoof.size() && spoof[spoof_below] < t) ++spoof_below;
    out.push_back({t, static_cast<double>(spoof.size() - spoof_below) / ns, static_cast<double>(bona_below) / nb});
  }
  out.push_back({inf, 0.0, 1.0});
  return out;
}

EerResult eer_from_sweep(const std::vector<DetPoint>& sweep) {
  for (std::size_t i = 1; i < sweep.size(); ++i) {
    const double d = sweep[i].far - sweep[i].frr;
    if (d > 0.0) continue;
    if (d == 0.0) return {sweep[i].far, sweep[i].threshold};
    const DetPoint& a = sweep[i - 1];
    const DetPoint& b = sweep[i];
    const double da = a.far - a.frr;
    const double alpha = da / (da - d);
    const double eer = a.far + alpha * (b.far - a.far);
    double threshold;
    if (!std::isfinite(a.threshold)) threshold = b.threshold;
    else if (!std::isfinite(b.threshold)) threshold = a.threshold;
    else threshold = a.threshold + alpha * (b.threshold - a.threshold);
    return {eer, threshold};
  }
  throw DataError("threshold sweep never balances FAR and FRR");
}

EerResult compute_eer(const ScoreSet& s) { return eer_from_sweep(det_points(s)); }

void AsvOperatingPoint::validate() const {
  auto rate = [](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(std::string(name) + " must lie in [0, 1]");
  };
  rate(p_miss_asv, "p_miss_asv");
  rate(p_fa_asv, "p_fa_asv");
  rate(p_miss_spoof_asv, "p_miss_spoof_asv");
  rate(pi_tar, "pi_tar");
  rate(pi_non, "pi_non");
  rate(pi_spoof, "pi_spoof");
  if (std::abs(pi_tar + pi_non + pi_spoof - 1.0) > 1e-9) throw ConfigError("priors pi_tar + pi_non + pi_spoof must sum to 1");
  for (double c : {c_miss_asv, c_fa_asv, c_miss_cm, c_fa_cm}) {
    if (!(c >= 0.0) || !std::isfinite(c)) throw ConfigError("t-DCF costs must be finite and non-negative");
  }
  if (!(c1() > 0.0) || !(c2() > 0.0)) {
    throw ConfigError("degenerate tandem operating point: C1 = " + std::to_string(c1()) + ", C2 = " + std::to_string(c2()));
  }
}

TdcfResult min_tdcf_from_sweep(const std::vector<DetPoint>& sweep, const AsvOperatingPoint& op) {
  op.validate();
  const double c1 = op.c1();
  const double c2 = op.c2();
  const double norm = std::min(c1, c2);
  TdcfResult best{std::numeric_limits<double>::infinity(), 0.0};
  for (const auto& p : sweep) {
    const double v = (c1 * p.frr + c2 * p.far) / norm;
    if (v < best.min_tdcf) best = {v, p.threshold};
  }
  return best;
}

TdcfResult compute_min_tdcf(const ScoreSet& s, const AsvOperatingPoint& op) {
  return min_tdcf_from_sweep(det_points(s), op);
}

EvalReport evaluate(ScoreSet scores, const AsvOperatingPoint& op) {
  EvalReport r;
  r.sweep = det_points(scores);
  const EerResult eer = eer_from_sweep(r.sweep);
  const TdcfResult tdcf = min_tdcf_from_sweep(r.sweep, op);
  r.eer = eer.eer;
  r.eer_threshold = eer.threshold;
  r.min_tdcf = tdcf.min_tdcf;
  r.tdcf_threshold = tdcf.threshold;
  for (const auto& e : scores) ++(e.label == Label::bonafide ? r.n_bonafide : r.n_spoof);
  r.scores = std::move(scores);
  return r;
}

std::string format_eer_line(double eer) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "EER: %.4f%%", 100.0 * eer);
  return buf;
}

std::string format_tdcf_line(double min_tdcf) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "min-tDCF: %.4f", min_tdcf);
  return buf;
}

}  // namespace arnet::metrics
