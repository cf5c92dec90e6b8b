#include "mriq/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <numeric>
#include <random>
#include <sstream>

#include "mriq/error.hpp"

namespace mriq {

namespace {

template <typename A, typename B>
void check_paired(const A& a, const B& b, std::size_t min_size, const char* what) {
  if (a.size() != b.size()) throw InvalidArgument(std::string(what) + ": length mismatch");
  if (a.size() < min_size)
    throw InvalidArgument(std::string(what) + ": needs at least " + std::to_string(min_size) + " items");
}

// Sum of squared within-item differences and pooled squared deviations;
// alpha = 1 - (n - 1) * within / (n * pooled) with n = 2 * items.
struct AlphaSums {
  double within = 0.0;
  double pooled = 0.0;
  double n = 0.0;
};

AlphaSums alpha_sums(std::span<const double> a, std::span<const double> b, std::span<const std::size_t> idx) {
  AlphaSums s;
  double mean = 0.0;
  for (auto i : idx) mean += a[i] + b[i];
  s.n = 2.0 * static_cast<double>(idx.size());
  mean /= s.n;
  for (auto i : idx) {
    s.within += (a[i] - b[i]) * (a[i] - b[i]);
    s.pooled += (a[i] - mean) * (a[i] - mean) + (b[i] - mean) * (b[i] - mean);
  }
  return s;
}

double alpha_from(const AlphaSums& s) { return 1.0 - (s.n - 1.0) * s.within / (s.n * s.pooled); }

}  // namespace

BinaryMetrics binary_metrics(const std::vector<bool>& predicted, const std::vector<bool>& labels) {
  check_paired(predicted, labels, 1, "binary_metrics");
  BinaryMetrics m;
  for (std::size_t i = 0; i < labels.size(); ++i) ++m.confusion[labels[i] ? 1 : 0][predicted[i] ? 1 : 0];
  m.accuracy = static_cast<double>(m.confusion[0][0] + m.confusion[1][1]) / static_cast<double>(labels.size());
  return m;
}

double ruler_score_mae(std::span<const int> predicted, std::span<const int> labels) {
  check_paired(predicted, labels, 1, "ruler_score_mae");
  double acc = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) acc += std::abs(predicted[i] - labels[i]);
  return acc / static_cast<double>(labels.size());
}

std::vector<std::vector<long>> ruler_confusion(std::span<const int> predicted, std::span<const int> labels,
                                               int categories) {
  check_paired(predicted, labels, 1, "ruler_confusion");
  std::vector<std::vector<long>> m(static_cast<std::size_t>(categories), std::vector<long>(categories, 0));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= categories || predicted[i] < 0 || predicted[i] >= categories)
      throw InvalidArgument("ruler_confusion: category out of range");
    ++m[labels[i]][predicted[i]];
  }
  return m;
}

double krippendorff_alpha(std::span<const double> rater_a, std::span<const double> rater_b) {
  check_paired(rater_a, rater_b, 2, "krippendorff_alpha");
  std::vector<std::size_t> idx(rater_a.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const auto s = alpha_sums(rater_a, rater_b, idx);
  if (s.pooled == 0.0) throw DegenerateInput("krippendorff_alpha: no expected disagreement");
  return alpha_from(s);
}

AlphaEstimate krippendorff_alpha_ci(std::span<const double> rater_a, std::span<const double> rater_b,
                                    int resamples, std::uint64_t seed) {
  AlphaEstimate est;
  est.alpha = krippendorff_alpha(rater_a, rater_b);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, rater_a.size() - 1);
  std::vector<std::size_t> idx(rater_a.size());
  std::vector<double> boots;
  boots.reserve(static_cast<std::size_t>(std::max(resamples, 0)));
  for (int r = 0; r < resamples; ++r) {
    for (auto& i : idx) i = pick(rng);
    const auto s = alpha_sums(rater_a, rater_b, idx);
    if (s.pooled > 0.0) boots.push_back(alpha_from(s));
  }
  double se = 0.0;
  if (boots.size() > 1) {
    const double mean = std::accumulate(boots.begin(), boots.end(), 0.0) / static_cast<double>(boots.size());
    for (double b : boots) se += (b - mean) * (b - mean);
    se = std::sqrt(se / static_cast<double>(boots.size() - 1));
  }
  est.ci_low = est.alpha - 1.96 * se;
  est.ci_high = est.alpha + 1.96 * se;
  return est;
}

std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) { return x[i] < x[j]; });
  std::vector<double> ranks(x.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  check_paired(x, y, 3, "spearman");
  const auto rx = average_ranks(x), ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw DegenerateInput("spearman: constant input");
  return sxy / std::sqrt(sxx * syy);
}

std::string report_json(const EvalReport& r) {
  nlohmann::json j;
  j["test_size"] = r.test_size;
  j["accuracy"] = r.accuracy;
  j["score_mae"] = r.score_mae;
  j["spearman"] = r.spearman;
  j["confusion_binary"] = {{r.binary.confusion[0][0], r.binary.confusion[0][1]},
                           {r.binary.confusion[1][0], r.binary.confusion[1][1]}};
  j["confusion_ruler"] = r.confusion_ruler;
  if (r.has_alpha)
    j["krippendorff_alpha"] = {{"alpha", r.krippendorff.alpha},
                               {"ci95", {r.krippendorff.ci_low, r.krippendorff.ci_high}}};
  if (r.has_motion) j["motion_accuracy"] = r.motion_accuracy;
  return j.dump(2);
}

std::string report_table(const EvalReport& r) {
  std::ostringstream os;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-34s %10s\n", "metric", "value");
  os << buf;
  auto row = [&](const char* name, double v) {
    std::snprintf(buf, sizeof buf, "%-34s %10.4f\n", name, v);
    os << buf;
  };
  row("binary accuracy", r.accuracy);
  row("mean abs ruler-score error", r.score_mae);
  row("spearman (raw vs level)", r.spearman);
  if (r.has_motion) row("motion accuracy", r.motion_accuracy);
  if (r.has_alpha) {
    std::snprintf(buf, sizeof buf, "%-34s %10.4f  [%.4f, %.4f]\n", "krippendorff alpha", r.krippendorff.alpha,
                  r.krippendorff.ci_low, r.krippendorff.ci_high);
    os << buf;
  }
  os << "\nconfusion (rows = label fail/pass, cols = predicted)\n";
  for (const auto& rw : r.binary.confusion) {
    std::snprintf(buf, sizeof buf, "  %6ld %6ld\n", rw[0], rw[1]);
    os << buf;
  }
  if (!r.confusion_ruler.empty()) {
    os << "\nruler-score confusion (rows = label, cols = predicted)\n";
    for (const auto& rw : r.confusion_ruler) {
      os << ' ';
      for (long c : rw) {
        std::snprintf(buf, sizeof buf, " %5ld", c);
        os << buf;
      }
      os << '\n';
    }
  }
  return os.str();
}

}  // namespace mriq
