#include "loyalty/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <string_view>

#include "loyalty/error.hpp"
#include "loyalty/rng.hpp"

namespace loyalty {
namespace {

constexpr std::array<std::array<std::string_view, 8>, 4> kClassWords = {{
    {"肌荒れ", "乾燥した", "べたつく", "期待外れ", "刺激が強い", "もう買わない", "残念", "合わない"},
    {"普通", "可もなく不可もなく", "少し重い", "香りが微妙", "値段の割に", "まあまあ", "落ちやすい", "変化なし"},
    {"使いやすい", "悪くない", "しっとり", "手頃", "無難", "なじむ", "続けてみる", "軽い"},
    {"最高", "リピート確定", "手放せない", "感動", "大好き", "潤う", "一番", "おすすめ"},
}};

constexpr std::array<std::string_view, 16> kSharedWords = {
    "化粧水", "乳液", "毎日", "朝晩", "使って", "います", "肌", "香り",
    "容器", "季節", "友人", "店頭で", "購入", "しました", "値段", "量",
};

constexpr double kClassWordProbability = 0.6;

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI); }

// Composite Simpson rule of f(s) * phi(s) over [-12, 12].
template <typename F>
double expect_over_standard_normal(F f) {
  constexpr int kIntervals = 24000;  // even
  constexpr double lo = -12.0;
  constexpr double hi = 12.0;
  const double h = (hi - lo) / kIntervals;
  double total = 0.0;
  for (int i = 0; i <= kIntervals; ++i) {
    const double s = lo + h * i;
    const double w = (i == 0 || i == kIntervals) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    total += w * f(s) * normal_pdf(s);
  }
  return total * h / 3.0;
}

}  // namespace

void SyntheticSpec::validate() const {
  if (n < 20) throw UsageError("synthetic: n must be at least 20");
  if (j_in < 1) throw UsageError("synthetic: j_in must be at least 1");
  if (!(text_weight >= 0.0) || !(tabular_weight >= 0.0)) throw UsageError("synthetic: signal weights must be >= 0");
  if (text_weight == 0.0 && tabular_weight == 0.0) throw UsageError("synthetic: degenerate spec (all-zero signals)");
  if (!(noise > 0.0)) throw UsageError("synthetic: noise must be positive");
}

BayesAccuracy bayes_accuracy(const SyntheticSpec& spec) {
  spec.validate();
  const double a = spec.text_weight;
  const double b = spec.tabular_weight;
  const double sigma = spec.noise;
  const double k = static_cast<double>(kTextSignal.size());
  BayesAccuracy out;

  // Given h only, a*mu_h + (b s + sigma eps) with b s + sigma eps ~ N(0, b^2 + sigma^2).
  const double spread = std::sqrt(b * b + sigma * sigma);
  for (double mu : kTextSignal) {
    out.text_only += normal_cdf(std::abs(a * mu) / spread) / k;
    out.class_prior += normal_cdf(a * mu / spread) / k;
  }
  out.tabular_only = expect_over_standard_normal([&](double s) {
    double p = 0.0;
    for (double mu : kTextSignal) p += normal_cdf((a * mu + b * s) / sigma) / k;
    return std::max(p, 1.0 - p);
  });
  out.combined = expect_over_standard_normal([&](double s) {
    double acc = 0.0;
    for (double mu : kTextSignal) acc += normal_cdf(std::abs(a * mu + b * s) / sigma) / k;
    return acc;
  });
  return out;
}

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  SyntheticData out;
  out.bayes = bayes_accuracy(spec);
  auto& ds = out.dataset;
  for (std::size_t f = 0; f < spec.j_in; ++f) ds.schema.push_back("f" + std::to_string(f));

  Engine rng(derive_seed(spec.seed, "synthetic"));
  const int width = static_cast<int>(std::to_string(spec.n - 1).size());
  for (std::size_t i = 0; i < spec.n; ++i) {
    Record rec;
    std::string id = std::to_string(i);
    rec.id = "s" + std::string(static_cast<std::size_t>(std::max(0, width - static_cast<int>(id.size()))), '0') + id;

    const auto h = static_cast<std::size_t>(uniform_index(rng, kTextSignal.size()));
    const double s = standard_normal(rng);
    rec.features.push_back(s);
    for (std::size_t f = 1; f < spec.j_in; ++f) rec.features.push_back(standard_normal(rng));
    const double eps = standard_normal(rng);
    const int y = spec.text_weight * kTextSignal[h] + spec.tabular_weight * s + spec.noise * eps > 0.0 ? 1 : 0;

    const auto words = 6 + uniform_index(rng, 5);
    for (std::uint64_t w = 0; w < words; ++w) {
      if (uniform01(rng) < kClassWordProbability) {
        rec.text += kClassWords[h][uniform_index(rng, kClassWords[h].size())];
      } else {
        rec.text += kSharedWords[uniform_index(rng, kSharedWords.size())];
      }
      if (w + 1 == words / 2 && uniform01(rng) < 0.2) rec.text += "。\n";
    }
    const double tail = uniform01(rng);
    if (tail < 0.1) {
      rec.text += "😊";
    } else if (tail < 0.2) {
      rec.text += "\n";
    } else {
      rec.text += "。";
    }
    rec.rating = y == 1 ? 6 + static_cast<int>(uniform_index(rng, 2)) : 1 + static_cast<int>(uniform_index(rng, 5));
    ds.records.push_back(std::move(rec));
  }
  return out;
}

}  // namespace loyalty
