#pragma once

#include <cstddef>

namespace veracity {

/// Confusion counts with "false news" as the positive class.
struct Confusion {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
  void add(bool predicted_positive, bool actual_positive) {
    if (predicted_positive) {
      (actual_positive ? tp : fp)++;
    } else {
      (actual_positive ? fn : tn)++;
    }
  }
  bool operator==(const Confusion&) const = default;
};

struct MetricsReport {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;
  Confusion confusion;
};

/// Zero denominators give 0 for precision, recall and F1.
inline MetricsReport metrics_from_confusion(const Confusion& c) {
  MetricsReport m;
  m.confusion = c;
  const double tp = static_cast<double>(c.tp);
  if (c.tp + c.fp > 0) m.precision = tp / static_cast<double>(c.tp + c.fp);
  if (c.tp + c.fn > 0) m.recall = tp / static_cast<double>(c.tp + c.fn);
  // 2PR/(P+R) == 2TP/(2TP+FP+FN); the count form is exact in rationals.
  if (c.tp > 0) m.f1 = 2.0 * tp / static_cast<double>(2 * c.tp + c.fp + c.fn);
  if (c.total() > 0) m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
  return m;
}

}  // namespace veracity
