#pragma once

// End-to-end checks of a fitted pipeline: a Monte-Carlo estimate of the
// posterior predictive integral, and leave-one-out cross-validation.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dirimult/classifier.hpp"
#include "dirimult/conjugate.hpp"
#include "dirimult/dataset.hpp"

namespace dirimult {

inline constexpr std::uint64_t kMinOracleSamples = 10'000;

struct OracleComparison {
  double closed_form_log = 0.0;
  double mc_log = 0.0;
  /// Standard error of mc_log (delta method on the sample mean).
  double mc_stderr = 0.0;
  std::uint64_t n_samples = 0;
  std::uint64_t seed = 0;

  double abs_error() const;
  /// |closed_form_log - mc_log| <= max(floor, 3 * mc_stderr)
  bool agrees(double floor = 1e-2) const;
};

/// Averages the multinomial pmf of `query` over theta ~ Dir(posterior).
OracleComparison mc_predictive_oracle(const DirichletParams& posterior, const CountVector& query,
                                      std::uint64_t n_samples, std::uint64_t seed);

/// Same estimate for several queries, reusing one set of theta draws. Entry k
/// equals the single-query result for queries[k] with the same seed.
std::vector<OracleComparison> mc_predictive_oracle(const DirichletParams& posterior,
                                                   std::span<const CountVector> queries,
                                                   std::uint64_t n_samples, std::uint64_t seed);

/// Random count vectors with totals uniform on [1, max_total] and categories
/// uniform on [0, categories).
std::vector<CountVector> random_queries(std::size_t how_many, std::size_t categories,
                                        std::int64_t max_total, std::uint64_t seed);

enum class ClassPriorSource { explicit_values, empirical, uniform };

std::string_view to_string(ClassPriorSource source) noexcept;
ClassPriorSource parse_class_prior_source(std::string_view name);

struct LooRecord {
  std::string site_id;
  std::size_t true_class = 0;
  /// Empty when the record carries no evidence (zero counts) and was skipped.
  std::optional<std::size_t> predicted_class;
  std::vector<double> probs;
};

struct LooReport {
  std::vector<std::string> classes;
  std::vector<LooRecord> records;
  /// Correct predictions over evaluated (non-skipped) records.
  double accuracy = 0.0;
  /// confusion[true][predicted] over evaluated records.
  std::vector<std::vector<std::size_t>> confusion;
  /// Mean natural log of the probability given to the true class.
  double mean_log_score = 0.0;
  std::size_t evaluated = 0;
};

/// Holds out each record in turn, refits its class without it (and the
/// empirical prior, when that is the source), and classifies it.
LooReport leave_one_out(const Corpus& corpus, PriorFamily family, ClassPriorSource source,
                        std::optional<std::vector<double>> explicit_prior = std::nullopt);

std::string format_loo_csv(const LooReport& report);
std::string format_loo_text(const LooReport& report);

struct OracleRow {
  std::string class_label;
  std::string query;
  OracleComparison comparison;
};

/// "(y_1 y_2 ... y_J)"
std::string describe_counts(const CountVector& counts);

std::string format_oracle_csv(std::span<const OracleRow> rows);
std::string format_oracle_text(std::span<const OracleRow> rows);

}  // namespace dirimult
