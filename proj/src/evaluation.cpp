#include "dirimult/evaluation.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "dirimult/error.hpp"
#include "dirimult/random.hpp"

namespace dirimult {

namespace {

std::string fixed(double value, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, value);
  return buf;
}

std::string counts_string(const CountVector& counts) {
  std::string out = "(";
  for (std::size_t j = 0; j < counts.size(); ++j) {
    if (j) out += ' ';
    out += std::to_string(counts[j]);
  }
  return out + ")";
}

}  // namespace

double OracleComparison::abs_error() const { return std::abs(closed_form_log - mc_log); }

bool OracleComparison::agrees(double floor) const {
  return abs_error() <= std::max(floor, 3.0 * mc_stderr);
}

OracleComparison mc_predictive_oracle(const DirichletParams& posterior, const CountVector& query,
                                      std::uint64_t n_samples, std::uint64_t seed) {
  return mc_predictive_oracle(posterior, std::span<const CountVector>(&query, 1), n_samples,
                              seed)
      .front();
}

std::vector<OracleComparison> mc_predictive_oracle(const DirichletParams& posterior,
                                                   std::span<const CountVector> queries,
                                                   std::uint64_t n_samples, std::uint64_t seed) {
  if (n_samples < kMinOracleSamples) {
    throw ValidationError("mc_predictive_oracle: at least " + std::to_string(kMinOracleSamples) +
                          " samples are required");
  }
  const std::size_t j = posterior.size();
  std::vector<double> log_coeff;
  for (const auto& q : queries) {
    if (q.size() != j) throw ValidationError("mc_predictive_oracle: dimension mismatch");
    log_coeff.push_back(log_multinomial_coefficient(q));
  }

  // Running sums of the pmf and its square, per query.
  std::vector<double> sum(queries.size(), 0.0);
  std::vector<double> sum_sq(queries.size(), 0.0);
  std::vector<double> theta(j);
  std::vector<double> log_theta(j);
  Rng rng(seed);
  for (std::uint64_t s = 0; s < n_samples; ++s) {
    rng.dirichlet(posterior.alpha(), theta);
    for (std::size_t k = 0; k < j; ++k) log_theta[k] = std::log(theta[k]);
    for (std::size_t q = 0; q < queries.size(); ++q) {
      // Same value as exp(log_multinomial_pmf(theta, query)) without the
      // per-call simplex validation.
      double log_pmf = log_coeff[q];
      for (std::size_t k = 0; k < j; ++k) {
        const auto y = queries[q][k];
        if (y != 0) log_pmf += static_cast<double>(y) * log_theta[k];
      }
      const double pmf = std::exp(log_pmf);
      sum[q] += pmf;
      sum_sq[q] += pmf * pmf;
    }
  }

  std::vector<OracleComparison> out;
  const double n = static_cast<double>(n_samples);
  for (std::size_t q = 0; q < queries.size(); ++q) {
    OracleComparison c;
    c.closed_form_log = log_predictive_likelihood(posterior, queries[q]);
    const double mean = sum[q] / n;
    const double var = std::max(0.0, (sum_sq[q] - n * mean * mean) / (n - 1.0));
    c.mc_log = std::log(mean);
    c.mc_stderr = mean > 0.0 ? std::sqrt(var / n) / mean : std::numeric_limits<double>::infinity();
    c.n_samples = n_samples;
    c.seed = seed;
    out.push_back(c);
  }
  return out;
}

std::vector<CountVector> random_queries(std::size_t how_many, std::size_t categories,
                                        std::int64_t max_total, std::uint64_t seed) {
  if (categories == 0 || max_total < 1) throw ValidationError("random_queries: bad shape");
  Rng rng(seed);
  std::vector<CountVector> out;
  for (std::size_t i = 0; i < how_many; ++i) {
    const auto total = 1 + static_cast<std::int64_t>(rng.next_u64() % static_cast<std::uint64_t>(max_total));
    std::vector<std::int64_t> counts(categories, 0);
    for (std::int64_t k = 0; k < total; ++k) ++counts[rng.next_u64() % categories];
    out.emplace_back(std::move(counts));
  }
  return out;
}

std::string_view to_string(ClassPriorSource source) noexcept {
  switch (source) {
    case ClassPriorSource::explicit_values: return "explicit";
    case ClassPriorSource::empirical: return "empirical";
    case ClassPriorSource::uniform: return "uniform";
  }
  return "empirical";
}

ClassPriorSource parse_class_prior_source(std::string_view name) {
  for (auto s : {ClassPriorSource::explicit_values, ClassPriorSource::empirical,
                 ClassPriorSource::uniform}) {
    if (name == to_string(s)) return s;
  }
  throw ValidationError("unknown class prior source '" + std::string(name) + "'");
}

LooReport leave_one_out(const Corpus& corpus, PriorFamily family, ClassPriorSource source,
                        std::optional<std::vector<double>> explicit_prior) {
  if (corpus.records.size() < 2) throw ValidationError("leave_one_out: need at least two records");
  const std::size_t classes = corpus.classes.size();
  if (classes < 2) throw ValidationError("leave_one_out: need at least two classes");
  if (source == ClassPriorSource::explicit_values && !explicit_prior) {
    throw ValidationError("leave_one_out: explicit class prior requested but none given");
  }

  const auto totals = corpus.class_totals();
  const auto labels = corpus.record_labels();

  LooReport report;
  report.classes = corpus.classes;
  report.confusion.assign(classes, std::vector<std::size_t>(classes, 0));
  std::size_t correct = 0;
  double log_score_sum = 0.0;

  for (std::size_t r = 0; r < corpus.records.size(); ++r) {
    const auto& held = corpus.records[r];
    const std::size_t truth = corpus.class_index(held.class_label);

    // Refit from integer totals so the fold posterior is exact.
    std::vector<CountVector> fold_totals = totals;
    fold_totals[truth] = fold_totals[truth] - held.counts;

    ClassPrior prior = ClassPrior::uniform(classes);
    if (source == ClassPriorSource::explicit_values) {
      prior = ClassPrior(*explicit_prior);
    } else if (source == ClassPriorSource::empirical) {
      std::vector<std::string> rest;
      rest.reserve(labels.size() - 1);
      for (std::size_t k = 0; k < labels.size(); ++k) {
        if (k != r) rest.push_back(labels[k]);
      }
      prior = empirical_class_prior(rest, corpus.classes);
    }
    const FittedModel model =
        fit_model(corpus.typology, corpus.classes, fold_totals, std::move(prior), family);

    LooRecord rec{held.site_id, truth, std::nullopt, {}};
    if (held.counts.total() > 0) {
      auto c = classify(model, held.counts);
      rec.predicted_class = c.argmax;
      ++report.confusion[truth][c.argmax];
      if (c.argmax == truth) ++correct;
      log_score_sum += std::log(c.probs[truth]);
      ++report.evaluated;
      rec.probs = std::move(c.probs);
    }
    report.records.push_back(std::move(rec));
  }
  if (report.evaluated > 0) {
    const double n = static_cast<double>(report.evaluated);
    report.accuracy = static_cast<double>(correct) / n;
    report.mean_log_score = log_score_sum / n;
  }
  return report;
}

std::string format_loo_csv(const LooReport& report) {
  std::ostringstream out;
  out << "site_id,true_class,predicted_class";
  for (const auto& c : report.classes) out << ",P(" << csv_escape(c) << ')';
  out << '\n';
  for (const auto& r : report.records) {
    out << csv_escape(r.site_id) << ',' << csv_escape(report.classes[r.true_class]) << ',';
    if (r.predicted_class) {
      out << csv_escape(report.classes[*r.predicted_class]);
      for (double p : r.probs) out << ',' << fixed(p, 6);
    } else {
      out << "NA";
      for (std::size_t i = 0; i < report.classes.size(); ++i) out << ",NA";
    }
    out << '\n';
  }
  return out.str();
}

std::string format_loo_text(const LooReport& report) {
  std::ostringstream out;
  out << "Leave-one-out cross-validation\n";
  out << "  records evaluated: " << report.evaluated << " of " << report.records.size() << '\n';
  out << "  accuracy:          " << fixed(report.accuracy, 4) << '\n';
  out << "  mean log score:    " << fixed(report.mean_log_score, 4) << '\n';
  out << "  confusion (rows = true, columns = predicted):\n";
  out << "    ";
  for (const auto& c : report.classes) out << '\t' << c;
  out << '\n';
  for (std::size_t i = 0; i < report.classes.size(); ++i) {
    out << "    " << report.classes[i];
    for (auto v : report.confusion[i]) out << '\t' << v;
    out << '\n';
  }
  return out.str();
}

std::string format_oracle_csv(std::span<const OracleRow> rows) {
  std::ostringstream out;
  out << "class,query,closed_form_log,mc_log,abs_error,mc_stderr,n_samples,seed,agrees\n";
  for (const auto& r : rows) {
    const auto& c = r.comparison;
    out << csv_escape(r.class_label) << ',' << csv_escape(r.query) << ','
        << fixed(c.closed_form_log, 8) << ',' << fixed(c.mc_log, 8) << ','
        << fixed(c.abs_error(), 8) << ',' << fixed(c.mc_stderr, 8) << ',' << c.n_samples << ','
        << c.seed << ',' << (c.agrees() ? "yes" : "no") << '\n';
  }
  return out.str();
}

std::string format_oracle_text(std::span<const OracleRow> rows) {
  std::ostringstream out;
  std::size_t agree = 0;
  for (const auto& r : rows) agree += r.comparison.agrees() ? 1 : 0;
  out << "Monte-Carlo check of the closed-form predictive\n";
  out << "  pairs agreeing: " << agree << " of " << rows.size() << '\n';
  for (const auto& r : rows) {
    const auto& c = r.comparison;
    out << "  " << r.class_label << ' ' << r.query << "  closed " << fixed(c.closed_form_log, 5)
        << "  mc " << fixed(c.mc_log, 5) << "  +/- " << fixed(c.mc_stderr, 5)
        << (c.agrees() ? "" : "  MISMATCH") << '\n';
  }
  return out.str();
}

std::string describe_counts(const CountVector& counts) { return counts_string(counts); }

}  // namespace dirimult
