// Acceptance suite: one PASS/FAIL line per criterion. Exit status is non-zero
// when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dirimult/classifier.hpp"
#include "dirimult/cli.hpp"
#include "dirimult/dataset.hpp"
#include "dirimult/evaluation.hpp"
#include "dirimult/random.hpp"
#include "oracles.hpp"

using namespace dirimult;
namespace fs = std::filesystem;

namespace {

const std::string kData = DIRIMULT_DATA_DIR;

struct Outcome {
  bool pass;
  std::string detail;
};

FittedModel train_fixture() {
  const auto corpus = parse_training_csv(read_file(kData + "/periods_training.csv"));
  return fit_model(corpus.typology, corpus.classes, corpus.class_totals(),
                   ClassPrior(*corpus.class_prior), PriorFamily::perks);
}

CountVector single(std::size_t type) {
  std::vector<std::int64_t> y(7, 0);
  y[type] = 1;
  return CountVector(y);
}

oracle::Rational exact_mean(std::size_t period, std::size_t type) {
  const auto alpha = oracle::period_alpha(period);
  oracle::Rational plus = 0;
  for (const auto& a : alpha) plus += a;
  return alpha[type] / plus;
}

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

// Criterion 1: trained alphas equal k/7.
Outcome posterior_parameters() {
  const auto model = train_fixture();
  double worst = 0.0;
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 7; ++j) {
      worst = std::max(worst, std::abs(model.posteriors()[i][j] - oracle::kPosteriorSevenths[i][j] / 7.0));
    }
  }
  return {worst <= 1e-12, "max |alpha - k/7| = " + fmt("%.3g", worst) + " over 35 cells (tol 1e-12)"};
}

// Criterion 2: means against the printed 4-decimal table.
Outcome published_means() {
  const auto table = posterior_mean_table(train_fixture().posteriors());
  std::ostringstream misses;
  int bad = 0;
  for (std::size_t j = 0; j < 7; ++j) {
    for (std::size_t i = 0; i < 5; ++i) {
      const double diff = std::abs(table(j, i) - oracle::kPublishedMeans[j][i]);
      if (diff > 5e-5) {
        ++bad;
        misses << "; P" << i + 1 << " type " << j + 1 << ": computed " << fmt("%.6f", table(j, i))
               << " printed " << fmt("%.4f", oracle::kPublishedMeans[j][i]);
      }
    }
  }
  return {bad == 0, std::to_string(35 - bad) + "/35 cells within 5e-5" + misses.str()};
}

// Criterion 3: single type-7 arrowhead under the stated class prior.
Outcome single_arrowhead() {
  const auto c = classify(train_fixture(), single(6));
  std::vector<oracle::Rational> w;
  oracle::Rational total = 0;
  const oracle::Rational prior[] = {{15, 100}, {20, 100}, {35, 100}, {15, 100}, {15, 100}};
  for (std::size_t i = 0; i < 5; ++i) {
    w.push_back(exact_mean(i, 6) * prior[i]);
    total += w.back();
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < 5; ++i) worst = std::max(worst, std::abs(c.probs[i] - oracle::to_double(w[i] / total)));
  std::ostringstream probs;
  for (double p : c.probs) probs << ' ' << fmt("%.4f", p);
  return {c.argmax_label == "P3" && worst <= 1e-10,
          "argmax " + c.argmax_label + ", probs" + probs.str() + ", max diff vs exact " + fmt("%.3g", worst) +
              " (tol 1e-10)"};
}

// Criterion 4: predictive sums to 1 over all compositions.
Outcome predictive_normalization() {
  const auto model = train_fixture();
  auto sum_over = [](const DirichletParams& post, std::int64_t n, std::size_t parts, std::size_t& count) {
    double s = 0.0;
    const auto all = oracle::compositions(n, parts);
    count = all.size();
    for (const auto& y : all) s += std::exp(log_predictive_likelihood(post, CountVector(y)));
    return s;
  };
  std::size_t c7 = 0, c3 = 0;
  const double s7 = sum_over(model.posteriors()[2], 3, 7, c7);
  const double s3 = sum_over(DirichletParams({0.4, 2.75, 7.0 / 3.0}), 5, 3, c3);
  const double e7 = std::abs(s7 - 1.0), e3 = std::abs(s3 - 1.0);
  return {c7 == 84 && e7 <= 1e-10 && e3 <= 1e-10,
          std::to_string(c7) + " compositions (n=3, J=7): |sum-1| = " + fmt("%.3g", e7) + "; " +
              std::to_string(c3) + " compositions (n=5, J=3): |sum-1| = " + fmt("%.3g", e3) + " (tol 1e-10)"};
}

// Criterion 5: closed form against 10^6-draw Monte Carlo.
Outcome oracle_agreement() {
  const auto model = train_fixture();
  const std::uint64_t seed = 20210611;
  const auto queries = random_queries(10, 7, 6, derive_seed(seed, 0));
  int agree = 0, total = 0;
  double worst_ratio = 0.0;
  for (std::size_t i = 0; i < 5; ++i) {
    const auto results = mc_predictive_oracle(model.posteriors()[i], queries, 1'000'000, derive_seed(seed, i + 1));
    for (const auto& r : results) {
      ++total;
      agree += r.agrees(1e-2);
      worst_ratio = std::max(worst_ratio, r.abs_error() / std::max(1e-2, 3.0 * r.mc_stderr));
    }
  }
  return {agree == total && total == 50,
          std::to_string(agree) + "/" + std::to_string(total) +
              " pairs within max(1e-2, 3 stderr); worst error/tolerance = " + fmt("%.3f", worst_ratio)};
}

// Criterion 6: one-arrowhead predictive equals the posterior mean.
Outcome single_count_reduction() {
  const auto model = train_fixture();
  double worst = 0.0;
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 7; ++j) {
      const double p = std::exp(log_predictive_likelihood(model.posteriors()[i], single(j)));
      worst = std::max(worst, std::abs(p - oracle::to_double(exact_mean(i, j))));
    }
  }
  return {worst <= 1e-12, "max |P(e_j) - mean| = " + fmt("%.3g", worst) + " over 35 pairs (tol 1e-12)"};
}

// Criterion 7: nothing is driven to 0 or 1.
Outcome no_extinction() {
  const auto model = train_fixture();
  const auto table = posterior_mean_table(model.posteriors());
  int zero_cells = 0;
  bool ok = true;
  double min_alpha = 1e300, min_mean = 1.0, max_mean = 0.0;
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 7; ++j) {
      zero_cells += oracle::kPeriodCounts[i][j] == 0;
      const double a = model.posteriors()[i][j];
      const double m = table(j, i);
      ok = ok && a > 0.0 && m > 0.0 && m < 1.0;
      min_alpha = std::min(min_alpha, a);
      min_mean = std::min(min_mean, m);
      max_mean = std::max(max_mean, m);
    }
  }
  return {ok, "35/35 cells with alpha > 0 and mean in (0,1), incl. " + std::to_string(zero_cells) +
                  " zero-count cells; min alpha " + fmt("%.6f", min_alpha) + ", means in [" +
                  fmt("%.4f", min_mean) + ", " + fmt("%.4f", max_mean) + "]"};
}

// Criterion 8: model round trip and reproducible eval reports.
Outcome round_trip_and_determinism() {
  const auto model = train_fixture();
  const auto text = serialize_model(model);
  const auto back = parse_model(text);
  const bool identity = back == model && serialize_model(back) == text;

  std::random_device rd;
  const fs::path dir = fs::temp_directory_path() / ("dirimult_accept_" + std::to_string(rd()));
  bool same = true;
  {
    std::ostringstream out_a, out_b, err;
    const std::vector<std::string> base{"eval", kData + "/synthetic_sites.csv", "--seed", "20210611",
                                        "--oracle-samples", "10000", "--out"};
    auto a = base, b = base;
    a.push_back((dir / "a").string());
    b.push_back((dir / "b").string());
    same = run_cli(a, out_a, err) == kExitOk && run_cli(b, out_b, err) == kExitOk && out_a.str() == out_b.str();
    for (const char* name : {"loo.csv", "oracle.csv", "report.txt"}) {
      same = same && read_file((dir / "a" / name).string()) == read_file((dir / "b" / name).string());
    }
  }
  std::error_code ec;
  fs::remove_all(dir, ec);
  return {identity && same, std::string("serialize/parse identity: ") + (identity ? "yes" : "no") +
                                "; eval stdout, loo.csv, oracle.csv, report.txt identical: " + (same ? "yes" : "no")};
}

// Criterion 9: the published per-site results rely on unpublished counts;
// the synthetic demo corpus is pinned instead.
Outcome demo_corpus_regression() {
  const auto model = train_fixture();
  const auto set = parse_query_csv(read_file(kData + "/demo_queries.csv"));
  const std::vector<std::string> pinned{"P1", "P2", "P2", "P3", "P3", "P4", "P3", "P3", "P2",
                                        "P3", "P3", "P4", "P1", "P2", "P3", "P4", "P3", "P1",
                                        "P4", "P2", "P5", "P2", "P3", "P2", "P4"};
  std::size_t match = 0;
  for (std::size_t k = 0; k < set.records.size() && k < pinned.size(); ++k) {
    match += classify(model, set.records[k].counts).argmax_label == pinned[k];
  }
  return {set.records.size() == pinned.size() && match == pinned.size(),
          "substitute check: " + std::to_string(match) + "/" + std::to_string(pinned.size()) +
              " synthetic demo queries match pinned labels (published per-site counts are unavailable)"};
}

}  // namespace

int main() {
  struct Criterion {
    int number;
    const char* name;
    std::function<Outcome()> run;
    double budget_seconds;
  };
  const std::vector<Criterion> criteria{
      {1, "posterior Dirichlet parameters", posterior_parameters, 1.0},
      {2, "published posterior means", published_means, 1.0},
      {3, "single type-7 arrowhead, stated prior", single_arrowhead, 0.0},
      {4, "predictive normalization", predictive_normalization, 1.0},
      {5, "Monte-Carlo oracle agreement", oracle_agreement, 60.0},
      {6, "single-arrowhead reduction", single_count_reduction, 0.0},
      {7, "no extinction", no_extinction, 0.0},
      {8, "round trip and determinism", round_trip_and_determinism, 0.0},
      {9, "per-site classification (substituted)", demo_corpus_regression, 0.0},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome{false, ""};
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.budget_seconds > 0.0 && seconds >= c.budget_seconds) {
      outcome.pass = false;
      outcome.detail += "; over time budget of " + fmt("%.0f", c.budget_seconds) + " s";
    }
    failures += !outcome.pass;
    std::printf("%s %d %s: %s [%.3f s]\n", outcome.pass ? "PASS" : "FAIL", c.number, c.name,
                outcome.detail.c_str(), seconds);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
