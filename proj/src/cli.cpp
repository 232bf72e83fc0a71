#include "dirimult/cli.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "dirimult/classifier.hpp"
#include "dirimult/dataset.hpp"
#include "dirimult/evaluation.hpp"
#include "dirimult/plot.hpp"
#include "dirimult/random.hpp"

namespace dirimult {

namespace {

constexpr std::uint64_t kDefaultSeed = 20210611;
constexpr double kExplicitPriorTolerance = 1e-9;

struct RunConfig {
  std::string training_path;
  std::string model_path;
  std::string query_path;
  std::string roster_path;
  std::string out_path;
  std::string prior_family = "perks";
  std::string class_prior_source;
  std::vector<double> explicit_prior;
  std::optional<std::uint64_t> seed;
  bool full_precision = false;
  std::uint64_t oracle_samples = 100'000;
  std::size_t oracle_queries = 10;
};

// Prefixes parse errors with the file they came from.
template <typename Fn>
auto with_path(const std::string& path, Fn&& fn) {
  try {
    return fn(read_file(path));
  } catch (const ParseError& e) {
    throw ValidationError(path + ":" + std::to_string(e.line()) + ": " + e.detail());
  } catch (const ValidationError& e) {
    const std::string what = e.what();
    if (what.starts_with(path)) throw;
    throw ValidationError(path + ": " + what);
  }
}

std::string prob_string(double p, bool full) {
  char buf[40];
  std::snprintf(buf, sizeof buf, full ? "%.17g" : "%.4f", p);
  return buf;
}

void write_text(const std::string& path, const std::string& body) {
  std::ofstream file(path, std::ios::binary);
  if (!file) throw ValidationError(path + ": cannot open for writing");
  file << body;
  if (!file.flush()) throw ValidationError(path + ": write failed");
}

std::uint64_t resolve_seed(const RunConfig& cfg) {
  if (cfg.seed) return *cfg.seed;
  if (const char* env = std::getenv("DIRIMULT_SEED"); env && *env) {
    std::uint64_t value = 0;
    const std::string_view s(env);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
      throw ValidationError("DIRIMULT_SEED is not an unsigned integer: '" + std::string(s) + "'");
    }
    return value;
  }
  return kDefaultSeed;
}

std::vector<double> checked_explicit_prior(const std::vector<double>& values, std::size_t classes) {
  if (values.size() != classes) {
    throw ValidationError("explicit class prior has " + std::to_string(values.size()) +
                          " values for " + std::to_string(classes) + " classes");
  }
  double sum = 0.0;
  for (double v : values) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError("explicit class prior: negative or non-finite value");
    sum += v;
  }
  if (std::abs(sum - 1.0) > kExplicitPriorTolerance) {
    throw ValidationError("explicit class prior values must sum to 1");
  }
  std::vector<double> out(values);
  for (double& v : out) v /= sum;
  return out;
}

struct ResolvedPrior {
  ClassPrior prior;
  ClassPriorSource source;
  std::optional<std::vector<double>> explicit_values;
};

// Precedence: --class-prior when given; otherwise explicit values (flag,
// then file directive), then empirical proportions.
ResolvedPrior resolve_class_prior(const RunConfig& cfg, const Corpus& corpus) {
  const std::size_t classes = corpus.classes.size();
  std::optional<std::vector<double>> explicit_values;
  if (!cfg.explicit_prior.empty()) {
    explicit_values = checked_explicit_prior(cfg.explicit_prior, classes);
  } else if (corpus.class_prior) {
    explicit_values = checked_explicit_prior(*corpus.class_prior, classes);
  }
  ClassPriorSource source = explicit_values ? ClassPriorSource::explicit_values
                                            : ClassPriorSource::empirical;
  if (!cfg.class_prior_source.empty()) source = parse_class_prior_source(cfg.class_prior_source);

  switch (source) {
    case ClassPriorSource::explicit_values:
      if (!explicit_values) {
        throw ValidationError("--class-prior explicit needs --explicit-prior or a class_prior directive");
      }
      return {ClassPrior(*explicit_values), source, explicit_values};
    case ClassPriorSource::uniform:
      return {ClassPrior::uniform(classes), source, std::nullopt};
    case ClassPriorSource::empirical:
      break;
  }
  std::vector<std::string> labels;
  if (!cfg.roster_path.empty()) {
    for (auto& entry : with_path(cfg.roster_path, [](const std::string& t) { return parse_site_roster(t); })) {
      labels.push_back(std::move(entry.class_label));
    }
  } else {
    labels = corpus.record_labels();
  }
  return {empirical_class_prior(labels, corpus.classes), source, std::nullopt};
}

Corpus load_corpus(const std::string& path) {
  return with_path(path, [](const std::string& t) { return parse_training_csv(t); });
}

FittedModel train_model(const RunConfig& cfg, const Corpus& corpus, ResolvedPrior& resolved) {
  const PriorFamily family = parse_prior_family(cfg.prior_family);
  resolved = resolve_class_prior(cfg, corpus);
  return fit_model(corpus.typology, corpus.classes, corpus.class_totals(), resolved.prior, family);
}

void print_summary(const FittedModel& model, ClassPriorSource source, std::ostream& out) {
  out << "Posterior Dirichlet parameters (prior: " << to_string(model.family()) << ")\n";
  for (std::size_t i = 0; i < model.num_classes(); ++i) {
    out << model.class_labels()[i] << '\t'
        << format_dirichlet(model.posteriors()[i], model.family()) << '\n';
  }
  out << "\nPosterior means\n";
  out << "type";
  for (const auto& c : model.class_labels()) out << '\t' << c;
  out << '\n';
  const auto table = posterior_mean_table(model.posteriors());
  for (std::size_t j = 0; j < table.categories(); ++j) {
    out << model.typology().label(j);
    for (std::size_t i = 0; i < table.classes(); ++i) out << '\t' << prob_string(table(j, i), false);
    out << '\n';
  }
  out << "\nClass prior (" << to_string(source) << ")\n";
  for (std::size_t i = 0; i < model.num_classes(); ++i) {
    out << model.class_labels()[i] << '\t' << prob_string(model.prior()[i], false) << '\n';
  }
}

int cmd_train(const RunConfig& cfg, std::ostream& out) {
  const Corpus corpus = load_corpus(cfg.training_path);
  ResolvedPrior resolved{ClassPrior::uniform(1), ClassPriorSource::uniform, std::nullopt};
  const FittedModel model = train_model(cfg, corpus, resolved);
  print_summary(model, resolved.source, out);
  const std::string path = cfg.out_path.empty() ? "model.txt" : cfg.out_path;
  write_text(path, serialize_model(model));
  out << "\nwrote " << path << '\n';
  return kExitOk;
}

int cmd_classify(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const FittedModel model =
      with_path(cfg.model_path, [](const std::string& t) { return parse_model(t); });
  const QuerySet queries =
      with_path(cfg.query_path, [](const std::string& t) { return parse_query_csv(t); });
  if (queries.type_labels.empty()) return kExitOk;  // empty query file
  if (queries.type_labels != model.typology().labels()) {
    throw ValidationError(cfg.query_path + ": query columns do not match the model typology");
  }
  std::vector<CountVector> counts;
  for (const auto& q : queries.records) counts.push_back(q.counts);
  const auto results = classify_batch(model, counts);

  std::ostringstream table;
  table << "site_id";
  for (const auto& c : model.class_labels()) table << ",P(" << csv_escape(c) << ')';
  table << ",argmax,flag\n";
  for (std::size_t r = 0; r < results.size(); ++r) {
    table << csv_escape(queries.records[r].site_id);
    const auto& entry = results[r];
    if (entry.ok()) {
      for (double p : entry.result->probs) table << ',' << prob_string(p, cfg.full_precision);
      table << ',' << csv_escape(entry.result->argmax_label) << ",\n";
      for (const auto& w : entry.result->warnings) {
        err << "warning: " << queries.records[r].site_id << ": " << w << '\n';
      }
    } else {
      for (std::size_t i = 0; i < model.num_classes(); ++i) table << ",NA";
      table << ",NA," << csv_escape(entry.flag) << '\n';
      err << "warning: " << queries.records[r].site_id << ": " << entry.flag << '\n';
    }
  }
  if (cfg.out_path.empty()) {
    out << table.str();
  } else {
    write_text(cfg.out_path, table.str());
  }
  return kExitOk;
}

int cmd_plot(const RunConfig& cfg, std::ostream& out) {
  const FittedModel model =
      with_path(cfg.model_path, [](const std::string& t) { return parse_model(t); });
  const std::filesystem::path dir = cfg.out_path.empty() ? "." : cfg.out_path;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  const auto bars = (dir / "posterior_means.svg").string();
  const auto marginals = (dir / "marginals.svg").string();
  write_text(bars, render_mean_bars_svg(model));
  write_text(marginals, render_marginals_svg(model));
  out << "wrote " << bars << '\n' << "wrote " << marginals << '\n';
  return kExitOk;
}

int cmd_eval(const RunConfig& cfg, std::ostream& out) {
  const Corpus corpus = load_corpus(cfg.training_path);
  const std::uint64_t seed = resolve_seed(cfg);
  ResolvedPrior resolved{ClassPrior::uniform(1), ClassPriorSource::uniform, std::nullopt};
  const FittedModel model = train_model(cfg, corpus, resolved);

  std::string loo_csv;
  std::string loo_text;
  if (corpus.records.size() >= 2) {
    const auto report = leave_one_out(corpus, model.family(), resolved.source,
                                      resolved.explicit_values);
    loo_csv = format_loo_csv(report);
    loo_text = format_loo_text(report);
  } else {
    loo_text = "Leave-one-out cross-validation skipped: fewer than two records\n";
  }

  std::vector<CountVector> queries;
  std::vector<std::string> names;
  if (!cfg.query_path.empty()) {
    const auto set = with_path(cfg.query_path, [](const std::string& t) { return parse_query_csv(t); });
    if (!set.type_labels.empty() && set.type_labels != model.typology().labels()) {
      throw ValidationError(cfg.query_path + ": query columns do not match the model typology");
    }
    for (const auto& q : set.records) {
      if (q.counts.total() == 0) continue;
      queries.push_back(q.counts);
      names.push_back(q.site_id + " " + describe_counts(q.counts));
    }
  } else {
    queries = random_queries(cfg.oracle_queries, model.typology().size(), 6, derive_seed(seed, 0));
    for (const auto& q : queries) names.push_back(describe_counts(q));
  }

  std::vector<OracleRow> rows;
  for (std::size_t i = 0; i < model.num_classes(); ++i) {
    const auto results = mc_predictive_oracle(model.posteriors()[i], queries, cfg.oracle_samples,
                                              derive_seed(seed, i + 1));
    for (std::size_t q = 0; q < results.size(); ++q) {
      rows.push_back({model.class_labels()[i], names[q], results[q]});
    }
  }

  out << "seed: " << seed << "\n\n" << loo_text << '\n' << format_oracle_text(rows);
  if (!cfg.out_path.empty()) {
    std::filesystem::create_directories(cfg.out_path);
    const std::filesystem::path dir(cfg.out_path);
    if (!loo_csv.empty()) write_text((dir / "loo.csv").string(), loo_csv);
    write_text((dir / "oracle.csv").string(), format_oracle_csv(rows));
    write_text((dir / "report.txt").string(),
               "seed: " + std::to_string(seed) + "\n\n" + loo_text + '\n' + format_oracle_text(rows));
  }
  return kExitOk;
}

void add_model_flags(CLI::App& cmd, RunConfig& cfg) {
  cmd.add_option("--prior", cfg.prior_family, "Dirichlet prior family")
      ->check(CLI::IsMember({"perks", "jeffreys", "laplace", "haldane"}));
  cmd.add_option("--class-prior", cfg.class_prior_source, "Class prior source")
      ->check(CLI::IsMember({"empirical", "uniform", "explicit"}));
  cmd.add_option("--explicit-prior", cfg.explicit_prior, "Class prior values v1,..,vI")
      ->delimiter(',');
  cmd.add_option("--roster", cfg.roster_path, "Site roster CSV (site_id,class) for the empirical prior");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"Dirichlet-multinomial classification of count data", "dirimult"};
  app.require_subcommand(1);

  auto* train = app.add_subcommand("train", "Fit per-class posteriors from a training CSV");
  train->add_option("training_csv", cfg.training_path)->required();
  add_model_flags(*train, cfg);
  train->add_option("--out", cfg.out_path, "Model file to write (default model.txt)");

  auto* classify_cmd = app.add_subcommand("classify", "Classify the rows of a query CSV");
  classify_cmd->add_option("model", cfg.model_path)->required();
  classify_cmd->add_option("query_csv", cfg.query_path)->required();
  classify_cmd->add_option("--out", cfg.out_path, "Write the table here instead of stdout");
  classify_cmd->add_flag("--full-precision", cfg.full_precision, "Print probabilities with 17 digits");

  auto* plot = app.add_subcommand("plot", "Write SVG figures for a model");
  plot->add_option("model", cfg.model_path)->required();
  plot->add_option("--out", cfg.out_path, "Output directory (default .)");

  auto* eval = app.add_subcommand("eval", "Leave-one-out and Monte-Carlo checks");
  eval->add_option("training_csv", cfg.training_path)->required();
  add_model_flags(*eval, cfg);
  eval->add_option("--seed", cfg.seed, "Master seed (falls back to DIRIMULT_SEED)");
  eval->add_option("--oracle-samples", cfg.oracle_samples, "Monte-Carlo draws per posterior")
      ->check(CLI::Range(kMinOracleSamples, std::uint64_t{1'000'000'000}));
  eval->add_option("--oracle-queries", cfg.oracle_queries, "Random oracle queries when --queries is absent");
  eval->add_option("--queries", cfg.query_path, "Query CSV to use for the oracle check");
  eval->add_option("--out", cfg.out_path, "Directory for loo.csv, oracle.csv and report.txt");

  std::vector<const char*> argv{"dirimult"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (train->parsed()) return cmd_train(cfg, out);
    if (classify_cmd->parsed()) return cmd_classify(cfg, out, err);
    if (plot->parsed()) return cmd_plot(cfg, out);
    if (eval->parsed()) return cmd_eval(cfg, out);
  } catch (...) {
    return report_exception(std::current_exception(), err);
  }
  return kExitInternal;
}

int report_exception(std::exception_ptr error, std::ostream& err) {
  try {
    std::rethrow_exception(error);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const InvariantViolation& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  } catch (...) {
    err << "internal error: unknown exception\n";
    return kExitInternal;
  }
}

}  // namespace dirimult
