#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "dirimult/cli.hpp"
#include "dirimult/dataset.hpp"
#include "dirimult/error.hpp"

using namespace dirimult;
namespace fs = std::filesystem;

namespace {

const std::string kData = DIRIMULT_DATA_DIR;

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("dirimult_cli_" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

void write(const std::string& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
}

std::string train_periods(const TempDir& dir) {
  const auto model = dir / "model.txt";
  const auto r = run({"train", kData + "/periods_training.csv", "--out", model});
  REQUIRE(r.code == 0);
  return model;
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) rows.push_back(split_csv_line(line));
  return rows;
}

}  // namespace

TEST_CASE("train") {
  TempDir dir;
  SUBCASE("prints the posterior of every period") {
    const auto r = run({"train", kData + "/periods_training.csv", "--out", dir / "m.txt"});
    REQUIRE(r.code == 0);
    for (const char* expected : {
             "P1\tDir(15/7, 22/7, 8/7, 1/7, 1/7, 1/7, 1/7)",
             "P2\tDir(29/7, 36/7, 15/7, 8/7, 1/7, 1/7, 1/7)",
             "P3\tDir(43/7, 1/7, 43/7, 64/7, 29/7, 1/7, 71/7)",
             "P4\tDir(15/7, 1/7, 15/7, 8/7, 15/7, 1/7, 43/7)",
             "P5\tDir(1/7, 1/7, 1/7, 15/7, 1/7, 8/7, 36/7)",
         }) {
      CHECK(r.out.find(expected) != std::string::npos);
    }
    CHECK(r.out.find("7\t0.0204\t0.0110\t0.2817\t0.4388\t0.5714") != std::string::npos);
    CHECK(r.out.find("Class prior (explicit)") != std::string::npos);
    CHECK(fs::exists(dir / "m.txt"));
  }
  SUBCASE("jeffreys prior adds one half") {
    const auto r = run({"train", kData + "/periods_training.csv", "--prior", "jeffreys", "--out", dir / "m.txt"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("P1\tDir(5/2, 7/2, 3/2, 1/2, 1/2, 1/2, 1/2)") != std::string::npos);
  }
  SUBCASE("class prior sources") {
    auto r = run({"train", kData + "/periods_training.csv", "--roster", kData + "/site_roster.csv",
                  "--class-prior", "empirical", "--out", dir / "m.txt"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("P3\t0.4194") != std::string::npos);  // 13 of 31
    r = run({"train", kData + "/periods_training.csv", "--class-prior", "uniform", "--out", dir / "m.txt"});
    CHECK(r.out.find("P3\t0.2000") != std::string::npos);
    r = run({"train", kData + "/periods_training.csv", "--explicit-prior", "0.1,0.1,0.1,0.1,0.6",
             "--out", dir / "m.txt"});
    CHECK(r.out.find("P5\t0.6000") != std::string::npos);
    r = run({"train", kData + "/periods_training.csv", "--explicit-prior", "0.1,0.1,0.1,0.1,0.1",
             "--out", dir / "m.txt"});
    CHECK(r.code == kExitValidation);
  }
  SUBCASE("bad input exits 1 with the file and line") {
    write(dir / "empty.csv", "");
    CHECK(run({"train", dir / "empty.csv", "--out", dir / "m.txt"}).code == kExitValidation);
    CHECK(run({"train", dir / "missing.csv", "--out", dir / "m.txt"}).code == kExitValidation);
    write(dir / "neg.csv", "site_id,class,a,b\ns1,X,1,0\ns2,Y,0,-1\n");
    const auto r = run({"train", dir / "neg.csv", "--out", dir / "m.txt"});
    CHECK(r.code == kExitValidation);
    CHECK(r.err.find(dir / "neg.csv" + ":3:") != std::string::npos);
    CHECK(r.err.find("'b'") != std::string::npos);
    CHECK(run({"train", kData + "/periods_training.csv", "--prior", "bogus", "--out", dir / "m.txt"}).code ==
          kExitValidation);
    CHECK(run({"train", kData + "/periods_training.csv", "--prior", "haldane", "--out", dir / "m.txt"}).code ==
          kExitValidation);
  }
}

TEST_CASE("classify") {
  TempDir dir;
  const auto model = train_periods(dir);

  SUBCASE("one type-7 arrowhead goes to P3") {
    write(dir / "q.csv", "site_id,1,2,3,4,5,6,7\nlone point,0,0,0,0,0,0,1\n");
    const auto r = run({"classify", model, dir / "q.csv"});
    REQUIRE(r.code == 0);
    CHECK(r.out ==
          "site_id,P(P1),P(P2),P(P3),P(P4),P(P5),argmax,flag\n"
          "lone point,0.0120,0.0086,0.3861,0.2577,0.3356,P3,\n");
  }
  SUBCASE("full precision matches the in-memory pipeline and sums to 1") {
    const auto r = run({"classify", model, kData + "/demo_queries.csv", "--full-precision"});
    REQUIRE(r.code == 0);
    const auto fitted = parse_model(read_file(model));
    const auto queries = parse_query_csv(read_file(kData + "/demo_queries.csv"));
    const auto rows = csv_rows(r.out);
    REQUIRE(rows.size() == queries.records.size() + 1);
    for (std::size_t k = 0; k < queries.records.size(); ++k) {
      const auto& row = rows[k + 1];
      const auto c = classify(fitted, queries.records[k].counts);
      CHECK(row[0] == queries.records[k].site_id);
      double sum = 0.0;
      for (std::size_t i = 0; i < 5; ++i) {
        const double p = std::stod(row[i + 1]);
        CHECK(p == c.probs[i]);
        sum += p;
      }
      CHECK(std::abs(sum - 1.0) <= 1e-12);
      CHECK(row[6] == c.argmax_label);
    }
  }
  SUBCASE("rounded output sums to 1 within rounding") {
    const auto r = run({"classify", model, kData + "/demo_queries.csv"});
    REQUIRE(r.code == 0);
    const auto rows = csv_rows(r.out);
    for (std::size_t k = 1; k < rows.size(); ++k) {
      double sum = 0.0;
      for (std::size_t i = 1; i <= 5; ++i) sum += std::stod(rows[k][i]);
      CHECK(std::abs(sum - 1.0) <= 5 * 5e-5);
    }
  }
  SUBCASE("a query equal to a class's own training counts favours that class") {
    write(dir / "sep.csv",
          "site_id,class,a,b,c,d\nA1,A,5,3,0,0\nB1,B,0,0,4,4\nC1,C,1,0,0,6\n");
    REQUIRE(run({"train", dir / "sep.csv", "--class-prior", "uniform", "--out", dir / "sep.txt"}).code == 0);
    write(dir / "sepq.csv", "site_id,a,b,c,d\nqa,5,3,0,0\nqb,0,0,4,4\nqc,1,0,0,6\n");
    const auto r = run({"classify", dir / "sep.txt", dir / "sepq.csv"});
    REQUIRE(r.code == 0);
    const auto rows = csv_rows(r.out);
    CHECK(rows[1][4] == "A");
    CHECK(rows[2][4] == "B");
    CHECK(rows[3][4] == "C");
  }
  SUBCASE("empty query file") {
    write(dir / "empty.csv", "");
    const auto r = run({"classify", model, dir / "empty.csv"});
    CHECK(r.code == 0);
    CHECK(r.out.empty());
  }
  SUBCASE("typology mismatch") {
    write(dir / "q.csv", "site_id,1,2,3,4,5,6\nx,1,0,0,0,0,0\n");
    const auto r = run({"classify", model, dir / "q.csv"});
    CHECK(r.code == kExitValidation);
    CHECK(r.err.find("typology") != std::string::npos);
  }
  SUBCASE("zero-count rows are flagged, the rest classified") {
    write(dir / "q.csv", "site_id,1,2,3,4,5,6,7\nempty site,0,0,0,0,0,0,0\nfull,1,0,0,0,0,0,0\n");
    const auto r = run({"classify", model, dir / "q.csv", "--out", dir / "out.csv"});
    REQUIRE(r.code == 0);
    const auto rows = csv_rows(read_file(dir / "out.csv"));
    REQUIRE(rows.size() == 3);
    CHECK(rows[1] == std::vector<std::string>{"empty site", "NA", "NA", "NA", "NA", "NA", "NA",
                                              kNoEvidenceFlag});
    CHECK(rows[2][7].empty());
    CHECK(r.err.find("warning: empty site") != std::string::npos);
  }
  SUBCASE("corrupt model") {
    write(dir / "bad.txt", "format_version: 9\n");
    write(dir / "q.csv", "site_id,1,2,3,4,5,6,7\nx,1,0,0,0,0,0,0\n");
    const auto r = run({"classify", dir / "bad.txt", dir / "q.csv"});
    CHECK(r.code == kExitValidation);
    CHECK(r.err.find(dir / "bad.txt" + ":1:") != std::string::npos);
  }
}

TEST_CASE("plot") {
  TempDir dir;
  const auto model = train_periods(dir);
  REQUIRE(run({"plot", model, "--out", dir / "a"}).code == 0);
  REQUIRE(run({"plot", model, "--out", dir / "b"}).code == 0);
  for (const char* name : {"posterior_means.svg", "marginals.svg"}) {
    const auto a = read_file(dir / (std::string("a/") + name));
    CHECK_FALSE(a.empty());
    CHECK(a == read_file(dir / (std::string("b/") + name)));
  }
}

TEST_CASE("eval") {
  TempDir dir;
  SUBCASE("fixed seed gives byte-identical output") {
    const std::vector<std::string> args{"eval", kData + "/synthetic_sites.csv", "--seed", "7",
                                        "--oracle-samples", "10000"};
    auto a = args, b = args;
    a.insert(a.end(), {"--out", dir / "a"});
    b.insert(b.end(), {"--out", dir / "b"});
    const auto ra = run(a), rb = run(b);
    REQUIRE(ra.code == 0);
    CHECK(ra.out == rb.out);
    for (const char* name : {"loo.csv", "oracle.csv", "report.txt"}) {
      CHECK(read_file(dir / (std::string("a/") + name)) == read_file(dir / (std::string("b/") + name)));
    }
    CHECK(ra.out.starts_with("seed: 7\n"));
    CHECK(run({"eval", kData + "/synthetic_sites.csv", "--seed", "8", "--oracle-samples", "10000"}).out !=
          ra.out);
  }
  SUBCASE("seed falls back to the environment") {
    ::setenv("DIRIMULT_SEED", "12345", 1);
    const auto r = run({"eval", kData + "/synthetic_sites.csv", "--oracle-samples", "10000"});
    ::unsetenv("DIRIMULT_SEED");
    REQUIRE(r.code == 0);
    CHECK(r.out.starts_with("seed: 12345\n"));
  }
  SUBCASE("closed form agrees with a million draws on every demo query") {
    const auto r = run({"eval", kData + "/periods_training.csv", "--queries", kData + "/demo_queries.csv",
                        "--oracle-samples", "1000000", "--seed", "1", "--out", dir / "o"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("pairs agreeing: 125 of 125") != std::string::npos);
    const auto rows = csv_rows(read_file(dir / "o/oracle.csv"));
    REQUIRE(rows.size() == 126);
    for (std::size_t k = 1; k < rows.size(); ++k) CHECK(rows[k].back() == "yes");
  }
  SUBCASE("too few oracle samples") {
    CHECK(run({"eval", kData + "/synthetic_sites.csv", "--oracle-samples", "9999"}).code == kExitValidation);
  }
}

TEST_CASE("exit codes") {
  std::ostringstream err;
  CHECK(report_exception(std::make_exception_ptr(ValidationError("bad")), err) == kExitValidation);
  CHECK(report_exception(std::make_exception_ptr(InvariantViolation("broken")), err) == kExitInternal);
  CHECK(report_exception(std::make_exception_ptr(std::runtime_error("boom")), err) == kExitInternal);
  CHECK(report_exception(std::make_exception_ptr(42), err) == kExitInternal);
  CHECK(err.str().find("internal error: broken") != std::string::npos);

  CHECK(run({}).code == kExitValidation);
  CHECK(run({"--help"}).code == kExitOk);
  CHECK(run({"classify"}).code == kExitValidation);
}

TEST_CASE("installed binary") {
  TempDir dir;
  const std::string bin = DIRIMULT_CLI_PATH;
  auto status = [](const std::string& cmd) {
    const int raw = std::system(cmd.c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  };
  const std::string quiet = " > /dev/null 2>&1";
  CHECK(status("'" + bin + "' --help" + quiet) == 0);
  CHECK(status("'" + bin + "' train '" + kData + "/periods_training.csv' --out '" + (dir / "m.txt") + "'" +
               quiet) == 0);
  CHECK(status("'" + bin + "' classify '" + (dir / "m.txt") + "' '" + kData + "/demo_queries.csv' > '" +
               (dir / "out.csv") + "'") == 0);
  CHECK(csv_rows(read_file(dir / "out.csv")).size() == 26);
  CHECK(status("'" + bin + "' train '" + (dir / "nope.csv") + "'" + quiet) == 1);
}
