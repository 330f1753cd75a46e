#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

// Runs the CLI through the shell; stderr is folded into the captured output.
Result adls(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " " + ADLS_CLI + " " + args + " 2>&1";
  Result r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

struct Scratch {
  fs::path dir;
  explicit Scratch(const std::string& name) : dir(fs::temp_directory_path() / name) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
  std::string operator/(const std::string& leaf) const { return (dir / leaf).string(); }
};

std::string fixture() { return std::string(ADLS_SOURCE_DIR) + "/data/dl_stream_kappa.csv"; }

}  // namespace

TEST_CASE("missing dataset exits 2 with a structured error") {
  const Result r = adls("run --dataset /nonexistent/Foo_TRAIN.tsv --model MLP");
  CHECK(r.code == 2);
  CHECK(r.out.find("\"kind\":\"input\"") != std::string::npos);
  CHECK(r.out.find("/nonexistent/Foo_TRAIN.tsv") != std::string::npos);
}

TEST_CASE("bad config values exit 2") {
  CHECK(adls("run --source synthetic --batch-size 0").code == 2);
  CHECK(adls("run --source synthetic --set nonsense=1").code == 2);
  CHECK(adls("run --source synthetic --model GRU").code == 2);
  CHECK(adls("run --config /nonexistent/run.cfg").code == 2);
  CHECK(adls("frobnicate").code == 2);
}

TEST_CASE("deterministic runs are byte-reproducible, also from the written config") {
  Scratch s("adls_cli_det");
  REQUIRE(adls("synth -o " + (s / "syn.tsv") + " --instances 150 --length 32 --seed 4").code == 0);
  const std::string common = "run --dataset " + (s / "syn.tsv") + " --model CNN --batch-size 8 --deterministic";
  REQUIRE(adls(common + " --output-dir " + (s / "a")).code == 0);
  REQUIRE(adls(common + " --output-dir " + (s / "b")).code == 0);
  const std::string first = slurp(s.dir / "a" / "predictions.csv");
  CHECK(first.size() > 100);
  CHECK(first == slurp(s.dir / "b" / "predictions.csv"));
  CHECK(fs::exists(s.dir / "a" / "timings.csv"));

  REQUIRE(adls("run -c " + (s / "a/config.txt") + " --output-dir " + (s / "c")).code == 0);
  CHECK(first == slurp(s.dir / "c" / "predictions.csv"));
}

TEST_CASE("precedence: file < environment < command line") {
  Scratch s("adls_cli_prec");
  {
    std::ofstream cfg(s / "run.cfg");
    cfg << "source = synthetic\nsynthetic_instances = 60\nsynthetic_length = 16\n"
        << "batch_size = 4\ndeterministic = true\noutput_dir = " << (s / "from_file") << "\n";
  }
  REQUIRE(adls("run -c " + (s / "run.cfg")).code == 0);
  CHECK(fs::exists(s.dir / "from_file" / "summary.json"));

  const std::string env = "ADLS_OUTPUT_DIR=" + (s / "from_env");
  REQUIRE(adls("run -c " + (s / "run.cfg"), env).code == 0);
  CHECK(fs::exists(s.dir / "from_env" / "summary.json"));

  REQUIRE(adls("run -c " + (s / "run.cfg") + " --output-dir " + (s / "from_cli"), env).code == 0);
  CHECK(fs::exists(s.dir / "from_cli" / "summary.json"));
  CHECK(slurp(s.dir / "from_cli" / "config.txt").find("batch_size = 4") != std::string::npos);
}

TEST_CASE("compare the bundled result matrix") {
  Scratch s("adls_cli_cmp");
  const Result r = adls("compare " + fixture() + " -o " + s.dir.string());
  REQUIRE(r.code == 0);
  CHECK(r.out.find("CNN") != std::string::npos);
  const std::string ranks = slurp(s.dir / "ranks.csv");
  CHECK(ranks.rfind("position,model,average_rank\n1,CNN,", 0) == 0);
  const std::string posthoc = slurp(s.dir / "posthoc.csv");
  std::size_t rejects = 0, pos = 0;
  while ((pos = posthoc.find(",reject", pos)) != std::string::npos) ++rejects, ++pos;
  CHECK(rejects == 5);
  CHECK(fs::exists(s.dir / "comparison.txt"));
}

TEST_CASE("compare rejects a matrix with missing cells") {
  Scratch s("adls_cli_cmp_bad");
  {
    std::ofstream f(s / "m.csv");
    f << "dataset,A,B,C\nd1,0.9,0.8,0.7\nd2,0.5,,0.4\n";
  }
  const Result r = adls("compare " + (s / "m.csv"));
  CHECK(r.code == 2);
  CHECK(r.out.find("d2") != std::string::npos);
}

TEST_CASE("compare merges run summaries") {
  Scratch s("adls_cli_cmp_json");
  std::string inputs;
  for (int d : {1, 2, 3}) {
    const std::string data = s / ("Wave" + std::to_string(d) + "_TRAIN.tsv");
    REQUIRE(adls("synth -o " + data + " --instances 40 --length 8 --seed " + std::to_string(d)).code == 0);
    for (const char* arch : {"MLP", "CNN", "LSTM"}) {
      const std::string out = s / (std::string(arch) + std::to_string(d));
      REQUIRE(adls("run --dataset " + data + " --batch-size 8 --deterministic --model " + std::string(arch) +
                   " --output-dir " + out).code == 0);
      inputs += " " + out + "/summary.json";
    }
  }
  const Result r = adls("compare" + inputs);
  CHECK(r.code == 0);
  CHECK(r.out.find("LSTM") != std::string::npos);
}

TEST_CASE("bench with one architecture writes one row") {
  Scratch s("adls_cli_bench");
  const Result r = adls("bench --models MLP --source synthetic --synthetic-instances 60 --synthetic-length 16 "
                        "--batch-size 8 --output-dir " + s.dir.string());
  REQUIRE(r.code == 0);
  const std::string csv = slurp(s.dir / "bench.csv");
  std::size_t lines = 0;
  for (char ch : csv) lines += ch == '\n';
  CHECK(lines == 2);
  CHECK(csv.find("MLP") != std::string::npos);
}

TEST_CASE("diverging training exits 4 and keeps the partial summary") {
  Scratch s("adls_cli_fail");
  REQUIRE(adls("synth -o " + (s / "syn.tsv") + " --instances 80 --length 16").code == 0);
  const Result r = adls("run --dataset " + (s / "syn.tsv") + " --model MLP --learning-rate 1e30 --deterministic "
                        "--batch-size 8 --output-dir " + (s / "out"));
  CHECK(r.code == 4);
  CHECK(r.out.find("\"kind\":\"training\"") != std::string::npos);
  CHECK(slurp(s.dir / "out" / "summary.json").find("\"training\"") != std::string::npos);
}
