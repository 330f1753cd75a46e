// Prints one PASS/FAIL line per acceptance criterion; exits non-zero if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "../unit/gradcheck.hpp"
#include "adls/dataset.hpp"
#include "adls/engine.hpp"
#include "adls/experiment.hpp"
#include "adls/kernels.hpp"
#include "adls/layers.hpp"
#include "adls/model.hpp"
#include "adls/prequential.hpp"
#include "adls/snapshot.hpp"
#include "adls/stats.hpp"
#include "adls/stream_source.hpp"

using namespace adls;
using gradcheck::numeric_gradient;
using gradcheck::project;
using gradcheck::random_tensor;
using gradcheck::relative_error;
using kernels::Activation;
using kernels::Padding;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fixed(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// 1. Friedman ranking and post-hoc decisions on the bundled result matrix.
void ranking_and_posthoc(Outcome& o) {
  const auto start = Clock::now();
  const Comparison c = compare_files({std::string(ADLS_SOURCE_DIR) + "/data/dl_stream_kappa.csv"});
  const double elapsed = seconds_since(start);

  const std::map<std::string, double> expected_rank{{"CNN", 1.200}, {"TCN", 2.533}, {"LSTM", 2.566}, {"MLP", 3.700}};
  std::map<std::string, std::size_t> col;
  for (std::size_t j = 0; j < c.matrix.models.size(); ++j) col[c.matrix.models[j]] = j;
  for (const auto& [name, rank] : expected_rank) {
    o.require(col.count(name) == 1, "model " + name + " present");
    if (!col.count(name)) return;
    const double got = c.ranks[col[name]];
    o.detail << " " << name << "=" << fixed(got);
    o.require(std::abs(got - rank) <= 0.05, name + " rank within 0.05 of " + fixed(rank));
  }
  o.detail << "; p=" << c.friedman.p_value;
  o.require(c.friedman.p_value < 1e-3, "Friedman p < 0.001");

  std::vector<double> z;
  for (const auto& e : c.posthoc.entries) z.push_back(std::abs(e.z));
  std::sort(z.rbegin(), z.rend());
  const std::vector<double> expected_z{7.5, 4.1, 4.0, 3.49, 3.39, 0.09};
  o.detail << "; |z|=";
  for (std::size_t i = 0; i < z.size(); ++i) o.detail << (i ? "," : "") << fixed(z[i], 2);
  o.require(z.size() == expected_z.size(), "six pairs");
  for (std::size_t i = 0; i < std::min(z.size(), expected_z.size()); ++i) {
    o.require(std::abs(z[i] - expected_z[i]) <= 0.2, "z[" + std::to_string(i) + "] within 0.2");
  }

  std::size_t rejected = 0;
  for (const auto& e : c.posthoc.entries) {
    const std::set<std::string> pair{c.matrix.models[e.first], c.matrix.models[e.second]};
    const bool lstm_tcn = pair == std::set<std::string>{"LSTM", "TCN"};
    if (lstm_tcn) o.require(!e.reject, "LSTM-TCN equality accepted");
    else o.require(e.reject, "reject " + *pair.begin() + "-" + *pair.rbegin());
    rejected += e.reject;
  }
  o.detail << "; rejected=" << rejected << " (" << c.posthoc.method << "); " << fixed(elapsed * 1000, 1) << " ms";
  o.require(elapsed < 1.0, "runtime under 1 s");
}

// 2. Recursive prequential accuracy against the direct weighted sum; kappa example.
void prequential(Outcome& o) {
  std::mt19937_64 rng(2024);
  double worst = 0.0;
  for (int seq = 0; seq < 100; ++seq) {
    const std::size_t classes = 2 + static_cast<std::size_t>(seq % 4);
    const double alpha = 0.9 + 0.1 * kernels::uniform01(rng);
    PrequentialState state(classes, alpha);
    std::vector<int> correct;
    correct.reserve(10000);
    for (int i = 0; i < 10000; ++i) {
      const std::size_t y = rng() % classes;
      const std::size_t p = kernels::uniform01(rng) < 0.7 ? y : rng() % classes;
      state.update(y, p);
      correct.push_back(y == p);
    }
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < correct.size(); ++i) {
      const double w = std::pow(alpha, static_cast<double>(correct.size() - 1 - i));
      num += w * correct[i];
      den += w;
    }
    worst = std::max(worst, std::abs(state.accuracy() - num / den));
  }
  o.detail << " max |recursive - direct| over 100 x 1e4 = " << worst;
  o.require(worst <= 1e-9, "accuracy agreement within 1e-9");

  const std::vector<double> confusion{3, 1, 2, 4};
  const double k = kappa_from_confusion(confusion, 2);
  PrequentialState counted(2, 1.0);
  for (std::size_t t = 0; t < 2; ++t) {
    for (std::size_t p = 0; p < 2; ++p) {
      for (int n = 0; n < static_cast<int>(confusion[t * 2 + p]); ++n) counted.update(t, p);
    }
  }
  o.detail << "; kappa[[3,1],[2,4]]=" << k << " (streamed " << counted.kappa() << ")";
  o.require(std::abs(k - 0.4) < 1e-12 && std::abs(counted.kappa() - 0.4) < 1e-12, "kappa 0.4");
}

// 3. Analytic gradients against central differences at 64-bit.
void gradients(Outcome& o) {
  const auto start = Clock::now();
  std::mt19937_64 rng(33);
  auto dim = [&](std::size_t lo, std::size_t hi) { return lo + rng() % (hi - lo + 1); };
  std::map<std::string, double> worst;
  auto note = [&](const std::string& k, double e) { worst[k] = std::max(worst[k], e); };

  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n_in = dim(1, 12), n_out = dim(1, 8);
    const Activation act = trial % 2 ? Activation::relu : Activation::linear;
    auto x = random_tensor({n_in}, rng), w = random_tensor({n_in, n_out}, rng), b = random_tensor({n_out}, rng);
    auto r = random_tensor({n_out}, rng);
    auto loss = [&] { return project(kernels::dense_forward(x, w, b, act), r); };
    Tensor<double> gw(w.shape()), gb(b.shape());
    const auto gx = kernels::dense_backward(x, w, kernels::dense_forward(x, w, b, act), r, act, gw, gb);
    note("dense", std::max({relative_error(gx, numeric_gradient(x, loss)), relative_error(gw, numeric_gradient(w, loss)),
                            relative_error(gb, numeric_gradient(b, loss))}));
  }

  for (int trial = 0; trial < 20; ++trial) {
    std::size_t L = dim(1, 16), cin = dim(1, 3), cout = dim(1, 4), k = dim(1, 5), d = dim(1, 3);
    Padding pad = trial % 2 ? Padding::causal : Padding::same;
    if (trial == 0) L = 24, k = 5, d = 4, pad = Padding::causal;
    const Activation act = trial % 3 ? Activation::relu : Activation::linear;
    auto x = random_tensor({L, cin}, rng), w = random_tensor({k, cin, cout}, rng), b = random_tensor({cout}, rng);
    auto r = random_tensor({L, cout}, rng);
    auto loss = [&] { return project(kernels::conv1d_forward(x, w, b, d, pad, act), r); };
    Tensor<double> gw(w.shape()), gb(b.shape());
    const auto out = kernels::conv1d_forward(x, w, b, d, pad, act);
    const auto gx = kernels::conv1d_backward(x, w, out, r, d, pad, act, gw, gb);
    const double e = std::max({relative_error(gx, numeric_gradient(x, loss)),
                               relative_error(gw, numeric_gradient(w, loss)),
                               relative_error(gb, numeric_gradient(b, loss))});
    note(trial == 0 ? "conv1d(d=4,causal)" : "conv1d", e);
  }

  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t L = dim(1, 15), C = dim(1, 4), k = dim(1, 3), stride = dim(1, 3);
    auto x = random_tensor({L, C}, rng);
    auto r = random_tensor({kernels::pooled_length(L, stride), C}, rng);
    kernels::PoolIndex index;
    kernels::max_pool1d_forward(x, k, stride, &index);
    const auto gx = kernels::max_pool1d_backward(r, index, C);
    auto loss = [&] { return project(kernels::max_pool1d_forward(x, k, stride), r); };
    note("maxpool", relative_error(gx, numeric_gradient(x, loss)));
  }

  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t T = dim(1, 6), cin = dim(1, 3), H = dim(1, 4);
    auto x = random_tensor({T, cin}, rng);
    auto wx = random_tensor({cin, 4 * H}, rng, 0.5), wh = random_tensor({H, 4 * H}, rng, 0.5);
    auto b = random_tensor({4 * H}, rng, 0.5);
    auto r = random_tensor({T, H}, rng);
    auto loss = [&] { return project(kernels::lstm_forward(x, wx, wh, b), r); };
    kernels::LstmCache<double> cache;
    kernels::lstm_forward(x, wx, wh, b, &cache);
    Tensor<double> gwx(wx.shape()), gwh(wh.shape()), gb(b.shape());
    const auto gx = kernels::lstm_backward(x, wx, wh, cache, r, gwx, gwh, gb);
    note("lstm", std::max({relative_error(gx, numeric_gradient(x, loss)), relative_error(gwx, numeric_gradient(wx, loss)),
                           relative_error(gwh, numeric_gradient(wh, loss)), relative_error(gb, numeric_gradient(b, loss))}));
  }

  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = dim(2, 10);
    auto logits = random_tensor({n}, rng, 3.0);
    const std::size_t label = rng() % n;
    const auto analytic = kernels::softmax_cross_entropy(logits, label).grad;
    auto loss = [&] { return kernels::softmax_cross_entropy(logits, label).loss; };
    note("softmax-ce", relative_error(analytic, numeric_gradient(logits, loss)));
  }

  const double elapsed = seconds_since(start);
  for (const auto& [name, e] : worst) {
    o.detail << " " << name << "=" << e;
    o.require(e < 1e-4, name + " relative error < 1e-4");
  }
  o.detail << "; " << fixed(elapsed, 2) << " s";
  o.require(elapsed < 60.0, "runtime under 1 min");
}

// 4. Parameter counts against the closed forms.
void parameter_counts(Outcome& o) {
  std::size_t checked = 0;
  for (std::size_t f : {4, 8, 16, 24, 50, 64, 100, 152, 301}) {
    for (std::size_t c : {2, 3, 5, 10}) {
      for (Architecture a : {Architecture::mlp, Architecture::lstm}) {
        ModelSpec s;
        s.architecture = a;
        s.features = f;
        s.classes = c;
        const ParameterCounts p = count_parameters(s);
        o.require(p.weights_only == p.published_formula,
                  std::string(to_string(a)) + " f=" + std::to_string(f) + " c=" + std::to_string(c));
        ++checked;
      }
    }
  }
  o.detail << " MLP/LSTM exact on " << checked << " (f,c) pairs;";
  for (Architecture a : {Architecture::cnn, Architecture::tcn}) {
    o.detail << " " << to_string(a) << " residuals:";
    for (std::size_t f : {16, 64, 150}) {
      ModelSpec s;
      s.architecture = a;
      s.features = f;
      s.classes = 2;
      const ParameterCounts p = count_parameters(s);
      o.detail << " f=" << f << ":" << p.weights_only << "/" << p.published_formula << "(" << p.residual << ")";
    }
    o.detail << ";";
  }
}

// 5. End-to-end learning on the synthetic sinusoid stream, concurrent pipeline.
void learning(Outcome& o) {
  const auto start = Clock::now();
  for (Architecture a : {Architecture::mlp, Architecture::cnn, Architecture::lstm, Architecture::tcn}) {
    double sum = 0.0;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      ExperimentConfig cfg;
      cfg.source = SourceKind::synthetic;
      cfg.synthetic.instances = 2000;
      cfg.synthetic.length = 64;
      cfg.synthetic.snr_db = 10.0;
      cfg.architecture = a;
      cfg.seed = seed;
      cfg.threads = 2;
      cfg.pipeline.batch_size = 16;
      cfg.pipeline.buffer_capacity = 32;
      const RunResult r = run_experiment(cfg, false);
      o.require(r.report.error.empty(), std::string(to_string(a)) + " run error: " + r.report.error);
      o.require(!r.report.deterministic, "concurrent mode");
      sum += r.report.kappa.final_kappa;
    }
    const double mean = sum / 3.0;
    const double threshold = a == Architecture::mlp ? 0.6 : 0.8;
    o.detail << " " << to_string(a) << "=" << fixed(mean);
    o.require(mean >= threshold, std::string(to_string(a)) + " final kappa >= " + fixed(threshold, 1));
  }
  const double elapsed = seconds_since(start);
  o.detail << "; " << fixed(elapsed, 1) << " s";
  o.require(elapsed < 600.0, "runtime under 10 min");
}

// 6. Mean classification latency ordering.
void latency(Outcome& o) {
  ExperimentConfig cfg;
  cfg.source = SourceKind::synthetic;
  cfg.synthetic.instances = 600;
  cfg.synthetic.length = 64;
  cfg.pipeline.batch_size = 16;
  const BenchResult b = bench(cfg, {Architecture::mlp, Architecture::cnn, Architecture::lstm, Architecture::tcn});
  for (const BenchRow& row : b.rows) o.detail << " " << to_string(row.architecture) << "=" << fixed(row.latency.mean_ms, 4) << "ms";
  o.detail << "; " << b.ordering;
  o.require(b.ordering == "MLP < CNN < LSTM < TCN", "ordering MLP < CNN < LSTM < TCN");
}

// 7. Snapshot and pipeline concurrency invariants over 10^4 interleavings.
void concurrency(Outcome& o) {
  constexpr std::uint64_t kVersions = 10000;
  SnapshotSlot<double> slot("stress", 256);
  std::thread writer([&] {
    std::mt19937_64 jitter(7);
    for (std::uint64_t v = 1; v <= kVersions; ++v) {
      slot.publish_with([&](std::span<double> dst) { std::fill(dst.begin(), dst.end(), static_cast<double>(v)); }, v);
      if (jitter() % 4 == 0) std::this_thread::yield();
    }
  });
  std::uint64_t last = 0, torn = 0, regressions = 0, distinct = 0;
  std::mt19937_64 jitter(8);
  while (last < kVersions) {
    const auto* s = slot.latest();
    if (s == nullptr) continue;
    for (double v : s->values) torn += v != static_cast<double>(s->version);
    if (checksum_values(std::span<const double>(s->values)) != s->checksum) ++torn;
    regressions += s->version < last;
    distinct += s->version != last;
    last = s->version;
    if (jitter() % 4 == 0) std::this_thread::yield();
  }
  writer.join();
  o.detail << " slot: " << kVersions << " publications, " << distinct << " distinct versions read, torn=" << torn
           << " regressions=" << regressions << " lock_waits=" << slot.read_lock_waits() << ";";
  o.require(torn == 0 && regressions == 0 && slot.read_lock_waits() == 0, "slot invariants");

  // Ten jittered pipeline runs of 1000 arrivals each: 10^4 predict/train interleavings.
  std::uint64_t predictions = 0, pipeline_torn = 0, waits = 0, bad = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    SyntheticConfig sc;
    sc.instances = 1000;
    sc.length = 16;
    sc.seed = seed;
    DatasetStream src(synthetic_sinusoids(sc), seed);
    PrequentialState ev(2);
    PipelineConfig pc;
    pc.batch_size = 4;
    pc.buffer_capacity = 8;
    pc.warmup_instances = 4;
    pc.jitter_us = 20;
    pc.seed = seed;
    ModelSpec spec;
    spec.features = 16;
    spec.classes = 2;
    const StreamReport r = run_stream(src, spec, {}, pc, ev, seed);
    if (!r.error.empty()) ++bad;
    std::set<std::uint64_t> seen;
    std::uint64_t version = 0;
    for (const Prediction& p : r.predictions) {
      if (!seen.insert(p.seq).second) ++bad;
      if (p.model_version < version) ++bad;
      version = p.model_version;
    }
    std::map<std::uint64_t, std::int64_t> trained;
    for (const TrainingRecord& t : r.training_log) {
      if (!trained.emplace(t.seq, t.trained_ns).second) ++bad;
    }
    for (const Prediction& p : r.predictions) {
      const auto it = trained.find(p.seq);
      if (it == trained.end() || it->second < p.predicted_ns) ++bad;
    }
    if (seen.size() + r.warmup_instances != 1000 || trained.size() != 1000) ++bad;
    predictions += r.predictions.size();
    pipeline_torn += r.torn_reads + r.version_regressions;
    waits += r.snapshot_read_lock_waits;
  }
  o.detail << " pipeline: " << predictions << " predictions, violations=" << bad << " torn=" << pipeline_torn
           << " lock_waits=" << waits;
  o.require(bad == 0 && pipeline_torn == 0 && waits == 0, "pipeline invariants");
}

// 8. Receptive field, causality and architecture layout.
void causality_and_topology(Outcome& o) {
  ModelSpec tcn;
  tcn.architecture = Architecture::tcn;
  tcn.features = 64;
  tcn.classes = 2;
  const std::size_t field = tcn_receptive_field(tcn);
  o.detail << " receptive field=" << field << ";";
  o.require(field == 1017, "receptive field 1017");

  // Perturb one input step of the full default stack and record which outputs move.
  std::mt19937_64 init(5), rng(6);
  TcnLayer<double> stack("tcn", 1, tcn.tcn_filters, tcn.tcn_kernel, tcn.tcn_dilations, init);
  const std::size_t len = 1300, filters = tcn.tcn_filters;
  Tensor<double> x({len, 1});
  std::normal_distribution<double> normal(0, 1);
  for (double& v : x.values()) v = normal(rng);
  const Tensor<double> base = stack.forward(x, kernels::Mode::infer, rng);
  for (std::size_t t : {0, 150, 283}) {
    Tensor<double> y = x;
    y[t] += 1.0;
    const Tensor<double> out = stack.forward(y, kernels::Mode::infer, rng);
    std::size_t first = len, last = 0;
    for (std::size_t i = 0; i < len; ++i) {
      for (std::size_t ch = 0; ch < filters; ++ch) {
        if (out(i, ch) != base(i, ch)) {
          first = std::min(first, i);
          last = std::max(last, i);
        }
      }
    }
    o.detail << " step " << t << " moves outputs [" << first << "," << last << "];";
    o.require(first == t, "no output before the perturbed step changes");
    o.require(last <= t + field - 1, "no output beyond the receptive field changes");
  }

  // The classifier head reads the newest step, so the causal stack does not hide it.
  Model<double> model(tcn, 9);
  std::vector<double> series(64);
  for (double& v : series) v = normal(rng);
  const auto p0 = model.forward_classify(series);
  series.back() += 1.0;
  const auto p1 = model.forward_classify(series);
  o.require(!std::equal(p0.values().begin(), p0.values().end(), p1.values().begin()), "model output responds to the newest step");

  using Rows = std::vector<std::pair<std::string, Shape>>;
  const std::map<Architecture, Rows> tables{
      {Architecture::mlp,
       {{"Input(64)", {64}}, {"Dense(32,relu)", {32}}, {"Dense(64,relu)", {64}}, {"Dense(128,relu)", {128}},
        {"Softmax(3)", {3}}}},
      {Architecture::cnn,
       {{"Input(64)", {64}}, {"Conv1D(k=7,maps=64,same,relu)", {64, 64}}, {"MaxPool(k=2,stride=2)", {32, 64}},
        {"Conv1D(k=5,maps=128,same,relu)", {32, 128}}, {"MaxPool(k=2,stride=2)", {16, 128}},
        {"Dense(64,relu)", {64}}, {"Dense(32,relu)", {32}}, {"Softmax(3)", {3}}}},
      {Architecture::lstm,
       {{"Input(64)", {64}}, {"LSTM(units=64,sequences)", {64, 64}}, {"LSTM(units=128,sequences)", {64, 128}},
        {"Dense(64,relu)", {64}}, {"Dense(32,relu)", {32}}, {"Softmax(3)", {3}}}},
      {Architecture::tcn,
       {{"Input(64)", {64}}, {"TCN(k=5,maps=64,dilations=[1,2,4,8,16,32,64],causal,sequences)", {64, 64}},
        {"Dense(64,relu)", {64}}, {"Dense(32,relu)", {32}}, {"Softmax(3)", {3}}}},
  };
  std::size_t rows = 0;
  for (const auto& [arch, expected] : tables) {
    ModelSpec s;
    s.architecture = arch;
    s.features = 64;
    s.classes = 3;
    const auto layout = Model<float>(s, 1).table_layout();
    rows += layout.size();
    o.require(layout == expected, std::string(to_string(arch)) + " layout");
  }
  o.detail << " " << rows << " table rows matched";
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<void(Outcome&)>>> criteria{
      {"ranking and post-hoc", ranking_and_posthoc},
      {"prequential recursion", prequential},
      {"gradient checks", gradients},
      {"parameter counts", parameter_counts},
      {"learning", learning},
      {"latency ordering", latency},
      {"concurrency stress", concurrency},
      {"causality and topology", causality_and_topology},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    failures += !o.pass;
    std::printf("%s %zu %s:%s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.str().c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
