#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "adls/error.hpp"
#include "adls/model.hpp"
#include "adls/snapshot.hpp"
#include "doctest.h"

using adls::Architecture;
using adls::CountConvention;
using adls::ModelSpec;

namespace {

ModelSpec spec_of(Architecture a, std::size_t f, std::size_t c) {
  ModelSpec s;
  s.architecture = a;
  s.features = f;
  s.classes = c;
  return s;
}

std::vector<double> random_series(std::mt19937_64& rng, std::size_t f) {
  std::vector<double> x(f);
  std::normal_distribution<double> n(0, 1);
  for (double& v : x) v = n(rng);
  return x;
}

const Architecture kAll[] = {Architecture::mlp, Architecture::cnn, Architecture::lstm, Architecture::tcn};

}  // namespace

TEST_CASE("architecture tables row by row") {
  using Rows = std::vector<std::pair<std::string, adls::Shape>>;
  const std::size_t f = 64, c = 3;
  CHECK(adls::Model<float>(spec_of(Architecture::mlp, f, c), 1).table_layout() ==
        Rows{{"Input(64)", {64}}, {"Dense(32,relu)", {32}}, {"Dense(64,relu)", {64}},
             {"Dense(128,relu)", {128}}, {"Softmax(3)", {3}}});
  CHECK(adls::Model<float>(spec_of(Architecture::cnn, f, c), 1).table_layout() ==
        Rows{{"Input(64)", {64}},
             {"Conv1D(k=7,maps=64,same,relu)", {64, 64}},
             {"MaxPool(k=2,stride=2)", {32, 64}},
             {"Conv1D(k=5,maps=128,same,relu)", {32, 128}},
             {"MaxPool(k=2,stride=2)", {16, 128}},
             {"Dense(64,relu)", {64}}, {"Dense(32,relu)", {32}}, {"Softmax(3)", {3}}});
  CHECK(adls::Model<float>(spec_of(Architecture::lstm, f, c), 1).table_layout() ==
        Rows{{"Input(64)", {64}}, {"LSTM(units=64,sequences)", {64, 64}}, {"LSTM(units=128,sequences)", {64, 128}},
             {"Dense(64,relu)", {64}}, {"Dense(32,relu)", {32}}, {"Softmax(3)", {3}}});
  CHECK(adls::Model<float>(spec_of(Architecture::tcn, f, c), 1).table_layout() ==
        Rows{{"Input(64)", {64}}, {"TCN(k=5,maps=64,dilations=[1,2,4,8,16,32,64],causal,sequences)", {64, 64}},
             {"Dense(64,relu)", {64}}, {"Dense(32,relu)", {32}}, {"Softmax(3)", {3}}});
}

TEST_CASE("fingerprint lists every layer") {
  adls::Model<float> m(spec_of(Architecture::mlp, 10, 2), 1);
  CHECK(m.fingerprint() ==
        "MLP: Input([10]) > Dense(32,relu) > Dropout(0.2) > Dense(64,relu) > Dropout(0.2) > "
        "Dense(128,relu) > Dropout(0.2) > Softmax(2)");
}

TEST_CASE("cnn shapes for an odd halving") {
  adls::Model<float> m(spec_of(Architecture::cnn, 152, 2), 1);
  const auto& s = m.layer_shapes();
  CHECK(s[0] == adls::Shape{152, 64});
  CHECK(s[1] == adls::Shape{76, 64});
  CHECK(s[2] == adls::Shape{76, 128});
  CHECK(s[3] == adls::Shape{38, 128});
  CHECK(s[4] == adls::Shape{38 * 128});
  adls::Model<float> odd(spec_of(Architecture::cnn, 15, 2), 1);
  CHECK(odd.layer_shapes()[3] == adls::Shape{4, 128});
}

TEST_CASE("cnn rejects series shorter than its pooling") {
  CHECK_THROWS_AS(adls::Model<float>(spec_of(Architecture::cnn, 3, 2), 1), adls::ConfigError);
  CHECK_THROWS_AS(adls::Model<float>(spec_of(Architecture::mlp, 5, 1), 1), adls::ConfigError);
}

TEST_CASE("tcn keeps the sequence length") {
  adls::Model<float> m(spec_of(Architecture::tcn, 96, 2), 1);
  CHECK(m.layer_shapes()[0] == adls::Shape{96, 64});
}

TEST_CASE("closed-form parameter counts") {
  for (std::size_t f : {4, 16, 24, 64, 100, 152}) {
    for (std::size_t c : {2, 3, 7}) {
      for (Architecture a : {Architecture::mlp, Architecture::lstm}) {
        const ModelSpec s = spec_of(a, f, c);
        CHECK(adls::Model<float>(s, 1).parameter_count(CountConvention::weights_only) ==
              adls::published_parameter_formula(s));
      }
      if (f % 4 == 0) {
        const ModelSpec s = spec_of(Architecture::cnn, f, c);
        CHECK(adls::Model<float>(s, 1).parameter_count(CountConvention::weights_only) ==
              adls::published_parameter_formula(s));
      }
    }
  }
}

TEST_CASE("tcn parameter count by layer audit") {
  // Block 1: two k=5 convs (1->64, 64->64) with biases plus a 1x1 downsample.
  // Blocks 2..7: two 64->64 convs with biases.
  const std::size_t block1 = (5 * 1 * 64 + 64) + (5 * 64 * 64 + 64) + (1 * 64 + 64);
  const std::size_t block = 2 * (5 * 64 * 64 + 64);
  const std::size_t stack = block1 + 6 * block;
  CHECK(stack == 267584);
  for (std::size_t f : {16, 64, 96}) {
    for (std::size_t c : {2, 5}) {
      const ModelSpec s = spec_of(Architecture::tcn, f, c);
      const std::size_t expected = stack + f * 64 * 64 + 64 * 32 + 32 * c;
      CHECK(adls::Model<float>(s, 1).parameter_count(CountConvention::weights_only) == expected);
      CHECK(adls::published_parameter_formula(s) - expected == 102464);
    }
  }
}

TEST_CASE("all_trainable adds the dense biases") {
  adls::Model<float> m(spec_of(Architecture::mlp, 10, 2), 1);
  CHECK(m.parameter_count(CountConvention::all_trainable) ==
        m.parameter_count(CountConvention::weights_only) + 32 + 64 + 128 + 2);
}

TEST_CASE("receptive field") {
  ModelSpec s = spec_of(Architecture::tcn, 8, 2);
  CHECK(adls::tcn_receptive_field(s) == 1017);
  s.tcn_dilations = {1};
  s.tcn_kernel = 2;
  CHECK(adls::tcn_receptive_field(s) == 3);
  s.tcn_kernel = 1;
  CHECK(adls::tcn_receptive_field(s) == 1);
}

TEST_CASE("tcn stack is causal") {
  std::mt19937_64 init(3), rng(4);
  adls::TcnLayer<double> tcn("tcn", 1, 8, 5, {1, 2, 4, 8, 16, 32, 64}, init);
  const std::size_t len = 200;
  adls::Tensor<double> x({len, 1});
  std::normal_distribution<double> n(0, 1);
  for (double& v : x.values()) v = n(rng);
  const adls::Tensor<double> base = tcn.forward(x, adls::kernels::Mode::infer, rng);
  for (std::size_t t : {0, 37, 120, 199}) {
    adls::Tensor<double> y = x;
    y[t] += 1.0;
    const adls::Tensor<double> out = tcn.forward(y, adls::kernels::Mode::infer, rng);
    bool past_same = true, changed = false;
    for (std::size_t i = 0; i < len; ++i) {
      for (std::size_t ch = 0; ch < 8; ++ch) {
        const double d = std::abs(out(i, ch) - base(i, ch));
        if (i < t && d != 0.0) past_same = false;
        if (i >= t && d > 0.0) changed = true;
      }
    }
    CHECK(past_same);
    CHECK(changed);
  }
}

TEST_CASE("outputs are probability vectors, near uniform at initialisation") {
  std::mt19937_64 rng(8);
  for (Architecture a : kAll) {
    adls::Model<float> m(spec_of(a, 32, 4), 5);
    for (int i = 0; i < 5; ++i) {
      const auto p = m.forward_classify(random_series(rng, 32));
      double sum = 0;
      for (float v : p.values()) {
        CHECK(v >= 0.0f);
        CHECK(v < 0.9f);
        sum += v;
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-5));
    }
  }
}

TEST_CASE("mode guards") {
  adls::Model<float> m(spec_of(Architecture::mlp, 8, 2), 1);
  adls::Optimizer<float> opt;
  const std::vector<adls::Instance> batch{{0, std::vector<double>(8, 0.5), 1}};
  CHECK_THROWS_AS(m.train_batch(batch, opt), adls::StateError);
  m.set_mode(adls::kernels::Mode::train);
  CHECK_THROWS_AS(m.forward_classify(batch[0].features), adls::StateError);
  CHECK_NOTHROW(m.train_batch(batch, opt));
  CHECK_THROWS_AS(m.train_batch({}, opt), adls::InputError);
  const std::vector<adls::Instance> wrong{{0, std::vector<double>(7, 0.5), 1}};
  CHECK_THROWS_AS(m.train_batch(wrong, opt), adls::InputError);
}

TEST_CASE("inference is deterministic and ignores dropout") {
  std::mt19937_64 rng(2);
  const auto x = random_series(rng, 24);
  for (Architecture a : kAll) {
    adls::Model<double> m1(spec_of(a, 24, 3), 9), m2(spec_of(a, 24, 3), 9);
    const auto p1 = m1.forward_classify(x);
    const auto p1b = m1.forward_classify(x);
    const auto p2 = m2.forward_classify(x);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(p1[i] == p1b[i]);
      CHECK(p1[i] == p2[i]);
    }
  }
}

TEST_CASE("every architecture can fit a single batch") {
  std::mt19937_64 rng(12);
  for (Architecture a : kAll) {
    ModelSpec s = spec_of(a, 16, 2);
    s.dropout_rate = 0.0;
    adls::Model<float> m(s, 3);
    m.set_mode(adls::kernels::Mode::train);
    adls::Optimizer<float> opt;
    std::vector<adls::Instance> batch;
    for (std::size_t i = 0; i < 8; ++i) batch.push_back({i, random_series(rng, 16), i % 2});
    std::vector<double> losses;
    for (int step = 0; step < 60; ++step) losses.push_back(m.train_batch(batch, opt));
    int increases = 0;
    for (std::size_t i = 1; i < losses.size(); ++i) increases += losses[i] > losses[i - 1];
    CAPTURE(adls::to_string(a));
    CHECK(losses.back() < 0.5 * losses.front());
    CHECK(increases <= 10);
  }
}

TEST_CASE("value copy and load round trip") {
  adls::Model<float> a(spec_of(Architecture::cnn, 16, 2), 1), b(spec_of(Architecture::cnn, 16, 2), 2);
  std::vector<float> values(a.value_count());
  a.copy_values(values);
  b.load_values(values);
  std::mt19937_64 rng(1);
  const auto x = random_series(rng, 16);
  CHECK(a.predict(x) == b.predict(x));
  CHECK(a.forward_classify(x)[0] == b.forward_classify(x)[0]);
  std::vector<float> short_values(3);
  CHECK_THROWS_AS(b.load_values(short_values), adls::ConfigError);
}

TEST_CASE("snapshot file round trip") {
  const auto path = (std::filesystem::temp_directory_path() / "adls_snapshot.bin").string();
  for (Architecture a : kAll) {
    adls::Model<double> src(spec_of(a, 12, 3), 4), dst(spec_of(a, 12, 3), 5);
    adls::write_snapshot_file(path, src, 17);
    const adls::SnapshotFile file = adls::read_snapshot_file(path);
    CHECK(file.version == 17);
    CHECK(file.format_version == adls::kSnapshotFormatVersion);
    CHECK(file.fingerprint == adls::spec_fingerprint(src.spec()));
    CHECK(file.records.size() == src.params().size());
    adls::load_snapshot(file, dst);
    std::vector<double> va(src.value_count()), vb(dst.value_count());
    src.copy_values(va);
    dst.copy_values(vb);
    CHECK(va == vb);
  }
  std::filesystem::remove(path);
}

TEST_CASE("snapshot file rejections") {
  const auto path = (std::filesystem::temp_directory_path() / "adls_snapshot_bad.bin").string();
  adls::Model<float> m(spec_of(Architecture::mlp, 6, 2), 1);
  adls::write_snapshot_file(path, m, 1);
  std::string bytes;
  {
    std::ifstream in(path, std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(in), {});
  }
  auto write = [&](const std::string& b) { std::ofstream(path, std::ios::binary | std::ios::trunc) << b; };

  write(bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS_AS(adls::read_snapshot_file(path), adls::FormatError);
  write("XXXX" + bytes.substr(4));
  CHECK_THROWS_AS(adls::read_snapshot_file(path), adls::FormatError);
  write(bytes + "z");
  CHECK_THROWS_AS(adls::read_snapshot_file(path), adls::FormatError);
  write(bytes);
  adls::Model<float> other(spec_of(Architecture::mlp, 7, 2), 1);
  CHECK_THROWS_AS(adls::load_snapshot(adls::read_snapshot_file(path), other), adls::FormatError);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(adls::read_snapshot_file(path), adls::InputError);
}
