#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "adls/dataset.hpp"
#include "adls/instance.hpp"

namespace adls {

// Ordered supplier of instances. Consumed by exactly one feeder thread.
class StreamSource {
 public:
  virtual ~StreamSource() = default;

  // Next instance, or nullopt at end of stream.
  virtual std::optional<Instance> next() = 0;
  // Series length f; 0 when not yet known.
  virtual std::size_t features() const = 0;
  // Records that could not be turned into instances and were skipped.
  virtual std::uint64_t malformed() const { return 0; }
};

// Replays a dataset in a seed-determined shuffled order. rate > 0 paces
// emissions to `rate` instances per second of wall time.
class DatasetStream final : public StreamSource {
 public:
  DatasetStream(Dataset dataset, std::uint64_t seed, double rate = 0.0);

  std::optional<Instance> next() override;
  std::size_t features() const override { return dataset_.length; }

  const Dataset& dataset() const noexcept { return dataset_; }
  const std::vector<std::size_t>& order() const noexcept { return order_; }

 private:
  Dataset dataset_;
  std::vector<std::size_t> order_;
  double rate_;
  std::size_t cursor_ = 0;
  std::chrono::steady_clock::time_point start_;
};

std::unique_ptr<DatasetStream> simulate_stream(Dataset dataset, std::uint64_t seed, double rate = 0.0);

// Seed-determined Fisher-Yates permutation of 0..n-1.
std::vector<std::size_t> shuffled_order(std::size_t n, std::uint64_t seed);

// Replays a fixed list of instances as given (seq numbers are kept).
class InstanceListSource final : public StreamSource {
 public:
  explicit InstanceListSource(std::vector<Instance> instances);

  std::optional<Instance> next() override;
  std::size_t features() const override;

 private:
  std::vector<Instance> instances_;
  std::size_t cursor_ = 0;
};

// Accepts one TCP connection on 127.0.0.1 and reads newline-delimited
// "label,v1,...,vf" records. Lines that do not parse, have the wrong length
// or carry an unknown label are counted and skipped. Closing the connection
// ends the stream.
class SocketSource final : public StreamSource {
 public:
  struct Options {
    std::uint16_t port = 0;     // 0 picks an ephemeral port
    std::size_t features = 0;   // 0 takes the length of the first valid record
    std::size_t classes = 0;    // labels must be integers in [0, classes) unless label_map is set
    std::map<double, std::size_t> label_map;
    int accept_timeout_ms = 0;  // 0 waits forever
  };

  explicit SocketSource(Options options);
  ~SocketSource() override;
  SocketSource(const SocketSource&) = delete;
  SocketSource& operator=(const SocketSource&) = delete;

  std::uint16_t port() const noexcept { return port_; }

  std::optional<Instance> next() override;
  std::size_t features() const override { return options_.features; }
  std::uint64_t malformed() const override { return malformed_; }

 private:
  bool read_line(std::string& line);
  std::optional<Instance> parse(const std::string& line);

  Options options_;
  int listen_fd_ = -1;
  int conn_fd_ = -1;
  std::uint16_t port_ = 0;
  bool closed_ = false;
  std::string buffer_;
  std::uint64_t seq_ = 0;
  std::uint64_t malformed_ = 0;
};

}  // namespace adls
