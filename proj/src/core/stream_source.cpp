#include "adls/stream_source.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <numeric>
#include <random>
#include <thread>

#include "adls/error.hpp"
#include "adls/text.hpp"

namespace adls {

std::vector<std::size_t> shuffled_order(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

DatasetStream::DatasetStream(Dataset dataset, std::uint64_t seed, double rate)
    : dataset_(std::move(dataset)), order_(shuffled_order(dataset_.size(), seed)), rate_(rate) {
  if (!(rate >= 0.0) || !std::isfinite(rate)) throw ConfigError("stream rate must be >= 0");
}

std::optional<Instance> DatasetStream::next() {
  if (cursor_ >= order_.size()) return std::nullopt;
  if (rate_ > 0.0) {
    if (cursor_ == 0) start_ = std::chrono::steady_clock::now();
    const auto due = start_ + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                  std::chrono::duration<double>(static_cast<double>(cursor_) / rate_));
    std::this_thread::sleep_until(due);
  }
  const std::size_t idx = order_[cursor_];
  Instance inst{cursor_, dataset_.series[idx], dataset_.labels[idx]};
  ++cursor_;
  return inst;
}

std::unique_ptr<DatasetStream> simulate_stream(Dataset dataset, std::uint64_t seed, double rate) {
  return std::make_unique<DatasetStream>(std::move(dataset), seed, rate);
}

InstanceListSource::InstanceListSource(std::vector<Instance> instances) : instances_(std::move(instances)) {}

std::optional<Instance> InstanceListSource::next() {
  if (cursor_ >= instances_.size()) return std::nullopt;
  return instances_[cursor_++];
}

std::size_t InstanceListSource::features() const {
  return instances_.empty() ? 0 : instances_.front().features.size();
}

SocketSource::SocketSource(Options options) : options_(std::move(options)) {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw IoError(std::string("socket: ") + std::strerror(errno));
  int yes = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(options_.port);
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 || ::listen(listen_fd_, 1) < 0) {
    const std::string err = std::strerror(errno);
    ::close(listen_fd_);
    throw IoError("cannot listen on port " + std::to_string(options_.port) + ": " + err);
  }
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

SocketSource::~SocketSource() {
  if (conn_fd_ >= 0) ::close(conn_fd_);
  if (listen_fd_ >= 0) ::close(listen_fd_);
}

bool SocketSource::read_line(std::string& line) {
  while (true) {
    const auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return true;
    }
    if (closed_) {
      if (buffer_.empty()) return false;
      line = std::move(buffer_);
      buffer_.clear();
      return true;
    }
    char chunk[4096];
    const ssize_t n = ::recv(conn_fd_, chunk, sizeof chunk, 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) {
      closed_ = true;
      continue;
    }
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

std::optional<Instance> SocketSource::parse(const std::string& raw) {
  const std::string line = text::trim(raw);
  const auto fields = text::split(line, ',');
  if (fields.size() < 2) return std::nullopt;
  double label_value = 0.0;
  if (!text::parse_double(text::trim(fields[0]), label_value)) return std::nullopt;
  std::size_t label = 0;
  if (!options_.label_map.empty()) {
    const auto it = options_.label_map.find(label_value);
    if (it == options_.label_map.end()) return std::nullopt;
    label = it->second;
  } else {
    if (label_value < 0 || label_value != std::floor(label_value)) return std::nullopt;
    label = static_cast<std::size_t>(label_value);
    if (options_.classes && label >= options_.classes) return std::nullopt;
  }
  std::vector<double> values(fields.size() - 1);
  for (std::size_t i = 1; i < fields.size(); ++i) {
    if (!text::parse_double(text::trim(fields[i]), values[i - 1])) return std::nullopt;
  }
  if (options_.features == 0) options_.features = values.size();
  if (values.size() != options_.features) return std::nullopt;
  return Instance{seq_++, std::move(values), label};
}

std::optional<Instance> SocketSource::next() {
  if (conn_fd_ < 0) {
    if (closed_) return std::nullopt;
    if (options_.accept_timeout_ms > 0) {
      pollfd pfd{listen_fd_, POLLIN, 0};
      const int ready = ::poll(&pfd, 1, options_.accept_timeout_ms);
      if (ready <= 0) throw IoError("no client connected to port " + std::to_string(port_) + " in time");
    }
    conn_fd_ = ::accept(listen_fd_, nullptr, nullptr);
    if (conn_fd_ < 0) throw IoError(std::string("accept: ") + std::strerror(errno));
  }
  std::string line;
  while (read_line(line)) {
    if (text::trim(line).empty()) continue;
    if (auto inst = parse(line)) return inst;
    ++malformed_;
  }
  return std::nullopt;
}

}  // namespace adls
