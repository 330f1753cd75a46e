#include "adls/snapshot.hpp"

#include "adls/bounded_fifo.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace adls {

const char* to_string(Backpressure b) { return b == Backpressure::block ? "block" : "drop_oldest"; }

Backpressure parse_backpressure(const std::string& name) {
  if (name == "block") return Backpressure::block;
  if (name == "drop_oldest") return Backpressure::drop_oldest;
  throw ConfigError("unknown backpressure policy '" + name + "' (expected block or drop_oldest)", name);
}

namespace {

class Writer {
 public:
  template <typename U>
  void put(U value) {
    static_assert(std::is_unsigned_v<U>);
    for (std::size_t i = 0; i < sizeof(U); ++i) bytes_.push_back(static_cast<char>((value >> (8 * i)) & 0xff));
  }
  void put_bytes(const std::string& s) { bytes_.append(s); }
  const std::string& bytes() const noexcept { return bytes_; }

 private:
  std::string bytes_;
};

class Reader {
 public:
  Reader(std::string bytes, std::string path) : bytes_(std::move(bytes)), path_(std::move(path)) {}

  template <typename U>
  U get() {
    need(sizeof(U));
    U value = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      value |= static_cast<U>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(U);
    return value;
  }
  std::string get_bytes(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool at_end() const noexcept { return pos_ == bytes_.size(); }
  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) {
      throw FormatError("snapshot truncated at byte " + std::to_string(pos_), path_);
    }
  }
  std::string bytes_;
  std::string path_;
  std::size_t pos_ = 0;
};

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path, path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path, path);
}

}  // namespace

template <typename T>
void write_snapshot_file(const std::string& path, Model<T>& model, std::uint64_t version) {
  Writer w;
  w.put_bytes("ADLS");
  w.put<std::uint16_t>(kSnapshotFormatVersion);
  w.put<std::uint64_t>(version);
  const std::string fp = spec_fingerprint(model.spec());
  w.put<std::uint32_t>(static_cast<std::uint32_t>(fp.size()));
  w.put_bytes(fp);
  const auto params = model.params();
  w.put<std::uint32_t>(static_cast<std::uint32_t>(params.size()));
  for (const ParamTensor<T>* p : params) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(p->name.size()));
    w.put_bytes(p->name);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(p->value.rank()));
    for (std::size_t e : p->value.shape()) w.put<std::uint64_t>(e);
    w.put<std::uint8_t>(sizeof(T));
    for (T v : p->value.values()) {
      if constexpr (sizeof(T) == 4) {
        w.put<std::uint32_t>(std::bit_cast<std::uint32_t>(v));
      } else {
        w.put<std::uint64_t>(std::bit_cast<std::uint64_t>(v));
      }
    }
  }
  write_file(path, w.bytes());
}

SnapshotFile read_snapshot_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("snapshot not found: " + path, path);
  Reader r(std::string(std::istreambuf_iterator<char>(in), {}), path);

  if (r.get_bytes(4) != "ADLS") throw FormatError("not a snapshot file (bad magic)", path);
  SnapshotFile file;
  file.format_version = r.get<std::uint16_t>();
  if (file.format_version != kSnapshotFormatVersion) {
    throw FormatError("unsupported snapshot format version " + std::to_string(file.format_version), path);
  }
  file.version = r.get<std::uint64_t>();
  file.fingerprint = r.get_bytes(r.get<std::uint32_t>());
  const std::uint32_t count = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    SnapshotRecord rec;
    rec.name = r.get_bytes(r.get<std::uint32_t>());
    const std::uint32_t rank = r.get<std::uint32_t>();
    if (rank == 0 || rank > 8) throw FormatError("record '" + rec.name + "' has invalid rank", path);
    std::uint64_t n = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      const std::uint64_t e = r.get<std::uint64_t>();
      if (e == 0 || e > r.remaining()) throw FormatError("record '" + rec.name + "' has invalid extent", path);
      rec.shape.push_back(static_cast<std::size_t>(e));
      n *= e;
    }
    rec.scalar_width = r.get<std::uint8_t>();
    if (rec.scalar_width != 4 && rec.scalar_width != 8) {
      throw FormatError("record '" + rec.name + "' has scalar width " + std::to_string(rec.scalar_width), path);
    }
    if (n > r.remaining() / rec.scalar_width) throw FormatError("snapshot truncated in '" + rec.name + "'", path);
    rec.values.resize(static_cast<std::size_t>(n));
    for (double& v : rec.values) {
      v = rec.scalar_width == 4 ? static_cast<double>(std::bit_cast<float>(r.get<std::uint32_t>()))
                                : std::bit_cast<double>(r.get<std::uint64_t>());
    }
    file.records.push_back(std::move(rec));
  }
  if (!r.at_end()) throw FormatError("trailing bytes after last record", path);
  return file;
}

template <typename T>
void load_snapshot(const SnapshotFile& file, Model<T>& model) {
  const std::string expected = spec_fingerprint(model.spec());
  if (file.fingerprint != expected) {
    throw FormatError("snapshot fingerprint '" + file.fingerprint + "' does not match model '" + expected + "'");
  }
  const auto params = model.params();
  if (file.records.size() != params.size()) throw FormatError("snapshot record count does not match model");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const SnapshotRecord& rec = file.records[i];
    if (rec.name != params[i]->name || rec.shape != params[i]->value.shape()) {
      throw FormatError("snapshot record '" + rec.name + "' does not match parameter '" + params[i]->name + "'");
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto dst = params[i]->value.values();
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] = static_cast<T>(file.records[i].values[j]);
  }
}

template void write_snapshot_file<float>(const std::string&, Model<float>&, std::uint64_t);
template void write_snapshot_file<double>(const std::string&, Model<double>&, std::uint64_t);
template void load_snapshot<float>(const SnapshotFile&, Model<float>&);
template void load_snapshot<double>(const SnapshotFile&, Model<double>&);

}  // namespace adls
