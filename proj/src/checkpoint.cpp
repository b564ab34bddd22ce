#include "affect/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "affect/errors.hpp"

namespace affect {

namespace {

constexpr char kMagic[4] = {'O', 'M', 'G', 'C'};
constexpr std::uint32_t kVersion = 1;

struct Writer {
  std::ofstream out;

  void bytes(const void* p, std::size_t n) { out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }
  void u32(std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    bytes(b, 4);
  }
  void u64(std::uint64_t v) {
    u32(static_cast<std::uint32_t>(v));
    u32(static_cast<std::uint32_t>(v >> 32));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
};

struct Reader {
  std::ifstream in;
  std::filesystem::path path;
  std::size_t offset = 0;

  void bytes(void* p, std::size_t n, const char* what) {
    in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n)
      throw FormatError(path.string() + ": truncated " + what + " at byte " + std::to_string(offset));
    offset += n;
  }
  std::uint32_t u32(const char* what) {
    unsigned char b[4];
    bytes(b, 4, what);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  }
  std::uint64_t u64(const char* what) {
    const std::uint64_t lo = u32(what);
    const std::uint64_t hi = u32(what);
    return lo | (hi << 32);
  }
  double f64(const char* what) { return std::bit_cast<double>(u64(what)); }
  std::string str(const char* what) {
    const std::uint32_t n = u32(what);
    if (n > (1u << 24)) throw FormatError(path.string() + ": implausible string length");
    std::string s(n, '\0');
    if (n) bytes(s.data(), n, what);
    return s;
  }
};

}  // namespace

const Tensor* Checkpoint::find(const std::string& name) const {
  for (const auto& [n, t] : tensors)
    if (n == name) return &t;
  return nullptr;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
  Writer w{std::ofstream(path, std::ios::binary | std::ios::trunc)};
  if (!w.out) throw FormatError(path.string() + ": cannot open for writing");
  w.bytes(kMagic, 4);
  w.u32(kVersion);
  w.str(c.stage);
  w.str(c.config_snapshot);

  w.u32(static_cast<std::uint32_t>(c.tensors.size()));
  for (const auto& [name, t] : c.tensors) {
    w.str(name);
    w.u32(static_cast<std::uint32_t>(t.rank()));
    for (std::size_t e : t.shape()) w.u32(static_cast<std::uint32_t>(e));
    for (double v : t.values()) w.f64(v);
  }

  w.u32(static_cast<std::uint32_t>(c.sketches.size()));
  for (const auto& s : c.sketches) {
    w.u64(s.seed);
    w.u32(static_cast<std::uint32_t>(s.sketch_dim));
    w.u32(static_cast<std::uint32_t>(s.hash.size()));
    for (std::uint32_t h : s.hash) w.u32(h);
    for (std::int8_t sg : s.sign) w.bytes(&sg, 1);
  }

  w.u32(static_cast<std::uint32_t>(c.selected_indices.size()));
  for (std::size_t i : c.selected_indices) w.u64(i);

  w.u32(static_cast<std::uint32_t>(c.audio_stats.mean.size()));
  for (double v : c.audio_stats.mean) w.f64(v);
  for (double v : c.audio_stats.stddev) w.f64(v);

  if (!w.out) throw FormatError(path.string() + ": write failed");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  Reader r{std::ifstream(path, std::ios::binary), path};
  if (!r.in) throw FormatError(path.string() + ": cannot open for reading");

  char magic[4];
  r.bytes(magic, 4, "magic");
  if (std::memcmp(magic, kMagic, 4) != 0) throw FormatError(path.string() + ": bad magic at byte 0");
  const std::uint32_t version = r.u32("version");
  if (version != kVersion)
    throw FormatError(path.string() + ": unsupported checkpoint version " + std::to_string(version));

  Checkpoint c;
  c.stage = r.str("stage");
  c.config_snapshot = r.str("config snapshot");

  const std::uint32_t n_tensors = r.u32("tensor count");
  for (std::uint32_t i = 0; i < n_tensors; ++i) {
    const std::string name = r.str("tensor name");
    const std::uint32_t rank = r.u32("tensor rank");
    if (rank == 0 || rank > 8) throw FormatError(path.string() + ": implausible tensor rank");
    Shape shape(rank);
    std::size_t numel = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      shape[d] = r.u32("tensor extent");
      numel *= shape[d];
    }
    std::vector<double> data(numel);
    for (std::size_t j = 0; j < numel; ++j) data[j] = r.f64("tensor payload");
    c.tensors.emplace_back(name, Tensor::from(std::move(shape), std::move(data)));
  }

  const std::uint32_t n_sketches = r.u32("sketch count");
  for (std::uint32_t i = 0; i < n_sketches; ++i) {
    SketchParams s;
    s.seed = r.u64("sketch seed");
    s.sketch_dim = r.u32("sketch dim");
    const std::uint32_t input_dim = r.u32("sketch input dim");
    s.hash.resize(input_dim);
    s.sign.resize(input_dim);
    for (std::uint32_t j = 0; j < input_dim; ++j) {
      s.hash[j] = r.u32("sketch hash");
      if (s.hash[j] >= s.sketch_dim) throw FormatError(path.string() + ": sketch hash out of range");
    }
    for (std::uint32_t j = 0; j < input_dim; ++j) {
      std::int8_t sg;
      r.bytes(&sg, 1, "sketch sign");
      if (sg != 1 && sg != -1) throw FormatError(path.string() + ": sketch sign must be +-1");
      s.sign[j] = sg;
    }
    c.sketches.push_back(std::move(s));
  }

  const std::uint32_t n_sel = r.u32("selection count");
  for (std::uint32_t i = 0; i < n_sel; ++i) c.selected_indices.push_back(r.u64("selection index"));

  const std::uint32_t n_stats = r.u32("stats count");
  c.audio_stats.mean.resize(n_stats);
  c.audio_stats.stddev.resize(n_stats);
  for (std::uint32_t i = 0; i < n_stats; ++i) c.audio_stats.mean[i] = r.f64("stats mean");
  for (std::uint32_t i = 0; i < n_stats; ++i) c.audio_stats.stddev[i] = r.f64("stats stddev");

  char extra;
  r.in.read(&extra, 1);
  if (r.in.gcount() == 1)
    throw FormatError(path.string() + ": trailing bytes at byte " + std::to_string(r.offset));
  return c;
}

}  // namespace affect
