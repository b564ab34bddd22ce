#include "affect/tensor_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "affect/errors.hpp"

namespace affect {

namespace {

constexpr char kMagic[4] = {'O', 'M', 'G', 'T'};
constexpr std::uint8_t kVersion = 1;

[[noreturn]] void fail(const std::filesystem::path& path, std::size_t offset, const std::string& what) {
  throw FormatError(path.string() + ": " + what + " at byte " + std::to_string(offset));
}

struct Reader {
  std::ifstream in;
  std::size_t offset = 0;
  const std::filesystem::path& path;

  void read(void* dst, std::size_t n, const char* what) {
    in.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n)
      fail(path, offset, std::string("truncated ") + what);
    offset += n;
  }

  std::uint32_t read_u32(const char* what) {
    unsigned char b[4];
    read(b, 4, what);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  }
};

void put_u32(std::ofstream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                              static_cast<unsigned char>((v >> 8) & 0xff),
                              static_cast<unsigned char>((v >> 16) & 0xff),
                              static_cast<unsigned char>((v >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

}  // namespace

Tensor read_tensor_file(const std::filesystem::path& path) {
  Reader r{std::ifstream(path, std::ios::binary), 0, path};
  if (!r.in) throw FormatError(path.string() + ": cannot open for reading");

  char magic[4];
  r.read(magic, 4, "magic");
  if (std::memcmp(magic, kMagic, 4) != 0) fail(path, 0, "bad magic");
  std::uint8_t version;
  r.read(&version, 1, "version");
  if (version != kVersion) fail(path, 4, "unsupported format version " + std::to_string(version));

  const std::uint32_t rank = r.read_u32("rank");
  if (rank == 0 || rank > 8) fail(path, 5, "implausible rank " + std::to_string(rank));
  Shape shape(rank);
  std::size_t numel = 1;
  for (std::uint32_t i = 0; i < rank; ++i) {
    const std::uint32_t e = r.read_u32("extent");
    if (e == 0) fail(path, r.offset - 4, "zero extent");
    shape[i] = e;
    numel *= e;
  }

  std::vector<double> data(numel);
  for (std::size_t i = 0; i < numel; ++i) {
    std::uint32_t bits = r.read_u32("payload");
    data[i] = static_cast<double>(std::bit_cast<float>(bits));
  }
  char extra;
  r.in.read(&extra, 1);
  if (r.in.gcount() == 1) fail(path, r.offset, "trailing bytes after payload");
  return Tensor::from(std::move(shape), std::move(data));
}

void write_tensor_file(const std::filesystem::path& path, const Tensor& t) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError(path.string() + ": cannot open for writing");
  out.write(kMagic, 4);
  out.put(static_cast<char>(kVersion));
  put_u32(out, static_cast<std::uint32_t>(t.rank()));
  for (std::size_t e : t.shape()) put_u32(out, static_cast<std::uint32_t>(e));
  for (double v : t.values()) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  if (!out) throw FormatError(path.string() + ": write failed");
}

}  // namespace affect
