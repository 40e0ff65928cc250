#include "ssgan/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace ssgan {

namespace {

constexpr char kMagic[4] = {'S', 'S', 'G', 'N'};
constexpr std::size_t kMaxRank = 8;

template <typename T>
void write_le(std::ostream& out, T v) {
  static_assert(std::is_integral_v<T>);
  std::uint8_t bytes[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i)
    bytes[i] = static_cast<std::uint8_t>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T read_le(std::istream& in, const char* field) {
  std::uint8_t bytes[sizeof(T)];
  in.read(reinterpret_cast<char*>(bytes), sizeof(T));
  check(in.gcount() == static_cast<std::streamsize>(sizeof(T)), Error::Kind::io,
        "checkpoint truncated while reading ", field);
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return static_cast<T>(v);
}

void write_f32_payload(std::ostream& out, const Tensor<float>& t) {
  for (std::size_t i = 0; i < t.size(); ++i) {
    std::uint32_t bits;
    std::memcpy(&bits, &t[i], sizeof(bits));
    write_le(out, bits);
  }
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  check(out.good(), Error::Kind::io, "cannot open checkpoint for writing: ", path.string());
  out.write(kMagic, sizeof(kMagic));
  write_le<std::uint32_t>(out, ckpt.version);
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const auto& [name, tensor] : ckpt.tensors) {
    check(name.size() <= 0xffff, Error::Kind::value, "tensor name too long: ", name);
    check(tensor.rank() <= kMaxRank, Error::Kind::value, "tensor rank too large: ", name);
    write_le<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_le<std::uint8_t>(out, static_cast<std::uint8_t>(tensor.rank()));
    for (std::size_t d : tensor.shape()) write_le<std::uint64_t>(out, d);
    write_le<std::uint8_t>(out, 0);  // dtype f32
    write_f32_payload(out, tensor);
  }
  write_le<std::uint64_t>(out, ckpt.iteration);
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.rng_words.size()));
  for (std::uint64_t w : ckpt.rng_words) write_le<std::uint64_t>(out, w);
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.config_echo.size()));
  out.write(ckpt.config_echo.data(), static_cast<std::streamsize>(ckpt.config_echo.size()));
  out.flush();
  check(out.good(), Error::Kind::io, "checkpoint write failed: ", path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  check(in.good(), Error::Kind::io, "cannot open checkpoint: ", path.string());
  char magic[4];
  in.read(magic, sizeof(magic));
  check(in.gcount() == 4 && std::memcmp(magic, kMagic, 4) == 0, Error::Kind::parse,
        "bad checkpoint magic in ", path.string());
  Checkpoint ckpt;
  ckpt.version = read_le<std::uint32_t>(in, "version");
  check(ckpt.version == Checkpoint::kVersion, Error::Kind::parse,
        "unsupported checkpoint version ", ckpt.version, " (expected ", Checkpoint::kVersion,
        ")");
  const auto count = read_le<std::uint32_t>(in, "tensor count");
  ckpt.tensors.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = read_le<std::uint16_t>(in, "tensor name length");
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    check(in.gcount() == name_len, Error::Kind::io, "checkpoint truncated in tensor name");
    const auto rank = read_le<std::uint8_t>(in, "tensor rank");
    check(rank >= 1 && rank <= kMaxRank, Error::Kind::parse, "tensor ", name,
          " has invalid rank ", static_cast<int>(rank));
    Shape shape(rank);
    std::size_t n = 1;
    for (auto& d : shape) {
      d = read_le<std::uint64_t>(in, "tensor dimension");
      check(d >= 1 && d <= (1ull << 32), Error::Kind::parse, "tensor ", name,
            " has invalid dimension ", d);
      n *= d;
    }
    const auto dtype = read_le<std::uint8_t>(in, "dtype");
    check(dtype == 0, Error::Kind::parse, "tensor ", name, " has unsupported dtype code ",
          static_cast<int>(dtype));
    std::vector<float> data(n);
    for (std::size_t j = 0; j < n; ++j) {
      const std::uint32_t bits = read_le<std::uint32_t>(in, "tensor payload");
      std::memcpy(&data[j], &bits, sizeof(float));
    }
    ckpt.tensors.emplace_back(std::move(name), Tensor<float>(std::move(shape), std::move(data)));
  }
  ckpt.iteration = read_le<std::uint64_t>(in, "iteration counter");
  const auto rng_count = read_le<std::uint32_t>(in, "rng word count");
  ckpt.rng_words.resize(rng_count);
  for (auto& w : ckpt.rng_words) w = read_le<std::uint64_t>(in, "rng state");
  const auto cfg_len = read_le<std::uint32_t>(in, "config length");
  ckpt.config_echo.resize(cfg_len);
  in.read(ckpt.config_echo.data(), cfg_len);
  check(in.gcount() == static_cast<std::streamsize>(cfg_len), Error::Kind::io,
        "checkpoint truncated in config echo");
  return ckpt;
}

}  // namespace ssgan
