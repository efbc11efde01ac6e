#include "freeseed/container.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace freeseed::container {

namespace {

template <typename U>
void put_le(unsigned char* dst, U value) {
  for (std::size_t i = 0; i < sizeof(U); ++i) dst[i] = static_cast<unsigned char>((value >> (8 * i)) & 0xFF);
}

template <typename U>
U get_le(const unsigned char* src) {
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(src[i]) << (8 * i);
  return v;
}

}  // namespace

template <typename T>
void write(std::ostream& out, const Tensor<T>& array) {
  if (array.ndim() < 1 || array.ndim() > kMaxDims) throw std::invalid_argument("container: unsupported rank");
  std::array<unsigned char, kHeaderBytes> header{};
  std::memcpy(header.data(), "FSCT", 4);
  put_le<std::uint32_t>(header.data() + 4, kVersion);
  put_le<std::uint32_t>(header.data() + 8, kFloat32);
  put_le<std::uint32_t>(header.data() + 12, static_cast<std::uint32_t>(array.ndim()));
  for (int d = 0; d < array.ndim(); ++d) {
    put_le<std::uint64_t>(header.data() + 16 + 8 * d, static_cast<std::uint64_t>(array.dim(d)));
  }
  out.write(reinterpret_cast<const char*>(header.data()), kHeaderBytes);

  std::vector<unsigned char> payload(array.size() * 4);
  for (std::size_t i = 0; i < array.size(); ++i) {
    put_le<std::uint32_t>(payload.data() + 4 * i, std::bit_cast<std::uint32_t>(static_cast<float>(array[i])));
  }
  out.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
  if (!out) throw std::runtime_error("container: write failed");
}

Tensor<float> read(std::istream& in) {
  std::array<unsigned char, kHeaderBytes> header{};
  in.read(reinterpret_cast<char*>(header.data()), kHeaderBytes);
  if (in.gcount() != static_cast<std::streamsize>(kHeaderBytes)) throw std::runtime_error("container: truncated header");
  if (std::memcmp(header.data(), "FSCT", 4) != 0) throw std::runtime_error("container: bad magic");
  const auto version = get_le<std::uint32_t>(header.data() + 4);
  if (version != kVersion) throw std::runtime_error("container: unsupported version " + std::to_string(version));
  if (get_le<std::uint32_t>(header.data() + 8) != kFloat32) throw std::runtime_error("container: unsupported dtype");
  const auto ndim = get_le<std::uint32_t>(header.data() + 12);
  if (ndim < 1 || ndim > static_cast<std::uint32_t>(kMaxDims)) throw std::runtime_error("container: bad rank");
  Shape shape;
  for (std::uint32_t d = 0; d < ndim; ++d) {
    shape.push_back(static_cast<std::int64_t>(get_le<std::uint64_t>(header.data() + 16 + 8 * d)));
  }
  Tensor<float> out(shape);
  std::vector<unsigned char> payload(out.size() * 4);
  in.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
  if (in.gcount() != static_cast<std::streamsize>(payload.size())) throw std::runtime_error("container: truncated payload");
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::bit_cast<float>(get_le<std::uint32_t>(payload.data() + 4 * i));
  return out;
}

template <typename T>
void save(const std::filesystem::path& path, const Tensor<T>& array) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write(out, array);
}

Tensor<float> load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return read(in);
}

template <typename T>
void save_all(const std::filesystem::path& path, const std::vector<const Tensor<T>*>& arrays) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto* a : arrays) write(out, *a);
}

std::vector<Tensor<float>> load_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::vector<Tensor<float>> out;
  while (in.peek() != std::char_traits<char>::eof()) out.push_back(read(in));
  return out;
}

template void write(std::ostream&, const Tensor<float>&);
template void write(std::ostream&, const Tensor<double>&);
template void save(const std::filesystem::path&, const Tensor<float>&);
template void save(const std::filesystem::path&, const Tensor<double>&);
template void save_all(const std::filesystem::path&, const std::vector<const Tensor<float>*>&);
template void save_all(const std::filesystem::path&, const std::vector<const Tensor<double>*>&);

}  // namespace freeseed::container
