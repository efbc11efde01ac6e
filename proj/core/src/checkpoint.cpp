#include "freeseed/checkpoint.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <set>
#include <stdexcept>

#include "freeseed/container.hpp"

namespace freeseed {

namespace {

constexpr std::uint32_t kCheckpointVersion = 1;

template <typename U>
void write_le(std::ostream& out, U value) {
  std::array<char, sizeof(U)> b{};
  for (std::size_t i = 0; i < sizeof(U); ++i) b[i] = static_cast<char>((value >> (8 * i)) & 0xFF);
  out.write(b.data(), sizeof(U));
}

template <typename U>
U read_le(std::istream& in) {
  std::array<unsigned char, sizeof(U)> b{};
  in.read(reinterpret_cast<char*>(b.data()), sizeof(U));
  if (in.gcount() != static_cast<std::streamsize>(sizeof(U))) throw std::runtime_error("checkpoint: truncated");
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(b[i]) << (8 * i);
  return v;
}

std::string read_string(std::istream& in, std::uint64_t n) {
  if (n > (std::uint64_t{1} << 30)) throw std::runtime_error("checkpoint: implausible string length");
  std::string s(n, '\0');
  in.read(s.data(), static_cast<std::streamsize>(n));
  if (in.gcount() != static_cast<std::streamsize>(n)) throw std::runtime_error("checkpoint: truncated");
  return s;
}

}  // namespace

void Checkpoint::add(std::string name, Tensor<float> array) {
  if (has(name)) throw std::invalid_argument("checkpoint: duplicate array " + name);
  arrays.emplace_back(std::move(name), std::move(array));
}

bool Checkpoint::has(const std::string& name) const {
  for (const auto& [n, a] : arrays) {
    if (n == name) return true;
  }
  return false;
}

const Tensor<float>& Checkpoint::get(const std::string& name) const {
  for (const auto& [n, a] : arrays) {
    if (n == name) return a;
  }
  throw std::runtime_error("checkpoint has no array named " + name);
}

void Checkpoint::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write("FSCK", 4);
  write_le<std::uint32_t>(out, kCheckpointVersion);
  const std::string text = meta.to_string();
  write_le<std::uint64_t>(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(arrays.size()));
  for (const auto& [name, array] : arrays) {
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    container::write(out, array);
  }
  if (!out) throw std::runtime_error("checkpoint: write failed for " + path.string());
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read checkpoint " + path.string());
  if (read_string(in, 4) != "FSCK") throw std::runtime_error("checkpoint: bad magic in " + path.string());
  if (read_le<std::uint32_t>(in) != kCheckpointVersion) throw std::runtime_error("checkpoint: unsupported version");
  Checkpoint ck;
  ck.meta = KeyValues::parse(read_string(in, read_le<std::uint64_t>(in)));
  const auto count = read_le<std::uint32_t>(in);
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = read_string(in, read_le<std::uint32_t>(in));
    ck.add(std::move(name), container::read(in));
  }
  return ck;
}

}  // namespace freeseed
