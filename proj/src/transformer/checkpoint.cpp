#include "aop/transformer/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>

#include "aop/errors.hpp"

namespace aop::transformer {

using autodiff::Tensor;

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw ParseError("truncated checkpoint");
  return value;
}

std::string get_string(std::istream& in, std::uint64_t n) {
  if (n > (1ull << 32)) throw ParseError("implausible string length in checkpoint");
  std::string s(n, '\0');
  in.read(s.data(), static_cast<std::streamsize>(n));
  if (!in) throw ParseError("truncated checkpoint");
  return s;
}

}  // namespace

Checkpoint Checkpoint::from_store(const autodiff::ParamStore& store, std::string metadata) {
  Checkpoint c;
  c.metadata = std::move(metadata);
  for (const auto& [name, t] : store.entries()) {
    c.tensors.push_back({name, t.shape(), {t.data().begin(), t.data().end()}});
  }
  return c;
}

const NamedTensor& Checkpoint::tensor(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return t;
  }
  throw LookupError("checkpoint has no tensor " + name);
}

void Checkpoint::load_into(autodiff::ParamStore& store) const {
  for (const auto& [name, param] : store.entries()) {
    const NamedTensor& t = tensor(name);
    if (t.shape != param.shape()) {
      throw DimensionError("checkpoint tensor " + name + " has shape " + autodiff::shape_string(t.shape) +
                           ", model expects " + autodiff::shape_string(param.shape()));
    }
    Tensor target = param;
    auto dst = target.mutable_data();
    std::copy(t.values.begin(), t.values.end(), dst.begin());
  }
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write checkpoint " + path.string());
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, 0);
  put<std::uint64_t>(out, ckpt.metadata.size());
  out.write(ckpt.metadata.data(), static_cast<std::streamsize>(ckpt.metadata.size()));
  put<std::uint64_t>(out, ckpt.tensors.size());
  for (const auto& t : ckpt.tensors) {
    if (autodiff::shape_size(t.shape) != t.values.size()) throw DimensionError("tensor " + t.name + " payload size");
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.name.size()));
    out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.shape.size()));
    for (auto d : t.shape) put<std::uint64_t>(out, d);
    out.write(reinterpret_cast<const char*>(t.values.data()), static_cast<std::streamsize>(t.values.size() * 8));
  }
  if (!out) throw Error("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path.string());
  char magic[sizeof(kCheckpointMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) throw ParseError("not a checkpoint file");
  const auto version = get<std::uint32_t>(in);
  if (version != kCheckpointVersion) throw ParseError("unsupported checkpoint version " + std::to_string(version));
  get<std::uint32_t>(in);

  Checkpoint c;
  c.metadata = get_string(in, get<std::uint64_t>(in));
  const auto count = get<std::uint64_t>(in);
  for (std::uint64_t i = 0; i < count; ++i) {
    NamedTensor t;
    t.name = get_string(in, get<std::uint32_t>(in));
    const auto rank = get<std::uint32_t>(in);
    if (rank == 0 || rank > 8) throw ParseError("bad rank for tensor " + t.name);
    for (std::uint32_t r = 0; r < rank; ++r) t.shape.push_back(get<std::uint64_t>(in));
    const std::size_t n = autodiff::shape_size(t.shape);
    if (n > (1ull << 34)) throw ParseError("implausible tensor size for " + t.name);
    t.values.resize(n);
    in.read(reinterpret_cast<char*>(t.values.data()), static_cast<std::streamsize>(n * 8));
    if (!in) throw ParseError("truncated payload for tensor " + t.name);
    c.tensors.push_back(std::move(t));
  }
  return c;
}

}  // namespace aop::transformer
