#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "aop/autodiff/param_store.hpp"
#include "aop/autodiff/tensor.hpp"

namespace aop::transformer {

inline constexpr char kCheckpointMagic[8] = {'A', 'O', 'P', 'D', 'L', 'G', 'C', 'K'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  autodiff::Shape shape;
  std::vector<double> values;
};

// Binary layout, little-endian:
//   magic[8] u32 version u32 reserved u64 metadata_len metadata(JSON text)
//   u64 count, then per tensor: u32 name_len name u32 rank u64 dims[rank] f64 values
struct Checkpoint {
  std::string metadata;
  std::vector<NamedTensor> tensors;

  static Checkpoint from_store(const autodiff::ParamStore& store, std::string metadata);
  // Copies values into the matching store entries. Every store entry must be
  // present with an identical shape.
  void load_into(autodiff::ParamStore& store) const;
  const NamedTensor& tensor(const std::string& name) const;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace aop::transformer
