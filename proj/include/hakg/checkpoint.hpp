#pragma once

#include <cstdint>
#include <filesystem>

#include "hakg/encoder.hpp"
#include "hakg/model.hpp"
#include "hakg/params.hpp"

namespace hakg::model {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  Variant variant = Variant::kFull;
  Dimensions dims;
  nn::ParamStore params;
};

// Binary little-endian: "HKGM", u32 version, u8 variant, u32 x 6 dimensions
// (d_e, d_t, d_r, d_a, m, L), u32 parameter count, then per parameter
// u16 name length, name bytes, u8 rank, u32 dims, f64 values row-major.
void save_checkpoint(const nn::ParamStore& params, Variant variant, const Dimensions& dims,
                     const std::filesystem::path& path);
void save_checkpoint(const HakgModel& model, const std::filesystem::path& path);

Checkpoint load_checkpoint(const std::filesystem::path& path);

// Rebuilds a model of `expected` shape from a checkpoint. Tensor layout is
// checked first (ShapeError naming the tensor), then the header.
HakgModel restore_model(Checkpoint checkpoint, const ModelShape& expected);

}  // namespace hakg::model
