#pragma once

#include <filesystem>

#include "affect/tensor.hpp"

namespace affect {

/// Binary tensor file: magic "OMGT", version byte 1, rank as u32 LE,
/// extents as u32 LE each, then row-major f32 LE payload. Values are
/// widened to f64 on read and narrowed on write.
Tensor read_tensor_file(const std::filesystem::path& path);
void write_tensor_file(const std::filesystem::path& path, const Tensor& t);

}  // namespace affect
