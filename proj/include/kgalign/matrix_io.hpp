#pragma once

#include "kgalign/common.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>

namespace kgalign {

/// Binary matrix format shared by all persisted embeddings: two little-endian
/// uint64 (rows, cols) followed by rows*cols row-major little-endian float32.
void save_matrix_f32(const Matrix& m, const std::filesystem::path& path);
Matrix load_matrix_f32(const std::filesystem::path& path);

namespace io {
void put_u64_le(std::ostream& out, std::uint64_t v);
std::uint64_t get_u64_le(std::istream& in);
void put_f32_le(std::ostream& out, float f);
float get_f32_le(std::istream& in);
/// Row-major f32 payload without the (rows, cols) header.
void put_matrix_f32(std::ostream& out, const Matrix& m);
void get_matrix_f32(std::istream& in, Matrix& m);
}  // namespace io

}  // namespace kgalign
