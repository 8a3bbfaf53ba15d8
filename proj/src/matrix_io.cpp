#include "kgalign/matrix_io.hpp"

#include <cstring>
#include <fstream>
#include <vector>

namespace kgalign {

namespace io {

void put_u64_le(std::ostream& out, std::uint64_t v) {
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xffu);
  out.write(reinterpret_cast<const char*>(buf), 8);
}

std::uint64_t get_u64_le(std::istream& in) {
  unsigned char buf[8];
  in.read(reinterpret_cast<char*>(buf), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return v;
}

static void pack_f32_le(unsigned char* out, float f) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, 4);
  for (int i = 0; i < 4; ++i) out[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xffu);
}

static float unpack_f32_le(const unsigned char* in) {
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(in[i]) << (8 * i);
  float f;
  std::memcpy(&f, &bits, 4);
  return f;
}

void put_f32_le(std::ostream& out, float f) {
  unsigned char buf[4];
  pack_f32_le(buf, f);
  out.write(reinterpret_cast<const char*>(buf), 4);
}

float get_f32_le(std::istream& in) {
  unsigned char buf[4];
  in.read(reinterpret_cast<char*>(buf), 4);
  return unpack_f32_le(buf);
}

void put_matrix_f32(std::ostream& out, const Matrix& m) {
  std::vector<unsigned char> row(static_cast<std::size_t>(m.cols()) * 4);
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c)
      pack_f32_le(row.data() + static_cast<std::size_t>(c) * 4, static_cast<float>(m(r, c)));
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
}

void get_matrix_f32(std::istream& in, Matrix& m) {
  std::vector<unsigned char> row(static_cast<std::size_t>(m.cols()) * 4);
  for (Index r = 0; r < m.rows(); ++r) {
    in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size()));
    if (!in) throw DataError("matrix payload truncated at row " + std::to_string(r));
    for (Index c = 0; c < m.cols(); ++c) m(r, c) = unpack_f32_le(row.data() + static_cast<std::size_t>(c) * 4);
  }
}

}  // namespace io

void save_matrix_f32(const Matrix& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write matrix file: " + path.string());
  io::put_u64_le(out, static_cast<std::uint64_t>(m.rows()));
  io::put_u64_le(out, static_cast<std::uint64_t>(m.cols()));
  io::put_matrix_f32(out, m);
  if (!out) throw DataError("short write to matrix file: " + path.string());
}

Matrix load_matrix_f32(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open matrix file: " + path.string());
  const std::uint64_t rows = io::get_u64_le(in);
  const std::uint64_t cols = io::get_u64_le(in);
  if (!in) throw DataError("matrix file truncated in header: " + path.string());
  Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
  try {
    io::get_matrix_f32(in, m);
  } catch (const DataError& e) {
    throw DataError(std::string(e.what()) + ": " + path.string());
  }
  return m;
}

}  // namespace kgalign
