#pragma once

#include <filesystem>
#include <string>

#include "covnorm/recolor.hpp"
#include "covnorm/stats.hpp"

// Binary interchange formats. All integers are unsigned 64-bit
// little-endian; all reals are IEEE-754 binary64 little-endian; matrices
// are row-major. Writes go to a temporary file that is renamed into place.
//
//   CVNMAT01  rows, cols, payload
//   CVNPCA01  d, n, mean[d], eigenvalues[d] (descending),
//             components[d×d] (column i ↔ eigenvalue i)
//   CVNLAY01  d, kx, ky, side flag (u8), left, right, bias[d]
//             flag 0: left d×ky, right ky×d (M absorbed into W̃)
//             flag 1: left d×kx, right kx×d (M absorbed into C̃)
//             flag 2: diagonal layer; left and right stored as d diagonals

namespace covnorm::io {

inline constexpr std::string_view kMatrixMagic = "CVNMAT01";
inline constexpr std::string_view kPcaMagic = "CVNPCA01";
inline constexpr std::string_view kLayerMagic = "CVNLAY01";

void save_matrix(const std::filesystem::path& path, const Matrix& m);
Matrix load_matrix(const std::filesystem::path& path);

void save_pca(const std::filesystem::path& path, const Pca& p);
Pca load_pca(const std::filesystem::path& path);

void save_layer(const std::filesystem::path& path, const CompressedLayer& layer);
CompressedLayer load_layer(const std::filesystem::path& path);

// Encoded bytes without touching the filesystem (round-trip checks).
std::string encode_matrix(const Matrix& m);
std::string encode_pca(const Pca& p);
std::string encode_layer(const CompressedLayer& layer);

// Whole-file atomic write used by every saver and the CSV emitters.
void atomic_write(const std::filesystem::path& path, std::string_view bytes);

}  // namespace covnorm::io
