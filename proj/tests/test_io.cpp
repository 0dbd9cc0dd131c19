#include <doctest.h>

#include <filesystem>
#include <fstream>

#include <unistd.h>

#include "covnorm/baselines.hpp"
#include "covnorm/io.hpp"
#include "covnorm/kernels.hpp"
#include "covnorm/rng.hpp"
#include "oracle_helpers.hpp"

using namespace covnorm;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("covnorm_io_test_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

std::string file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void corrupt_byte(const fs::path& p, std::size_t offset, char value) {
  std::string bytes = file_bytes(p);
  bytes[offset] = value;
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_CASE("matrix files round-trip byte-exactly") {
  TempDir dir;
  Rng rng(900);
  const Matrix m = rng.gaussian_matrix(7, 5);
  const fs::path p = dir.path / "m.mat";
  io::save_matrix(p, m);
  const Matrix loaded = io::load_matrix(p);
  CHECK(loaded == m);
  CHECK(io::encode_matrix(loaded) == file_bytes(p));
  CHECK(!fs::exists(dir.path / "m.mat.tmp"));
}

TEST_CASE("matrix loader rejects malformed files") {
  TempDir dir;
  const fs::path p = dir.path / "m.mat";
  io::save_matrix(p, Matrix::identity(3));

  corrupt_byte(p, 0, 'X');  // magic
  CHECK_THROWS_AS(io::load_matrix(p), FormatError);

  io::save_matrix(p, Matrix::identity(3));
  corrupt_byte(p, 8, 7);  // row count no longer matches the payload
  CHECK_THROWS_AS(io::load_matrix(p), FormatError);

  // Non-finite payload: all-ones exponent bits.
  io::save_matrix(p, Matrix::identity(2));
  std::string bytes = file_bytes(p);
  for (std::size_t i = 24; i < 32; ++i) bytes[i] = '\xff';
  std::ofstream(p, std::ios::binary | std::ios::trunc)
      .write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  CHECK_THROWS_AS(io::load_matrix(p), FormatError);

  CHECK_THROWS_AS(io::load_matrix(dir.path / "missing.mat"), IoError);
}

TEST_CASE("pca files round-trip and validate on load") {
  TempDir dir;
  Rng rng(901);
  const Matrix samples = rng.gaussian_matrix(500, 4);
  const Pca p = pca(accumulate(RunningMoments(4), samples));
  const fs::path path = dir.path / "p.pca";
  io::save_pca(path, p);
  const Pca loaded = io::load_pca(path);
  CHECK(loaded.n == p.n);
  CHECK(loaded.mean == p.mean);
  CHECK(loaded.eigenvalues == p.eigenvalues);
  CHECK(loaded.components == p.components);
  CHECK(io::encode_pca(loaded) == file_bytes(path));

  // Break orthonormality of the stored components.
  std::string bytes = io::encode_pca(p);
  const std::size_t comp_offset = 8 + 8 + 8 + 4 * 8 + 4 * 8;
  bytes[comp_offset + 3] ^= 0x42;
  std::ofstream(path, std::ios::binary | std::ios::trunc)
      .write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  CHECK_THROWS_AS(io::load_pca(path), FormatError);
}

TEST_CASE("pca loader rejects non-descending eigenvalues") {
  TempDir dir;
  Pca p;
  p.mean = {0.0, 0.0};
  p.eigenvalues = {1.0, 2.0};  // ascending: invalid
  p.components = Matrix::identity(2);
  p.n = 5;
  const fs::path path = dir.path / "bad.pca";
  io::atomic_write(path, io::encode_pca(p));
  CHECK_THROWS_AS(io::load_pca(path), FormatError);
}

TEST_CASE("layer files round-trip for every absorption flag") {
  TempDir dir;
  Rng rng(902);
  const std::size_t d = 6;

  // flag 0: kx >= ky
  const RecolorTransform wide =
      assemble(rng.gaussian_matrix(4, d), rng.gaussian_matrix(2, 4), rng.gaussian_matrix(d, 2),
               rng.gaussian_vector(d), rng.gaussian_vector(d));
  // flag 1: kx < ky
  const RecolorTransform tall =
      assemble(rng.gaussian_matrix(2, d), rng.gaussian_matrix(5, 2), rng.gaussian_matrix(d, 5),
               rng.gaussian_vector(d), rng.gaussian_vector(d));

  int idx = 0;
  for (const CompressedLayer& layer : {absorb(wide), absorb(tall)}) {
    const fs::path path = dir.path / ("l" + std::to_string(idx++) + ".lay");
    io::save_layer(path, layer);
    const CompressedLayer loaded = io::load_layer(path);
    CHECK(loaded.left == layer.left);
    CHECK(loaded.right == layer.right);
    CHECK(loaded.bias == layer.bias);
    CHECK(loaded.kx == layer.kx);
    CHECK(loaded.ky == layer.ky);
    CHECK(loaded.param_count == layer.param_count);
    CHECK(io::encode_layer(loaded) == file_bytes(path));
  }

  // flag 2: diagonal
  RunningMoments sx(3), sy(3);
  sx = accumulate(sx, rng.gaussian_matrix(100, 3));
  sy = accumulate(sy, rng.gaussian_matrix(100, 3));
  const CompressedLayer bn = bn_recolor(sx, sy);
  const fs::path path = dir.path / "bn.lay";
  io::save_layer(path, bn);
  const CompressedLayer loaded = io::load_layer(path);
  CHECK(loaded.diagonal);
  CHECK(loaded.param_count == 6);
  CHECK(loaded.left == bn.left);
  CHECK(loaded.right == bn.right);
  CHECK(io::encode_layer(loaded) == file_bytes(path));
}

TEST_CASE("layer loader rejects inconsistent flags") {
  TempDir dir;
  Rng rng(903);
  const RecolorTransform t =
      assemble(rng.gaussian_matrix(4, 6), rng.gaussian_matrix(2, 4), rng.gaussian_matrix(6, 2),
               rng.gaussian_vector(6), rng.gaussian_vector(6));
  const fs::path path = dir.path / "l.lay";
  io::save_layer(path, absorb(t));  // kx=4, ky=2 → flag 0
  corrupt_byte(path, 8 + 24, 1);    // claim flag 1
  CHECK_THROWS_AS(io::load_layer(path), FormatError);
  corrupt_byte(path, 8 + 24, 9);    // unknown flag
  CHECK_THROWS_AS(io::load_layer(path), FormatError);
}
