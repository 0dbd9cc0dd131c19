#include "covnorm/io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <utility>

namespace covnorm::io {

namespace {

constexpr std::size_t kMaxElements = std::size_t{1} << 30;  // 8 GiB payload cap

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double x) { put_u64(out, std::bit_cast<std::uint64_t>(x)); }

class Reader {
 public:
  Reader(std::string bytes, std::string context)
      : bytes_(std::move(bytes)), context_(std::move(context)) {}

  void expect_magic(std::string_view magic) {
    if (bytes_.size() < 8 || std::string_view(bytes_.data(), 8) != magic) {
      throw FormatError(context_ + ": bad magic");
    }
    pos_ = 8;
  }

  std::uint64_t u64() {
    if (pos_ + 8 > bytes_.size()) throw FormatError(context_ + ": truncated file");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += 8;
    return v;
  }

  double f64() { return std::bit_cast<double>(u64()); }

  std::uint8_t u8() {
    if (pos_ + 1 > bytes_.size()) throw FormatError(context_ + ": truncated file");
    return static_cast<std::uint8_t>(bytes_[pos_++]);
  }

  Vector f64_block(std::size_t count) {
    Vector out(count);
    for (std::size_t i = 0; i < count; ++i) out[i] = f64();
    if (!all_finite(out)) throw FormatError(context_ + ": non-finite value");
    return out;
  }

  void expect_end() const {
    if (pos_ != bytes_.size()) throw FormatError(context_ + ": trailing bytes");
  }

  const std::string& context() const { return context_; }

 private:
  std::string bytes_;
  std::string context_;
  std::size_t pos_ = 0;
};

Reader open(const std::filesystem::path& path, const char* kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(std::string(kind) + ": cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (!in.good() && !in.eof()) throw IoError(std::string(kind) + ": read failed on " + path.string());
  return Reader(std::move(bytes), std::string(kind) + " " + path.string());
}

std::size_t checked_dims(std::uint64_t rows, std::uint64_t cols, const std::string& context) {
  if (rows > kMaxElements || cols > kMaxElements || (cols != 0 && rows > kMaxElements / cols)) {
    throw FormatError(context + ": implausible shape");
  }
  return static_cast<std::size_t>(rows * cols);
}

Matrix read_matrix_block(Reader& r, std::size_t rows, std::size_t cols) {
  checked_dims(rows, cols, r.context());
  return Matrix(rows, cols, r.f64_block(rows * cols));
}

}  // namespace

void atomic_write(const std::filesystem::path& path, std::string_view bytes) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out.good()) throw IoError("write failed on " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("rename to " + path.string() + " failed: " + ec.message());
}

std::string encode_matrix(const Matrix& m) {
  require_finite(m, "encode_matrix");
  std::string out{kMatrixMagic};
  put_u64(out, m.rows());
  put_u64(out, m.cols());
  for (double x : m.values()) put_f64(out, x);
  return out;
}

void save_matrix(const std::filesystem::path& path, const Matrix& m) {
  atomic_write(path, encode_matrix(m));
}

Matrix load_matrix(const std::filesystem::path& path) {
  Reader r = open(path, "matrix file");
  r.expect_magic(kMatrixMagic);
  const std::uint64_t rows = r.u64();
  const std::uint64_t cols = r.u64();
  Matrix m = read_matrix_block(r, static_cast<std::size_t>(rows), static_cast<std::size_t>(cols));
  r.expect_end();
  return m;
}

std::string encode_pca(const Pca& p) {
  const std::size_t d = p.dim();
  if (p.eigenvalues.size() != d || p.components.rows() != d || p.components.cols() != d) {
    throw DimensionError("encode_pca: inconsistent PCA");
  }
  std::string out{kPcaMagic};
  put_u64(out, d);
  put_u64(out, p.n);
  for (double x : p.mean) put_f64(out, x);
  for (double x : p.eigenvalues) put_f64(out, x);
  for (double x : p.components.values()) put_f64(out, x);
  return out;
}

void save_pca(const std::filesystem::path& path, const Pca& p) {
  atomic_write(path, encode_pca(p));
}

Pca load_pca(const std::filesystem::path& path) {
  Reader r = open(path, "pca file");
  r.expect_magic(kPcaMagic);
  const std::size_t d = static_cast<std::size_t>(r.u64());
  if (d == 0) throw FormatError(r.context() + ": zero dimension");
  const std::size_t n = static_cast<std::size_t>(r.u64());
  Pca p;
  p.n = n;
  p.mean = r.f64_block(d);
  p.eigenvalues = r.f64_block(d);
  p.components = read_matrix_block(r, d, d);
  r.expect_end();
  for (std::size_t i = 0; i + 1 < d; ++i) {
    if (p.eigenvalues[i] < p.eigenvalues[i + 1]) {
      throw FormatError(r.context() + ": eigenvalues not descending");
    }
  }
  // Orthonormality gate on the stored components.
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i; j < d; ++j) {
      double ip = 0.0;
      for (std::size_t k = 0; k < d; ++k) ip += p.components(k, i) * p.components(k, j);
      const double expected = (i == j) ? 1.0 : 0.0;
      if (std::abs(ip - expected) > 1e-8) {
        throw FormatError(r.context() + ": components are not orthonormal");
      }
    }
  }
  return p;
}

namespace {

Vector diagonal_of(const Matrix& m) {
  Vector out(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) out[i] = m(i, i);
  return out;
}

}  // namespace

std::string encode_layer(const CompressedLayer& layer) {
  const std::size_t d = layer.dim();
  std::string out{kLayerMagic};
  put_u64(out, d);
  put_u64(out, layer.kx);
  put_u64(out, layer.ky);
  if (layer.diagonal) {
    out.push_back(2);
    for (double x : diagonal_of(layer.left)) put_f64(out, x);
    for (double x : diagonal_of(layer.right)) put_f64(out, x);
  } else if (layer.kx >= layer.ky) {
    out.push_back(0);
    for (double x : layer.left.values()) put_f64(out, x);
    for (double x : layer.right.values()) put_f64(out, x);
  } else {
    out.push_back(1);
    for (double x : layer.left.values()) put_f64(out, x);
    for (double x : layer.right.values()) put_f64(out, x);
  }
  for (double x : layer.bias) put_f64(out, x);
  return out;
}

void save_layer(const std::filesystem::path& path, const CompressedLayer& layer) {
  atomic_write(path, encode_layer(layer));
}

CompressedLayer load_layer(const std::filesystem::path& path) {
  Reader r = open(path, "layer file");
  r.expect_magic(kLayerMagic);
  const std::size_t d = static_cast<std::size_t>(r.u64());
  const std::size_t kx = static_cast<std::size_t>(r.u64());
  const std::size_t ky = static_cast<std::size_t>(r.u64());
  const std::uint8_t flag = r.u8();
  if (d == 0 || kx == 0 || ky == 0 || kx > d || ky > d) {
    throw FormatError(r.context() + ": implausible dimensions");
  }
  CompressedLayer layer;
  if (flag == 2) {
    if (kx != d || ky != d) throw FormatError(r.context() + ": diagonal layer must have kx = ky = d");
    Vector left_diag = r.f64_block(d);
    Vector right_diag = r.f64_block(d);
    layer = make_layer(Matrix::diagonal(left_diag), Matrix::diagonal(right_diag), Vector(d, 0.0),
                       d, d, /*diagonal=*/true);
  } else if (flag == 0) {
    // The flag must agree with the shapes so a rewrite is byte-identical.
    if (kx < ky) throw FormatError(r.context() + ": flag 0 requires kx >= ky");
    Matrix left = read_matrix_block(r, d, ky);
    Matrix right = read_matrix_block(r, ky, d);
    layer = make_layer(std::move(left), std::move(right), Vector(d, 0.0), kx, ky);
  } else if (flag == 1) {
    if (kx >= ky) throw FormatError(r.context() + ": flag 1 requires kx < ky");
    Matrix left = read_matrix_block(r, d, kx);
    Matrix right = read_matrix_block(r, kx, d);
    layer = make_layer(std::move(left), std::move(right), Vector(d, 0.0), kx, ky);
  } else {
    throw FormatError(r.context() + ": unknown absorption flag");
  }
  layer.bias = r.f64_block(d);
  r.expect_end();
  return layer;
}

}  // namespace covnorm::io
