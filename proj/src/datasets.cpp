#include "velu/datasets.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>

#include "velu/errors.hpp"
#include "velu/rng.hpp"

namespace velu {

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::vector<unsigned char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open file: " + path);
  return std::vector<unsigned char>(std::istreambuf_iterator<char>(in),
                                    std::istreambuf_iterator<char>());
}

std::uint32_t read_u32_be(const std::vector<unsigned char>& buf, std::size_t offset,
                          const std::string& path) {
  if (offset + 4 > buf.size()) {
    throw TruncatedFileError("file too short reading header at offset " + std::to_string(offset) +
                             ": " + path);
  }
  return (static_cast<std::uint32_t>(buf[offset]) << 24) |
         (static_cast<std::uint32_t>(buf[offset + 1]) << 16) |
         (static_cast<std::uint32_t>(buf[offset + 2]) << 8) |
         static_cast<std::uint32_t>(buf[offset + 3]);
}

void write_u32_be(std::ofstream& out, std::uint32_t v) {
  const unsigned char bytes[4] = {static_cast<unsigned char>(v >> 24),
                                  static_cast<unsigned char>(v >> 16),
                                  static_cast<unsigned char>(v >> 8),
                                  static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<const char*>(bytes), 4);
}

std::string hex_magic(std::uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "0x%08x", v);
  return std::string(buf);
}

}  // namespace

ImageDataset load_idx(const std::string& images_path, const std::string& labels_path) {
  const auto img_buf = read_file(images_path);
  const std::uint32_t img_magic = read_u32_be(img_buf, 0, images_path);
  if (img_magic != kImageMagic) {
    throw BadMagicError("bad image-file magic " + hex_magic(img_magic) + " (expected " +
                        hex_magic(kImageMagic) + ") in " + images_path);
  }
  const std::uint32_t n = read_u32_be(img_buf, 4, images_path);
  const std::uint32_t rows = read_u32_be(img_buf, 8, images_path);
  const std::uint32_t cols = read_u32_be(img_buf, 12, images_path);
  const std::size_t pixel_count = static_cast<std::size_t>(n) * rows * cols;
  if (img_buf.size() < 16 + pixel_count) {
    throw TruncatedFileError("image file declares " + std::to_string(pixel_count) +
                             " pixels but holds " + std::to_string(img_buf.size() - 16) + ": " +
                             images_path);
  }

  const auto lab_buf = read_file(labels_path);
  const std::uint32_t lab_magic = read_u32_be(lab_buf, 0, labels_path);
  if (lab_magic != kLabelMagic) {
    throw BadMagicError("bad label-file magic " + hex_magic(lab_magic) + " (expected " +
                        hex_magic(kLabelMagic) + ") in " + labels_path);
  }
  const std::uint32_t n_labels = read_u32_be(lab_buf, 4, labels_path);
  if (lab_buf.size() < 8 + static_cast<std::size_t>(n_labels)) {
    throw TruncatedFileError("label file declares " + std::to_string(n_labels) +
                             " labels but holds " + std::to_string(lab_buf.size() - 8) + ": " +
                             labels_path);
  }
  if (n_labels != n) {
    throw DimensionMismatchError("label count " + std::to_string(n_labels) +
                                 " does not match image count " + std::to_string(n));
  }

  ImageDataset ds;
  ds.name = "idx";
  ds.images = Matrix(n, static_cast<std::size_t>(rows) * cols);
  double* out = ds.images.data();
  for (std::size_t i = 0; i < pixel_count; ++i) {
    out[i] = static_cast<double>(img_buf[16 + i]) / 255.0;
  }
  ds.labels.resize(n);
  int max_label = 0;
  for (std::uint32_t i = 0; i < n; ++i) {
    ds.labels[i] = static_cast<int>(lab_buf[8 + i]);
    max_label = std::max(max_label, ds.labels[i]);
  }
  ds.class_count = max_label + 1;
  return ds;
}

void save_idx(const ImageDataset& ds, const std::string& images_path,
              const std::string& labels_path) {
  // The fixture format stores square images; require a square dimension.
  std::uint32_t side = 0;
  while (static_cast<std::size_t>(side) * side < ds.dim()) ++side;
  if (static_cast<std::size_t>(side) * side != ds.dim()) {
    throw DimensionMismatchError("dataset dimension " + std::to_string(ds.dim()) +
                                 " is not a square image");
  }

  std::ofstream img(images_path, std::ios::binary);
  if (!img) throw Error("cannot open file for writing: " + images_path);
  write_u32_be(img, kImageMagic);
  write_u32_be(img, static_cast<std::uint32_t>(ds.size()));
  write_u32_be(img, side);
  write_u32_be(img, side);
  const double* p = ds.images.data();
  for (std::size_t i = 0; i < ds.images.size(); ++i) {
    const int byte = static_cast<int>(p[i] * 255.0 + 0.5);
    img.put(static_cast<char>(std::clamp(byte, 0, 255)));
  }

  std::ofstream lab(labels_path, std::ios::binary);
  if (!lab) throw Error("cannot open file for writing: " + labels_path);
  write_u32_be(lab, kLabelMagic);
  write_u32_be(lab, static_cast<std::uint32_t>(ds.size()));
  for (int label : ds.labels) lab.put(static_cast<char>(label));
}

ImageDataset make_blobs(std::uint64_t seed, std::size_t n_per_class, int classes, std::size_t dim,
                        double spread) {
  if (n_per_class == 0 || classes <= 0 || dim == 0) {
    throw InvalidParamsError("make_blobs requires positive sizes");
  }
  Rng rng(seed);
  Matrix centers(static_cast<std::size_t>(classes), dim);
  for (std::size_t c = 0; c < static_cast<std::size_t>(classes); ++c) {
    for (std::size_t d = 0; d < dim; ++d) centers(c, d) = rng.uniform(-3.0, 3.0);
  }

  ImageDataset ds;
  ds.name = "blobs";
  ds.class_count = classes;
  const std::size_t n = n_per_class * static_cast<std::size_t>(classes);
  ds.images = Matrix(n, dim);
  ds.labels.resize(n);
  std::size_t row = 0;
  for (int c = 0; c < classes; ++c) {
    for (std::size_t i = 0; i < n_per_class; ++i, ++row) {
      for (std::size_t d = 0; d < dim; ++d) {
        ds.images(row, d) = centers(static_cast<std::size_t>(c), d) + spread * rng.normal();
      }
      ds.labels[row] = c;
    }
  }
  return ds;
}

namespace {

ImageDataset take_indices(const ImageDataset& ds, std::span<const std::size_t> idx) {
  ImageDataset out;
  out.name = ds.name;
  out.class_count = ds.class_count;
  out.images = Matrix(idx.size(), ds.dim());
  out.labels.resize(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const auto src = ds.images.row(idx[i]);
    std::copy(src.begin(), src.end(), out.images.row(i).begin());
    out.labels[i] = ds.labels[idx[i]];
  }
  return out;
}

}  // namespace

std::pair<ImageDataset, ImageDataset> split_train_test(const ImageDataset& ds, double fraction,
                                                       std::uint64_t seed) {
  if (ds.size() == 0) throw EmptyDatasetError();
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw InvalidParamsError("train fraction must be in (0, 1)");
  }
  const auto order = random_permutation(ds.size(), seed);
  const std::size_t n_train = static_cast<std::size_t>(
      fraction * static_cast<double>(ds.size()) + 0.5);
  const std::size_t clamped = std::min(std::max<std::size_t>(n_train, 1), ds.size() - 1);
  return {take_indices(ds, std::span(order).first(clamped)),
          take_indices(ds, std::span(order).subspan(clamped))};
}

Batcher::Batcher(const ImageDataset& ds, std::size_t batch_size, std::uint64_t seed)
    : ds_(ds), batch_size_(batch_size) {
  if (ds.size() == 0) throw EmptyDatasetError();
  if (batch_size_ == 0) throw InvalidParamsError("batch_size must be >= 1");
  order_ = random_permutation(ds.size(), seed);
}

std::size_t Batcher::batch_count() const {
  return (order_.size() + batch_size_ - 1) / batch_size_;
}

Batch Batcher::next() {
  const std::size_t remaining = order_.size() - pos_;
  const std::size_t take = std::min(batch_size_, remaining);
  Batch batch;
  batch.x = Matrix(take, ds_.dim());
  batch.labels.resize(take);
  for (std::size_t i = 0; i < take; ++i) {
    const std::size_t src = order_[pos_ + i];
    const auto row = ds_.images.row(src);
    std::copy(row.begin(), row.end(), batch.x.row(i).begin());
    batch.labels[i] = ds_.labels[src];
  }
  pos_ += take;
  return batch;
}

std::string resolve_data_dir(const std::string& explicit_dir) {
  if (!explicit_dir.empty()) return explicit_dir;
  if (const char* env = std::getenv("VELU_KIT_DATA_DIR"); env && *env) return env;
  return "";
}

}  // namespace velu
