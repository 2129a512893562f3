#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "velu/matrix.hpp"

namespace velu {

// Flattened image dataset. Pixels live in [0, 1]; labels index classes.
struct ImageDataset {
  Matrix images;            // n x d, row-major
  std::vector<int> labels;  // n entries, each < class_count
  int class_count = 0;
  std::string name;

  std::size_t size() const { return images.rows(); }
  std::size_t dim() const { return images.cols(); }
};

// Reads a big-endian IDX image/label file pair (magic 0x00000803 for 3-D
// image files, 0x00000801 for label files). Pixel bytes are scaled by 1/255.
// Throws BadMagicError (naming the offending value), TruncatedFileError, or
// DimensionMismatchError when image and label counts differ.
ImageDataset load_idx(const std::string& images_path, const std::string& labels_path);

// Writes the dataset back to the IDX fixture format (pixels rounded to
// bytes). Loading a saved dataset reproduces it exactly when pixels originate
// from byte data.
void save_idx(const ImageDataset& ds, const std::string& images_path,
              const std::string& labels_path);

// Gaussian blobs around seeded random class centers; deterministic per seed.
ImageDataset make_blobs(std::uint64_t seed, std::size_t n_per_class, int classes, std::size_t dim,
                        double spread);

// Seeded shuffle, then split: first round(fraction * n) samples train, rest
// test. Throws EmptyDatasetError.
std::pair<ImageDataset, ImageDataset> split_train_test(const ImageDataset& ds, double fraction,
                                                       std::uint64_t seed);

struct Batch {
  Matrix x;
  std::vector<int> labels;
};

// Deterministic batch stream: seeded shuffle of indices, then ceil(n/b)
// contiguous chunks; the final batch may be short.
class Batcher {
 public:
  Batcher(const ImageDataset& ds, std::size_t batch_size, std::uint64_t seed);

  bool done() const { return pos_ >= order_.size(); }
  Batch next();
  std::size_t batch_count() const;

 private:
  const ImageDataset& ds_;
  std::size_t batch_size_;
  std::vector<std::size_t> order_;
  std::size_t pos_ = 0;
};

// Directory holding IDX files, resolved from an explicit path or the
// VELU_KIT_DATA_DIR environment variable. Returns empty when neither is set.
std::string resolve_data_dir(const std::string& explicit_dir);

}  // namespace velu
