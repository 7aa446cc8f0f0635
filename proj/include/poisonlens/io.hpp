#pragma once

#include <cstdint>
#include <string>

#include "poisonlens/dataset.hpp"

namespace poisonlens {

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

struct IdxImages {
  int rows = 0;
  int cols = 0;
  Matrix pixels;  // one image per row, scaled to [0, 1]
};

// limit < 0 reads everything; otherwise at most `limit` records.
IdxImages load_idx_images(const std::string& path, Index limit = -1);
Vector load_idx_labels(const std::string& path, Index limit = -1);

// Images and labels as one dataset. Throws CountMismatch when the two files
// disagree on the record count.
LabeledDataset load_idx(const std::string& images_path, const std::string& labels_path, Index limit = -1);

struct MnistData {
  LabeledDataset train;
  LabeledDataset test;
};

// Expects the four standard file names inside dir.
MnistData load_mnist(const std::string& dir, Index train_limit = -1, Index test_limit = -1);

// Header row, numeric cells, label in the last column.
LabeledDataset load_csv_dataset(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace poisonlens
