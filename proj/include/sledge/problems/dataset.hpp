#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace sledge {

// Sparse-row labeled classification data.  Labels are contiguous 0-based
// class ids; feature indices are 0-based.
struct LabeledDataset {
  int num_features = 0;
  int num_classes = 0;
  std::vector<int> labels;
  std::vector<std::vector<std::pair<int, double>>> rows;

  int size() const { return static_cast<int>(rows.size()); }
};

// Reads LIBSVM-format text ("label idx:val idx:val ...", 1-based indices).
// Labels are remapped to 0..C-1 by sorted numeric value.  Malformed input
// raises std::runtime_error naming the line; missing files raise too.
LabeledDataset load_libsvm(const std::string& path);

// Inverse of load_libsvm up to label renaming: class ids are written
// verbatim and indices shifted back to 1-based.
void save_libsvm(const LabeledDataset& data, const std::string& path);

// Isotropic Gaussian class clusters: `per_class` unit-variance points around
// each of `classes` centers drawn at distance `separation` from the origin.
// Rows come out sorted by class, so any contiguous slice of per_class rows
// is single-class.
LabeledDataset make_blobs(int classes, int per_class, int features,
                          double separation, std::uint64_t seed);

}  // namespace sledge
