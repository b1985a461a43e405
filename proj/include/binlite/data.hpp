#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "binlite/image.hpp"
#include "binlite/rng.hpp"
#include "binlite/tensor.hpp"

namespace binlite {

constexpr int kImageSide = 224;

enum class Split : std::uint8_t { train = 0, val = 1, test = 2 };

const char* split_name(Split s);
Split split_from_name(const std::string& name);

struct ManifestEntry {
  std::string rel_path; // "<class_dir>/<file>"
  int class_index = 0;
  Split split = Split::train;
};

// Labeled index of an image corpus: class = folder name, entries ordered
// lexicographically by relative path.
struct DatasetManifest {
  std::string root;
  std::vector<std::string> class_names; // sorted, unique
  std::vector<ManifestEntry> entries;
  std::uint64_t split_seed = 0;

  std::vector<std::int64_t> class_counts() const;
  std::vector<int> split_indices(Split s) const;
  std::int64_t split_size(Split s) const;
};

// Index `root`: every immediate subdirectory is a class; recognized image
// files are .ppm and .png. Stray files at the root are ignored with a
// warning on stderr; an empty root or a class folder without images is an
// ingestion error naming the folder. All entries start in the train split.
DatasetManifest scan_directory(const std::string& root);

// Per-class stratified shuffle keyed by `seed`. Val/test sizes per class
// are floor(ratio * class_count); the remainder goes to train. Classes too
// small for a non-empty val/test just emit a warning.
DatasetManifest split_dataset(DatasetManifest m, const std::array<double, 3>& ratios,
                              std::uint64_t seed);

// Bilinear resize to 224x224 and scale into [0,1].
Tensor preprocess(const RawImage& img);

struct AugmentConfig {
  float hflip_prob = 0.5f;
  float rotation_max_deg = 15.0f;
  float center_crop_min_frac = 0.8f;
  bool enabled = true;
};

// In order: horizontal flip w.p. hflip_prob, rotation by U(-max,+max)
// degrees (bilinear, edge replicate), center crop with side fraction
// U(min_frac, 1] resampled back to 224. Shape and value range preserved.
Tensor augment(const Tensor& img, const AugmentConfig& cfg, Rng& rng);

struct Batch {
  Tensor images; // [n,224,224,3]
  std::vector<int> labels;
};

// Ordered batch stream over one split: per-epoch reshuffle keyed by
// (shuffle_seed, epoch), last batch short, augmentation applied to the
// train split only. Decoding is a pure function of (files, seeds), so
// batch contents are reproducible run to run.
class BatchStream {
public:
  struct Options {
    int batch_size = 32;
    std::uint64_t shuffle_seed = 0;
    int epoch = 0;
    std::optional<AugmentConfig> augment; // train split only
    bool shuffle = true;
  };

  BatchStream(const DatasetManifest& m, Split split, Options opt);

  bool next(Batch& out);
  std::int64_t total() const { return static_cast<std::int64_t>(order_.size()); }

private:
  const DatasetManifest* manifest_;
  Split split_;
  Options opt_;
  std::vector<int> order_;
  std::size_t pos_ = 0;
};

// JSON-lines audit trail: a header record with class_names and seed, then
// one record per entry.
void export_manifest(const DatasetManifest& m, const std::string& path);
DatasetManifest import_manifest(const std::string& path);

} // namespace binlite
