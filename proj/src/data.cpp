#include "binlite/data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "binlite/error.hpp"

namespace fs = std::filesystem;

namespace binlite {

const char* split_name(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "?";
}

Split split_from_name(const std::string& name) {
  if (name == "train") return Split::train;
  if (name == "val") return Split::val;
  if (name == "test") return Split::test;
  throw ConfigError("unknown split '" + name + "'");
}

std::vector<std::int64_t> DatasetManifest::class_counts() const {
  std::vector<std::int64_t> counts(class_names.size(), 0);
  for (const auto& e : entries) ++counts[static_cast<std::size_t>(e.class_index)];
  return counts;
}

std::vector<int> DatasetManifest::split_indices(Split s) const {
  std::vector<int> idx;
  for (std::size_t i = 0; i < entries.size(); ++i)
    if (entries[i].split == s) idx.push_back(static_cast<int>(i));
  return idx;
}

std::int64_t DatasetManifest::split_size(Split s) const {
  return static_cast<std::int64_t>(split_indices(s).size());
}

namespace {

bool recognized_image(const fs::path& p) {
  auto ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".ppm" || ext == ".png";
}

} // namespace

DatasetManifest scan_directory(const std::string& root) {
  if (!fs::exists(root) || !fs::is_directory(root))
    throw IngestError("dataset root '" + root + "' is not a directory");

  DatasetManifest m;
  m.root = root;

  std::vector<std::string> class_dirs;
  for (const auto& de : fs::directory_iterator(root)) {
    if (de.is_directory()) {
      class_dirs.push_back(de.path().filename().string());
    } else {
      std::cerr << "warning: ignoring stray file '" << de.path().string()
                << "' outside any class folder\n";
    }
  }
  if (class_dirs.empty()) throw IngestError("dataset root '" + root + "' has no class folders");
  std::sort(class_dirs.begin(), class_dirs.end());
  m.class_names = class_dirs;

  for (std::size_t ci = 0; ci < class_dirs.size(); ++ci) {
    std::vector<std::string> files;
    for (const auto& de : fs::directory_iterator(fs::path(root) / class_dirs[ci])) {
      if (de.is_regular_file() && recognized_image(de.path()))
        files.push_back(de.path().filename().string());
    }
    if (files.empty())
      throw IngestError("class folder '" + class_dirs[ci] + "' contains no images");
    std::sort(files.begin(), files.end());
    for (const auto& f : files)
      m.entries.push_back({class_dirs[ci] + "/" + f, static_cast<int>(ci), Split::train});
  }
  return m;
}

DatasetManifest split_dataset(DatasetManifest m, const std::array<double, 3>& ratios,
                              std::uint64_t seed) {
  double sum = 0.0;
  for (double r : ratios) {
    if (r < 0.0) throw ConfigError("split ratios must be non-negative");
    sum += r;
  }
  if (std::fabs(sum - 1.0) > 1e-9) throw ConfigError("split ratios must sum to 1");

  m.split_seed = seed;
  const std::size_t k = m.class_names.size();
  for (std::size_t ci = 0; ci < k; ++ci) {
    std::vector<int> idx;
    for (std::size_t i = 0; i < m.entries.size(); ++i)
      if (m.entries[i].class_index == static_cast<int>(ci)) idx.push_back(static_cast<int>(i));
    Rng rng(mix_seed(seed, ci, 0x5b17ULL));
    shuffle(idx, rng);

    const auto n = static_cast<std::int64_t>(idx.size());
    const auto n_val = static_cast<std::int64_t>(std::floor(ratios[1] * static_cast<double>(n) + 1e-9));
    const auto n_test = static_cast<std::int64_t>(std::floor(ratios[2] * static_cast<double>(n) + 1e-9));
    if ((ratios[1] > 0 && n_val == 0) || (ratios[2] > 0 && n_test == 0))
      std::cerr << "warning: class '" << m.class_names[ci]
                << "' is too small for a non-empty val/test split\n";
    for (std::int64_t i = 0; i < n; ++i) {
      Split s = Split::train;
      if (i < n_val)
        s = Split::val;
      else if (i < n_val + n_test)
        s = Split::test;
      m.entries[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])].split = s;
    }
  }
  return m;
}

Tensor preprocess(const RawImage& img) {
  return resize_bilinear(image_to_tensor(img), kImageSide, kImageSide);
}

namespace {

void hflip_inplace(Tensor& t) {
  const int h = t.extent(0), w = t.extent(1), c = t.extent(2);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w / 2; ++x)
      for (int cc = 0; cc < c; ++cc)
        std::swap(t.at(y, x, cc), t.at(y, w - 1 - x, cc));
}

float sample_clamped(const Tensor& t, double fy, double fx, int cc) {
  const int h = t.extent(0), w = t.extent(1);
  fy = std::min(std::max(fy, 0.0), static_cast<double>(h - 1));
  fx = std::min(std::max(fx, 0.0), static_cast<double>(w - 1));
  const int y0 = static_cast<int>(fy), x0 = static_cast<int>(fx);
  const int y1 = std::min(y0 + 1, h - 1), x1 = std::min(x0 + 1, w - 1);
  const float ty = static_cast<float>(fy - y0), tx = static_cast<float>(fx - x0);
  const float v00 = t.at(y0, x0, cc), v01 = t.at(y0, x1, cc);
  const float v10 = t.at(y1, x0, cc), v11 = t.at(y1, x1, cc);
  const float top = v00 + tx * (v01 - v00);
  const float bot = v10 + tx * (v11 - v10);
  return top + ty * (bot - top);
}

Tensor rotate_bilinear(const Tensor& t, double degrees) {
  const int h = t.extent(0), w = t.extent(1), c = t.extent(2);
  const double rad = degrees * 3.14159265358979323846 / 180.0;
  const double cs = std::cos(rad), sn = std::sin(rad);
  const double cy = (h - 1) / 2.0, cx = (w - 1) / 2.0;
  Tensor out({h, w, c});
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double dy = y - cy, dx = x - cx;
      const double sy = cy + dy * cs - dx * sn;
      const double sx = cx + dy * sn + dx * cs;
      for (int cc = 0; cc < c; ++cc) out.at(y, x, cc) = sample_clamped(t, sy, sx, cc);
    }
  }
  return out;
}

Tensor center_crop_resize(const Tensor& t, double frac) {
  const int h = t.extent(0), w = t.extent(1), c = t.extent(2);
  const double side_h = frac * h, side_w = frac * w;
  const double y0 = (h - side_h) / 2.0, x0 = (w - side_w) / 2.0;
  const double sy = side_h / h, sx = side_w / w;
  Tensor out({h, w, c});
  for (int y = 0; y < h; ++y) {
    const double fy = y0 + (y + 0.5) * sy - 0.5;
    for (int x = 0; x < w; ++x) {
      const double fx = x0 + (x + 0.5) * sx - 0.5;
      for (int cc = 0; cc < c; ++cc) out.at(y, x, cc) = sample_clamped(t, fy, fx, cc);
    }
  }
  return out;
}

} // namespace

Tensor augment(const Tensor& img, const AugmentConfig& cfg, Rng& rng) {
  if (!cfg.enabled) return img;
  Tensor out = img;
  // fixed draw order: flip, angle, crop fraction
  const bool flip = rng.u01() < cfg.hflip_prob;
  const double angle = rng.uniform(-cfg.rotation_max_deg, cfg.rotation_max_deg);
  const double frac = 1.0 - rng.u01() * (1.0 - cfg.center_crop_min_frac); // (min_frac, 1]
  if (flip) hflip_inplace(out);
  if (angle != 0.0) out = rotate_bilinear(out, angle);
  if (frac != 1.0) out = center_crop_resize(out, frac);
  return out;
}

BatchStream::BatchStream(const DatasetManifest& m, Split split, Options opt)
    : manifest_(&m), split_(split), opt_(opt) {
  if (opt_.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  order_ = m.split_indices(split);
  if (opt_.shuffle) {
    Rng rng(mix_seed(opt_.shuffle_seed, static_cast<std::uint64_t>(opt_.epoch), 0xba7cULL));
    shuffle(order_, rng);
  }
}

bool BatchStream::next(Batch& out) {
  if (pos_ >= order_.size()) return false;
  const int n = static_cast<int>(
      std::min<std::size_t>(static_cast<std::size_t>(opt_.batch_size), order_.size() - pos_));
  out.images = Tensor({n, kImageSide, kImageSide, 3});
  out.labels.assign(static_cast<std::size_t>(n), 0);
  const bool do_augment =
      split_ == Split::train && opt_.augment.has_value() && opt_.augment->enabled;

  const std::int64_t img_elems = static_cast<std::int64_t>(kImageSide) * kImageSide * 3;
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    const int entry_idx = order_[pos_ + static_cast<std::size_t>(i)];
    const auto& e = manifest_->entries[static_cast<std::size_t>(entry_idx)];
    Tensor img = preprocess(load_image(manifest_->root + "/" + e.rel_path));
    if (do_augment) {
      Rng arng(mix_seed(opt_.shuffle_seed ^ 0xa06e57ULL, static_cast<std::uint64_t>(opt_.epoch),
                        static_cast<std::uint64_t>(entry_idx)));
      img = augment(img, *opt_.augment, arng);
    }
    std::copy(img.data(), img.data() + img_elems, out.images.data() + i * img_elems);
    out.labels[static_cast<std::size_t>(i)] = e.class_index;
  }
  pos_ += static_cast<std::size_t>(n);
  return true;
}

void export_manifest(const DatasetManifest& m, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  nlohmann::json header;
  header["class_names"] = m.class_names;
  header["seed"] = m.split_seed;
  header["root"] = m.root;
  out << header.dump() << "\n";
  for (const auto& e : m.entries) {
    nlohmann::json rec;
    rec["path"] = e.rel_path;
    rec["class"] = e.class_index;
    rec["split"] = split_name(e.split);
    out << rec.dump() << "\n";
  }
  if (!out) throw IoError("short write to '" + path + "'");
}

DatasetManifest import_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  DatasetManifest m;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception&) {
      throw IngestError("manifest '" + path + "' has a malformed JSON line");
    }
    if (header) {
      m.class_names = j.at("class_names").get<std::vector<std::string>>();
      m.split_seed = j.at("seed").get<std::uint64_t>();
      m.root = j.value("root", std::string{});
      header = false;
    } else {
      ManifestEntry e;
      e.rel_path = j.at("path").get<std::string>();
      e.class_index = j.at("class").get<int>();
      e.split = split_from_name(j.at("split").get<std::string>());
      if (e.class_index < 0 || e.class_index >= static_cast<int>(m.class_names.size()))
        throw IngestError("manifest entry class index out of range");
      m.entries.push_back(std::move(e));
    }
  }
  if (header) throw IngestError("manifest '" + path + "' is empty");
  return m;
}

} // namespace binlite
