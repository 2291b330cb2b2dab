#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "wisdomnet/rng.hpp"
#include "wisdomnet/tensor.hpp"

namespace wisdomnet {

enum class ClassTag { Covid, Healthy, Bacterial, Viral, Ards, NonArds };

std::string_view to_string(ClassTag tag);
ClassTag parse_class_tag(std::string_view text);

/// Label conventions: COVID task 0 = positive, 1 = negative; ARDS task
/// 0 = non-ARDS, 1 = ARDS.
inline constexpr int kLabelPositive = 0;
inline constexpr int kLabelNegative = 1;
inline constexpr int kLabelNonArds = 0;
inline constexpr int kLabelArds = 1;

std::array<float, 2> one_hot(int label);

struct Sample {
  Tensor<float> image;  // side x side x 3, values in [0, 1]
  std::array<float, 2> label{1.0f, 0.0f};
  ClassTag tag = ClassTag::Healthy;
  std::string source_id;

  int label_index() const { return label[1] > label[0] ? 1 : 0; }
};

struct SplitInfo {
  double train_fraction = 1.0;
  double test_fraction = 0.0;
};

struct Dataset {
  std::vector<Sample> samples;
  SplitInfo split;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  std::map<ClassTag, std::size_t> class_counts() const;
};

/// Decoded raster before resizing: row-major H x W x channels in [0, 1].
struct RawImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 0;  // 1 or 3
  std::vector<float> pixels;
};

/// Portable bitmap/graymap/pixmap (P1..P6, 8 or 16 bit).
RawImage decode_pnm(std::span<const std::uint8_t> bytes, const std::string& origin = "<memory>");
RawImage decode_png(const std::filesystem::path& path);
RawImage decode_image(const std::filesystem::path& path);

/// Bilinear resize with half-pixel centres and edge clamping; grayscale is
/// replicated into three channels.
Tensor<float> resize_bilinear(const RawImage& image, std::size_t target_side);

Tensor<float> load_image(const std::filesystem::path& path, std::size_t target_side);

/// Writes channel 0 as an 8-bit binary graymap.
void write_pgm(const std::filesystem::path& path, const Tensor<float>& image);

/// 40% healthy / 30% bacterial / 30% viral with largest-remainder rounding.
std::array<std::size_t, 3> negative_class_counts(std::size_t total);
std::vector<Sample> compose_negative_class(const std::vector<Sample>& healthy,
                                           const std::vector<Sample>& bacterial,
                                           const std::vector<Sample>& viral, std::size_t total,
                                           Rng& rng);

/// Stratified by class tag, seeded, disjoint and exhaustive. Samples keep
/// their dataset order inside each part.
std::pair<Dataset, Dataset> split_dataset(const Dataset& dataset, double train_fraction,
                                          std::uint64_t seed);

/// COVID layer view: covid and ards images are positive, everything else negative.
Dataset covid_task(const Dataset& dataset);
/// ARDS layer view over the COVID-positive images: ards vs non-ARDS (mild covid).
Dataset ards_task(const Dataset& dataset);

struct SyntheticSpec {
  std::map<ClassTag, std::size_t> counts;
  std::size_t input_side = 32;
  double noise = 0.0;  // 0 = perfectly separable by mean brightness
};

/// Radiograph-like images: darker lung fields in a brighter body, with bright
/// infiltrate patches (denser for ards), lobar consolidation for bacterial and
/// faint diffuse patches for viral.
Dataset generate_synthetic_corpus(const SyntheticSpec& spec, std::uint64_t seed);

struct ManifestRecord {
  std::string path;  // relative to the manifest directory unless absolute
  int label = 0;
  ClassTag tag = ClassTag::Healthy;
  std::string split;  // "train", "test" or ""
};

std::vector<ManifestRecord> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const std::vector<ManifestRecord>& records);

/// Loads every record (optionally only one split) resized to `input_side`.
Dataset load_manifest_dataset(const std::filesystem::path& manifest, std::size_t input_side,
                              std::optional<std::string> split = std::nullopt);

/// Writes images as graymaps plus a manifest with split assignments.
void write_corpus(const Dataset& train, const Dataset& test, const std::filesystem::path& dir);

}  // namespace wisdomnet
