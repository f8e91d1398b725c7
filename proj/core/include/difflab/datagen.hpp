#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "difflab/tensor.hpp"

namespace difflab {

enum class DatasetKind { GaussianMixture2d, ToySpectrogram };

std::string to_string(DatasetKind k);
DatasetKind dataset_kind_from_string(const std::string& s);

struct DatasetSpec {
  DatasetKind kind = DatasetKind::GaussianMixture2d;
  int count = 8192;
  std::uint64_t seed = 1;
  // gaussian-mixture-2d
  int modes = 8;
  double radius = 2.0;
  double noise_std = 0.05;
  // toy-spectrogram
  int image_height = 12;
  int image_width = 12;
  int harmonics = 3;
  double image_noise = 0.02;
};

// Synthetic samples as rows of [n, d]. For images d = height * width, pixel
// values in [0, 1]; training shifts them into model space itself.
// `labels` holds the mixture mode index or the fundamental row.
struct Dataset {
  Tensor samples;
  std::vector<int> labels;
  int image_height = 0;
  int image_width = 0;

  bool is_image() const { return image_height > 0; }
  int dim() const { return samples.defined() ? samples.shape()[1] : 0; }
  int count() const { return samples.defined() ? samples.shape()[0] : 0; }
};

// Modes equally spaced on a circle, isotropic Gaussian noise per sample.
Dataset gen_mixture(const DatasetSpec& spec);

// Horizontal harmonic bands from a uniformly drawn fundamental row with
// geometric intensity decay, plus low-amplitude noise, min-max normalized
// per image.
Dataset gen_toy_spectrogram(const DatasetSpec& spec);

Dataset generate(const DatasetSpec& spec);

// Same spec, disjoint stream: the seed is replaced by a role-keyed
// substream, so train/eval splits never overlap.
Dataset generate_split(const DatasetSpec& spec, std::string_view role);

// Exact mode centers of the mixture (row per mode).
std::vector<std::vector<double>> mode_centers(const DatasetSpec& spec);

// Label conditioning: how many one-hot classes a dataset's labels span and
// the label value of class 0.
int condition_classes(const DatasetSpec& spec);
int condition_label_offset(const DatasetSpec& spec);
Tensor one_hot_labels(std::span<const int> labels, int n_classes, int label_offset = 0);

// Materialization: points as CSV, images as raw little-endian doubles with a
// JSON sidecar describing the shape.
void save_points_csv(const Dataset& data, const std::string& path);
void save_images_raw(const Dataset& data, const std::string& path_prefix);

}  // namespace difflab
