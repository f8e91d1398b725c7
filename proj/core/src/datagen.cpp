#include "difflab/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "difflab/rng.hpp"

namespace difflab {
namespace {

constexpr double kPi = 3.14159265358979323846;

std::uint64_t role_key(std::string_view role) {
  // FNV-1a over the role name.
  std::uint64_t h = 1469598103934665603ull;
  for (char c : role) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

std::string to_string(DatasetKind k) {
  return k == DatasetKind::GaussianMixture2d ? "gaussian-mixture-2d" : "toy-spectrogram";
}

DatasetKind dataset_kind_from_string(const std::string& s) {
  if (s == "gaussian-mixture-2d") return DatasetKind::GaussianMixture2d;
  if (s == "toy-spectrogram") return DatasetKind::ToySpectrogram;
  throw ConfigError("dataset: unknown kind '" + s + "'");
}

std::vector<std::vector<double>> mode_centers(const DatasetSpec& spec) {
  std::vector<std::vector<double>> centers;
  centers.reserve(static_cast<std::size_t>(spec.modes));
  for (int m = 0; m < spec.modes; ++m) {
    const double angle = 2.0 * kPi * m / spec.modes;
    centers.push_back({spec.radius * std::cos(angle), spec.radius * std::sin(angle)});
  }
  return centers;
}

Dataset gen_mixture(const DatasetSpec& spec) {
  if (spec.count < 1) throw ConfigError("dataset: count must be >= 1");
  if (spec.modes < 1) throw ConfigError("dataset: mixture needs >= 1 mode");
  Rng rng(spec.seed);
  const auto centers = mode_centers(spec);
  Dataset d;
  d.labels.resize(static_cast<std::size_t>(spec.count));
  std::vector<double> data(static_cast<std::size_t>(spec.count) * 2);
  for (int i = 0; i < spec.count; ++i) {
    const int m = rng.uniform_int(0, spec.modes - 1);
    d.labels[static_cast<std::size_t>(i)] = m;
    data[static_cast<std::size_t>(i) * 2] = centers[static_cast<std::size_t>(m)][0] +
                                            spec.noise_std * rng.normal();
    data[static_cast<std::size_t>(i) * 2 + 1] = centers[static_cast<std::size_t>(m)][1] +
                                                spec.noise_std * rng.normal();
  }
  d.samples = Tensor({spec.count, 2}, std::move(data));
  return d;
}

Dataset gen_toy_spectrogram(const DatasetSpec& spec) {
  if (spec.count < 1) throw ConfigError("dataset: count must be >= 1");
  if (spec.image_height < 8 || spec.image_width < 8) {
    throw ConfigError("dataset: spectrogram images must be at least 8x8");
  }
  const int h = spec.image_height;
  const int w = spec.image_width;
  Rng rng(spec.seed);
  Dataset d;
  d.image_height = h;
  d.image_width = w;
  d.labels.resize(static_cast<std::size_t>(spec.count));
  std::vector<double> data(static_cast<std::size_t>(spec.count) * h * w, 0.0);

  // Fundamental rows low enough that a few harmonics fit in frame.
  const int row_lo = 1;
  const int row_hi = std::max(row_lo, h / 4);
  for (int i = 0; i < spec.count; ++i) {
    double* img = &data[static_cast<std::size_t>(i) * h * w];
    const int fundamental = rng.uniform_int(row_lo, row_hi);
    d.labels[static_cast<std::size_t>(i)] = fundamental;
    for (int k = 1; k <= spec.harmonics; ++k) {
      const int row = fundamental * k;
      if (row >= h) break;
      const double amp = std::pow(0.7, k - 1);
      // Band with a one-row Gaussian profile and a gentle horizontal ramp.
      const double tilt = 0.5 + rng.uniform();
      for (int r = 0; r < h; ++r) {
        const double profile = std::exp(-0.5 * (r - row) * (r - row));
        if (profile < 1e-6) continue;
        for (int c = 0; c < w; ++c) {
          const double envelope = 1.0 - 0.3 * std::abs(2.0 * c / (w - 1) - 1.0) * tilt;
          img[static_cast<std::size_t>(r) * w + c] += amp * profile * envelope;
        }
      }
    }
    if (spec.image_noise > 0.0) {
      for (int p = 0; p < h * w; ++p) img[p] += spec.image_noise * rng.normal();
    }
    double lo = img[0], hi = img[0];
    for (int p = 1; p < h * w; ++p) {
      lo = std::min(lo, img[p]);
      hi = std::max(hi, img[p]);
    }
    if (hi > lo) {
      for (int p = 0; p < h * w; ++p) img[p] = (img[p] - lo) / (hi - lo);
    }
  }
  d.samples = Tensor({spec.count, h * w}, std::move(data));
  return d;
}

Dataset generate(const DatasetSpec& spec) {
  return spec.kind == DatasetKind::GaussianMixture2d ? gen_mixture(spec)
                                                     : gen_toy_spectrogram(spec);
}

int condition_classes(const DatasetSpec& spec) {
  if (spec.kind == DatasetKind::GaussianMixture2d) return spec.modes;
  return std::max(1, spec.image_height / 4);  // fundamental rows 1 .. h/4
}

int condition_label_offset(const DatasetSpec& spec) {
  return spec.kind == DatasetKind::GaussianMixture2d ? 0 : 1;
}

Tensor one_hot_labels(std::span<const int> labels, int n_classes, int label_offset) {
  std::vector<double> out(labels.size() * static_cast<std::size_t>(n_classes), 0.0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int cls = labels[i] - label_offset;
    if (cls < 0 || cls >= n_classes) {
      throw DimError("one_hot_labels: label " + std::to_string(labels[i]) + " outside range");
    }
    out[i * static_cast<std::size_t>(n_classes) + static_cast<std::size_t>(cls)] = 1.0;
  }
  return Tensor({static_cast<int>(labels.size()), n_classes}, std::move(out));
}

Dataset generate_split(const DatasetSpec& spec, std::string_view role) {
  DatasetSpec sub = spec;
  sub.seed = Rng(spec.seed).stream(role_key(role)).next_u64();
  return generate(sub);
}

void save_points_csv(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("dataset: cannot write '" + path + "'");
  const int d = data.dim();
  out << "label";
  for (int j = 0; j < d; ++j) out << ",x" << j;
  out << "\n";
  char buf[32];
  for (int i = 0; i < data.count(); ++i) {
    out << data.labels[static_cast<std::size_t>(i)];
    for (int j = 0; j < d; ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", data.samples.at(i, j));
      out << ',' << buf;
    }
    out << "\n";
  }
}

void save_images_raw(const Dataset& data, const std::string& path_prefix) {
  if (!data.is_image()) throw ConfigError("dataset: not image data");
  {
    std::ofstream raw(path_prefix + ".f64", std::ios::binary);
    if (!raw) throw ConfigError("dataset: cannot write '" + path_prefix + ".f64'");
    auto v = data.samples.values();
    raw.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(double)));
  }
  std::ofstream side(path_prefix + ".json");
  if (!side) throw ConfigError("dataset: cannot write '" + path_prefix + ".json'");
  side << "{\"count\": " << data.count() << ", \"height\": " << data.image_height
       << ", \"width\": " << data.image_width << ", \"dtype\": \"float64-le\"}\n";
}

}  // namespace difflab
