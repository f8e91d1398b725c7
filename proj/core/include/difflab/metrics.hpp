#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "difflab/tensor.hpp"

namespace difflab {

// K-means binning of the training data, the reference against which
// generated samples are histogrammed.
struct BinModel {
  Tensor centroids;  // [k, d]
  std::vector<double> train_proportions;
  std::int64_t train_count = 0;

  int bins() const { return centroids.defined() ? centroids.shape()[0] : 0; }
};

// k-means++ seeding, Lloyd iterations capped at 100, convergence tolerance
// 1e-6 on centroid movement. An emptied cluster is reseeded from the point
// farthest from its assigned centroid.
BinModel fit_bins(const Tensor& train, int k, std::uint64_t seed, int threads = 1);

int nearest_centroid(const BinModel& bins, std::span<const double> x);

struct BinStat {
  double p_train = 0.0;
  double p_gen = 0.0;
  double z = 0.0;
  bool significant = false;
};

struct MetricsReport {
  int ndb = 0;
  double ndb_fraction = 0.0;
  double js = 0.0;
  double energy_distance = 0.0;  // filled by evaluate_samples
  std::vector<BinStat> bins;
};

// Assigns each generated sample to its nearest centroid, runs a pooled
// two-proportion z-test per bin at level `alpha`, and computes the
// Jensen-Shannon divergence (natural log) between the two histograms.
MetricsReport ndb_js(const BinModel& bins, const Tensor& generated, double alpha = 0.05,
                     int threads = 1);

// JS divergence between two histograms that each sum to 1; natural log,
// bounded by ln 2.
double js_divergence(std::span<const double> p, std::span<const double> q);

// Energy distance 2 E|A-B| - E|A-A'| - E|B-B'| over all ordered pairs
// (V-statistic), so identical multisets give exactly 0.
double energy_distance(const Tensor& a, const Tensor& b, int threads = 1);

// fit_bins + ndb_js + energy distance against the reference set.
MetricsReport evaluate_samples(const Tensor& train, const Tensor& generated, int k, double alpha,
                               std::uint64_t kmeans_seed, int threads = 1);

}  // namespace difflab
