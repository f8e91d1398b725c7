#include "difflab/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "difflab/parallel.hpp"
#include "difflab/rng.hpp"

namespace difflab {
namespace {

double sq_dist(std::span<const double> a, const double* b, int d) {
  double s = 0.0;
  for (int j = 0; j < d; ++j) {
    const double diff = a[static_cast<std::size_t>(j)] - b[j];
    s += diff * diff;
  }
  return s;
}

std::vector<int> assign_all(const Tensor& points, const BinModel& bins, int threads) {
  const int n = points.shape()[0];
  std::vector<int> assign(static_cast<std::size_t>(n));
  const int d = points.shape()[1];
  auto pv = points.values();
  parallel_chunks(n, threads, 1024, [&](std::int64_t b, std::int64_t e, std::size_t) {
    for (std::int64_t i = b; i < e; ++i) {
      assign[static_cast<std::size_t>(i)] =
          nearest_centroid(bins, pv.subspan(static_cast<std::size_t>(i) * d, d));
    }
  });
  return assign;
}

}  // namespace

int nearest_centroid(const BinModel& bins, std::span<const double> x) {
  const int k = bins.bins();
  const int d = bins.centroids.shape()[1];
  auto cv = bins.centroids.values();
  int best = 0;
  double best_d = sq_dist(x, &cv[0], d);
  for (int c = 1; c < k; ++c) {
    const double dist = sq_dist(x, &cv[static_cast<std::size_t>(c) * d], d);
    if (dist < best_d) {
      best_d = dist;
      best = c;
    }
  }
  return best;
}

BinModel fit_bins(const Tensor& train, int k, std::uint64_t seed, int threads) {
  if (train.rank() != 2) throw DimError("fit_bins: training set must be [n, d]");
  const int n = train.shape()[0];
  const int d = train.shape()[1];
  if (k < 2) throw ConfigError("fit_bins: need at least 2 bins");
  if (n < k) throw ConfigError("fit_bins: fewer samples than bins");
  auto tv = train.values();
  Rng rng(seed);

  // k-means++ seeding.
  std::vector<double> centroids(static_cast<std::size_t>(k) * d);
  std::vector<double> min_d2(static_cast<std::size_t>(n), 0.0);
  {
    const int first = rng.uniform_int(0, n - 1);
    std::copy_n(&tv[static_cast<std::size_t>(first) * d], d, centroids.begin());
    for (int i = 0; i < n; ++i) {
      min_d2[static_cast<std::size_t>(i)] =
          sq_dist(tv.subspan(static_cast<std::size_t>(i) * d, d), &centroids[0], d);
    }
    for (int c = 1; c < k; ++c) {
      double total = 0.0;
      for (double v : min_d2) total += v;
      int pick = 0;
      if (total > 0.0) {
        const double r = rng.uniform() * total;
        double acc = 0.0;
        pick = n - 1;
        for (int i = 0; i < n; ++i) {
          acc += min_d2[static_cast<std::size_t>(i)];
          if (acc >= r) {
            pick = i;
            break;
          }
        }
      } else {
        pick = rng.uniform_int(0, n - 1);
      }
      double* cc = &centroids[static_cast<std::size_t>(c) * d];
      std::copy_n(&tv[static_cast<std::size_t>(pick) * d], d, cc);
      for (int i = 0; i < n; ++i) {
        const double dist = sq_dist(tv.subspan(static_cast<std::size_t>(i) * d, d), cc, d);
        min_d2[static_cast<std::size_t>(i)] =
            std::min(min_d2[static_cast<std::size_t>(i)], dist);
      }
    }
  }

  BinModel model;
  model.train_count = n;
  std::vector<int> assign(static_cast<std::size_t>(n), 0);
  std::vector<std::int64_t> counts(static_cast<std::size_t>(k), 0);
  for (int iter = 0; iter < 100; ++iter) {
    model.centroids = Tensor({k, d}, centroids);
    assign = assign_all(train, model, threads);
    std::vector<double> sums(static_cast<std::size_t>(k) * d, 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (int i = 0; i < n; ++i) {
      const int c = assign[static_cast<std::size_t>(i)];
      counts[static_cast<std::size_t>(c)] += 1;
      for (int j = 0; j < d; ++j) {
        sums[static_cast<std::size_t>(c) * d + j] += tv[static_cast<std::size_t>(i) * d + j];
      }
    }
    // Empty clusters restart from the farthest point.
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) continue;
      int far = 0;
      double far_d = -1.0;
      for (int i = 0; i < n; ++i) {
        const int a = assign[static_cast<std::size_t>(i)];
        const double dist = sq_dist(tv.subspan(static_cast<std::size_t>(i) * d, d),
                                    &centroids[static_cast<std::size_t>(a) * d], d);
        if (dist > far_d) {
          far_d = dist;
          far = i;
        }
      }
      std::copy_n(&tv[static_cast<std::size_t>(far) * d], d,
                  &sums[static_cast<std::size_t>(c) * d]);
      counts[static_cast<std::size_t>(c)] = 1;
    }
    double shift = 0.0;
    for (int c = 0; c < k; ++c) {
      for (int j = 0; j < d; ++j) {
        const double next =
            sums[static_cast<std::size_t>(c) * d + j] / counts[static_cast<std::size_t>(c)];
        shift = std::max(shift, std::abs(next - centroids[static_cast<std::size_t>(c) * d + j]));
        centroids[static_cast<std::size_t>(c) * d + j] = next;
      }
    }
    if (shift < 1e-6) break;
  }
  model.centroids = Tensor({k, d}, centroids);
  assign = assign_all(train, model, threads);
  std::fill(counts.begin(), counts.end(), 0);
  for (int i = 0; i < n; ++i) counts[static_cast<std::size_t>(assign[static_cast<std::size_t>(i)])]++;
  model.train_proportions.resize(static_cast<std::size_t>(k));
  for (int c = 0; c < k; ++c) {
    model.train_proportions[static_cast<std::size_t>(c)] =
        static_cast<double>(counts[static_cast<std::size_t>(c)]) / n;
  }
  return model;
}

double js_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw DimError("js_divergence: histogram sizes differ");
  auto kl_to_mid = [&](std::span<const double> a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i] <= 0.0) continue;
      const double m = 0.5 * (p[i] + q[i]);
      s += a[i] * std::log(a[i] / m);
    }
    return s;
  };
  return 0.5 * (kl_to_mid(p) + kl_to_mid(q));
}

MetricsReport ndb_js(const BinModel& bins, const Tensor& generated, double alpha, int threads) {
  if (generated.rank() != 2 || generated.shape()[1] != bins.centroids.shape()[1]) {
    throw DimError("ndb_js: generated samples must be [n, d] with the bin dimension");
  }
  const int n_gen = generated.shape()[0];
  if (n_gen < 1) throw std::invalid_argument("ndb_js: need at least one generated sample");
  const int k = bins.bins();
  const auto assign = assign_all(generated, bins, threads);
  std::vector<double> p_gen(static_cast<std::size_t>(k), 0.0);
  for (int a : assign) p_gen[static_cast<std::size_t>(a)] += 1.0;
  for (auto& v : p_gen) v /= n_gen;

  MetricsReport report;
  report.bins.resize(static_cast<std::size_t>(k));
  const double n1 = static_cast<double>(bins.train_count);
  const double n2 = static_cast<double>(n_gen);
  for (int c = 0; c < k; ++c) {
    BinStat& st = report.bins[static_cast<std::size_t>(c)];
    st.p_train = bins.train_proportions[static_cast<std::size_t>(c)];
    st.p_gen = p_gen[static_cast<std::size_t>(c)];
    const double pooled = (st.p_train * n1 + st.p_gen * n2) / (n1 + n2);
    const double se = std::sqrt(pooled * (1.0 - pooled) * (1.0 / n1 + 1.0 / n2));
    st.z = se > 0.0 ? (st.p_train - st.p_gen) / se : 0.0;
    const double p_value = std::erfc(std::abs(st.z) / std::sqrt(2.0));
    st.significant = p_value < alpha;
    if (st.significant) report.ndb += 1;
  }
  report.ndb_fraction = static_cast<double>(report.ndb) / k;
  report.js = js_divergence(bins.train_proportions, p_gen);
  return report;
}

double energy_distance(const Tensor& a, const Tensor& b, int threads) {
  if (a.rank() != 2 || b.rank() != 2 || a.shape()[1] != b.shape()[1]) {
    throw DimError("energy_distance: sample sets must be [n, d] with matching d");
  }
  const int na = a.shape()[0];
  const int nb = b.shape()[0];
  if (na < 1 || nb < 1) throw std::invalid_argument("energy_distance: empty sample set");
  const int d = a.shape()[1];
  auto av = a.values();
  auto bv = b.values();

  auto pair_sum = [&](std::span<const double> xs, int nx, std::span<const double> ys, int ny) {
    // Partial sums per fixed chunk, combined in chunk order: bit-identical
    // for any thread count.
    const std::int64_t chunk = 256;
    const std::size_t n_chunks = static_cast<std::size_t>((nx + chunk - 1) / chunk);
    std::vector<double> partial(n_chunks, 0.0);
    parallel_chunks(nx, threads, chunk, [&](std::int64_t lo, std::int64_t hi, std::size_t ci) {
      double acc = 0.0;
      for (std::int64_t i = lo; i < hi; ++i) {
        const double* xi = &xs[static_cast<std::size_t>(i) * d];
        for (int j = 0; j < ny; ++j) {
          const double* yj = &ys[static_cast<std::size_t>(j) * d];
          double s = 0.0;
          for (int c = 0; c < d; ++c) {
            const double diff = xi[c] - yj[c];
            s += diff * diff;
          }
          acc += std::sqrt(s);
        }
      }
      partial[ci] = acc;
    });
    double total = 0.0;
    for (double v : partial) total += v;
    return total / (static_cast<double>(nx) * static_cast<double>(ny));
  };

  const double cross = pair_sum(av, na, bv, nb);
  const double within_a = pair_sum(av, na, av, na);
  const double within_b = pair_sum(bv, nb, bv, nb);
  return 2.0 * cross - within_a - within_b;
}

MetricsReport evaluate_samples(const Tensor& train, const Tensor& generated, int k, double alpha,
                               std::uint64_t kmeans_seed, int threads) {
  BinModel bins = fit_bins(train, k, kmeans_seed, threads);
  MetricsReport report = ndb_js(bins, generated, alpha, threads);
  report.energy_distance = energy_distance(train, generated, threads);
  return report;
}

}  // namespace difflab
