#pragma once

#include <cstdint>
#include <vector>

namespace bicl {

using Point = std::vector<double>;

struct Clustering {
  int k = 0;
  std::vector<int> assignment;          // point index -> cluster id in [0, k)
  std::vector<Point> centroids;         // raw means of the assigned points
  double inertia = 0.0;                 // sum of squared distances to assigned centroid
};

/// Lloyd iterations from k-means++ seeding, best of `restarts` seeded runs by
/// inertia (ties to the lowest restart index). Empty clusters are repaired by
/// adopting the point currently farthest from its centroid. Deterministic
/// given seed. `inertia_trace`, when given, records the inertia after every
/// Lloyd iteration of every restart (non-increasing within a restart).
Clustering kmeans(const std::vector<Point>& points, int k, std::uint64_t seed, int restarts = 8,
                  int max_iterations = 100, std::vector<std::vector<double>>* inertia_trace = nullptr);

struct Matching {
  std::vector<int> row_to_col;  // permutation
  double cost = 0.0;
};

/// Minimum-cost perfect matching on a square cost matrix, deterministic
/// tie-break by lexicographically smallest permutation.
Matching hungarian(const std::vector<std::vector<double>>& cost);

/// Elbow rule on the k-means inertia curve: the k in [2, k_max-1] with the
/// largest second difference. k_max < 3 (or an already-perfect single
/// cluster) falls back to k = 1.
int elbow_k(const std::vector<Point>& points, int k_max, std::uint64_t seed);

/// Exposed for direct testing of the knee rule; inertias[i] is the inertia
/// for k = i+1.
int elbow_from_inertias(const std::vector<double>& inertias);

/// k in [2, k_max] maximizing the mean silhouette coefficient (Euclidean
/// distance, singleton clusters contribute 0); ties to the smallest k.
int silhouette_k(const std::vector<Point>& points, int k_max, std::uint64_t seed);

/// Mean silhouette coefficient of one clustering.
double mean_silhouette(const std::vector<Point>& points, const std::vector<int>& assignment, int k);

double squared_distance(const Point& a, const Point& b);
double euclidean_distance(const Point& a, const Point& b);

}  // namespace bicl
