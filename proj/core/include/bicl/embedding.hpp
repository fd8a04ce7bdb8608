#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace bicl {

/// Word-vector table in the standard pretrained text format: one word per
/// line followed by `dimension` reals. Out-of-vocabulary words map to a
/// deterministic hash-seeded vector with components uniform in [-0.1, 0.1],
/// so a table is usable (and reproducible) without any file at all.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(int dimension, std::uint64_t fallback_seed);

  static EmbeddingTable load(const std::string& path);
  static EmbeddingTable fallback_only(int dimension, std::uint64_t fallback_seed) {
    return EmbeddingTable(dimension, fallback_seed);
  }

  int dimension() const { return dimension_; }
  std::uint64_t fallback_seed() const { return fallback_seed_; }
  std::size_t vocabulary_size() const { return vectors_.size(); }
  bool contains(const std::string& word) const { return vectors_.count(word) > 0; }

  /// Vector for `word`; OOV words get the deterministic fallback.
  std::vector<double> lookup(const std::string& word) const;

  void insert(const std::string& word, std::vector<double> vec);
  const std::map<std::string, std::vector<double>>& vectors() const { return vectors_; }

  /// Writes the table in the same text format load() reads; values round-trip
  /// exactly.
  void save(const std::string& path) const;

 private:
  int dimension_ = 300;
  std::uint64_t fallback_seed_ = 0;
  std::map<std::string, std::vector<double>> vectors_;
};

}  // namespace bicl
