#include "bicl/embedding.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "bicl/errors.hpp"
#include "bicl/rng.hpp"

namespace bicl {

EmbeddingTable::EmbeddingTable(int dimension, std::uint64_t fallback_seed)
    : dimension_(dimension), fallback_seed_(fallback_seed) {
  if (dimension < 1) throw std::invalid_argument("embedding dimension must be positive");
}

EmbeddingTable EmbeddingTable::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open embeddings file '" + path + "'");

  EmbeddingTable table;
  table.dimension_ = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream iss(line);
    std::string word;
    iss >> word;
    std::vector<double> vec;
    double v;
    while (iss >> v) vec.push_back(v);
    if (word.empty() || vec.empty())
      throw DataError(path + ":" + std::to_string(line_no) + ": expected 'word v1 v2 ...'");
    if (table.dimension_ == 0) {
      table.dimension_ = static_cast<int>(vec.size());
    } else if (static_cast<int>(vec.size()) != table.dimension_) {
      throw DataError(path + ":" + std::to_string(line_no) + ": vector for '" + word + "' has " +
                      std::to_string(vec.size()) + " components, expected " + std::to_string(table.dimension_));
    }
    for (double x : vec) {
      if (!std::isfinite(x))
        throw DataError(path + ":" + std::to_string(line_no) + ": non-finite component for '" + word + "'");
    }
    table.vectors_[word] = std::move(vec);
  }
  if (table.dimension_ == 0) throw DataError("embeddings file '" + path + "' is empty");
  return table;
}

std::vector<double> EmbeddingTable::lookup(const std::string& word) const {
  auto it = vectors_.find(word);
  if (it != vectors_.end()) return it->second;
  std::mt19937_64 rng(hash_combine(fallback_seed_, fnv1a(word)));
  std::vector<double> vec(static_cast<std::size_t>(dimension_));
  for (double& v : vec) v = uniform_real(rng, -0.1, 0.1);
  return vec;
}

void EmbeddingTable::insert(const std::string& word, std::vector<double> vec) {
  if (static_cast<int>(vec.size()) != dimension_)
    throw std::invalid_argument("embedding for '" + word + "' has " + std::to_string(vec.size()) +
                                " components, table dimension is " + std::to_string(dimension_));
  vectors_[word] = std::move(vec);
}

void EmbeddingTable::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open embeddings file '" + path + "' for writing");
  char buf[32];
  for (const auto& [word, vec] : vectors_) {
    out << word;
    for (double v : vec) {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      out << ' ' << buf;
    }
    out << '\n';
  }
  if (!out) throw DataError("failed while writing embeddings file '" + path + "'");
}

}  // namespace bicl
