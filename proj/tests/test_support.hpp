#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "stabclust/cluster.hpp"
#include "stabclust/feature_matrix.hpp"

namespace testsup {

using stabclust::FeatureMatrix;
using stabclust::MaskedMatrix;
using stabclust::Matrix;

inline FeatureMatrix make_fm(const Matrix& values, const std::string& label = "toy") {
  FeatureMatrix fm;
  fm.values = values;
  fm.label = label;
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    fm.ids.push_back("r" + std::to_string(i));
  }
  for (Eigen::Index c = 0; c < values.cols(); ++c) {
    fm.column_names.push_back("c" + std::to_string(c));
  }
  return fm;
}

inline MaskedMatrix make_masked(const Matrix& values,
                                const std::vector<std::pair<int, int>>& masked_cells = {}) {
  MaskedMatrix m;
  m.values = values;
  m.mask = stabclust::Mask::Constant(values.rows(), values.cols(), false);
  for (const auto& [r, c] : masked_cells) {
    m.mask(r, c) = true;
    m.values(r, c) = 0.0;
  }
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    m.ids.push_back("r" + std::to_string(i));
  }
  for (Eigen::Index c = 0; c < values.cols(); ++c) {
    m.column_names.push_back("c" + std::to_string(c));
  }
  return m;
}

// unique scratch directory, removed on destruction
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("stabclust-" + tag + "-" + std::to_string(::getpid()) + "-" +
             std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void spit(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

// test-only clustering method: labels each row by a user function of its id
class IdLabeler : public stabclust::ClusterMethod {
 public:
  using Fn = std::function<int(const std::string& id, const std::string& pipeline, int k,
                               std::uint64_t seed)>;

  IdLabeler(std::string label, Fn fn) : label_(std::move(label)), fn_(std::move(fn)) {}

  std::string label() const override { return label_; }

  stabclust::ClusterAssignment run(const FeatureMatrix& m, int k, std::uint64_t seed,
                                   stabclust::WarningLog*) const override {
    stabclust::ClusterAssignment out;
    out.k = k;
    out.ids = m.ids;
    out.method_label = label_;
    out.pipeline_label = m.label;
    for (const auto& id : m.ids) out.labels.push_back(fn_(id, m.label, k, seed));
    return out;
  }

 private:
  std::string label_;
  Fn fn_;
};

// numeric suffix of synthetic ids like "s000123" / "r42"
inline int id_index(const std::string& id) {
  std::size_t pos = 0;
  while (pos < id.size() && !std::isdigit(static_cast<unsigned char>(id[pos]))) ++pos;
  return std::stoi(id.substr(pos));
}

}  // namespace testsup
