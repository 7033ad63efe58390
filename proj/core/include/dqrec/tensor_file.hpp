#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

namespace dqrec::io {

// Self-describing binary tensor container used for every checkpoint.
//
// Layout (little-endian):
//   bytes 0..3   magic "DQV1"
//   u64          tensor count
//   per tensor:  u32 name length, name bytes,
//                u32 rank, rank x u64 dims,
//                prod(dims) x f64 values, row-major
//
// Scalars are rank-0 tensors with a single value. Entry order is the
// insertion order, so identical writes produce identical bytes.
class TensorFile {
 public:
  void put(const std::string& name, const Eigen::MatrixXd& value);
  void put(const std::string& name, const Eigen::VectorXd& value);
  void put_scalar(const std::string& name, double value);

  bool contains(const std::string& name) const;
  std::vector<std::string> names() const;

  Eigen::MatrixXd matrix(const std::string& name) const;
  Eigen::VectorXd vector(const std::string& name) const;
  double scalar(const std::string& name) const;
  std::int64_t scalar_int(const std::string& name) const;

  void save(const std::filesystem::path& path) const;
  static TensorFile load(const std::filesystem::path& path);

 private:
  struct Entry {
    std::string name;
    std::vector<std::uint64_t> dims;
    std::vector<double> values;  // row-major
  };

  const Entry& entry(const std::string& name) const;
  void insert(Entry entry);

  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace dqrec::io
