#include "dqrec/tensor_file.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace dqrec::io {

namespace {

constexpr char kMagic[4] = {'D', 'Q', 'V', '1'};

template <typename T>
void write_raw(std::ofstream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_raw(std::ifstream& in, const std::string& what) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw std::runtime_error("tensor file truncated while reading " + what);
  return value;
}

}  // namespace

void TensorFile::insert(Entry entry) {
  auto it = index_.find(entry.name);
  if (it != index_.end()) {
    entries_[it->second] = std::move(entry);
    return;
  }
  index_.emplace(entry.name, entries_.size());
  entries_.push_back(std::move(entry));
}

void TensorFile::put(const std::string& name, const Eigen::MatrixXd& value) {
  Entry e;
  e.name = name;
  e.dims = {static_cast<std::uint64_t>(value.rows()), static_cast<std::uint64_t>(value.cols())};
  e.values.resize(static_cast<std::size_t>(value.size()));
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < value.rows(); ++r)
    for (Eigen::Index c = 0; c < value.cols(); ++c) e.values[k++] = value(r, c);
  insert(std::move(e));
}

void TensorFile::put(const std::string& name, const Eigen::VectorXd& value) {
  Entry e;
  e.name = name;
  e.dims = {static_cast<std::uint64_t>(value.size())};
  e.values.assign(value.data(), value.data() + value.size());
  insert(std::move(e));
}

void TensorFile::put_scalar(const std::string& name, double value) {
  Entry e;
  e.name = name;
  e.values = {value};
  insert(std::move(e));
}

bool TensorFile::contains(const std::string& name) const {
  return index_.count(name) != 0;
}

std::vector<std::string> TensorFile::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.name);
  return out;
}

const TensorFile::Entry& TensorFile::entry(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::runtime_error("tensor not found: " + name);
  return entries_[it->second];
}

Eigen::MatrixXd TensorFile::matrix(const std::string& name) const {
  const Entry& e = entry(name);
  if (e.dims.size() != 2) throw std::runtime_error("tensor '" + name + "' is not rank 2");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(e.dims[0]), static_cast<Eigen::Index>(e.dims[1]));
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = e.values[k++];
  return m;
}

Eigen::VectorXd TensorFile::vector(const std::string& name) const {
  const Entry& e = entry(name);
  if (e.dims.size() != 1) throw std::runtime_error("tensor '" + name + "' is not rank 1");
  return Eigen::Map<const Eigen::VectorXd>(e.values.data(),
                                           static_cast<Eigen::Index>(e.values.size()));
}

double TensorFile::scalar(const std::string& name) const {
  const Entry& e = entry(name);
  if (!e.dims.empty() || e.values.size() != 1) {
    throw std::runtime_error("tensor '" + name + "' is not a scalar");
  }
  return e.values[0];
}

std::int64_t TensorFile::scalar_int(const std::string& name) const {
  const double v = scalar(name);
  const auto i = static_cast<std::int64_t>(v);
  if (static_cast<double>(i) != v) {
    throw std::runtime_error("scalar '" + name + "' is not integral");
  }
  return i;
}

void TensorFile::save(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write tensor file: " + path.string());
  out.write(kMagic, 4);
  write_raw(out, static_cast<std::uint64_t>(entries_.size()));
  for (const auto& e : entries_) {
    write_raw(out, static_cast<std::uint32_t>(e.name.size()));
    out.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    write_raw(out, static_cast<std::uint32_t>(e.dims.size()));
    for (std::uint64_t d : e.dims) write_raw(out, d);
    out.write(reinterpret_cast<const char*>(e.values.data()),
              static_cast<std::streamsize>(e.values.size() * sizeof(double)));
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

TensorFile TensorFile::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open tensor file: " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw std::runtime_error("bad magic, not a DQV1 file: " + path.string());
  }
  const auto count = read_raw<std::uint64_t>(in, "tensor count");
  TensorFile file;
  for (std::uint64_t t = 0; t < count; ++t) {
    Entry e;
    const auto name_len = read_raw<std::uint32_t>(in, "name length");
    e.name.resize(name_len);
    in.read(e.name.data(), name_len);
    if (!in) throw std::runtime_error("tensor file truncated while reading name");
    const auto rank = read_raw<std::uint32_t>(in, "rank");
    std::uint64_t total = 1;
    e.dims.resize(rank);
    for (std::uint32_t r = 0; r < rank; ++r) {
      e.dims[r] = read_raw<std::uint64_t>(in, "dim");
      total *= e.dims[r];
    }
    e.values.resize(total);
    in.read(reinterpret_cast<char*>(e.values.data()),
            static_cast<std::streamsize>(total * sizeof(double)));
    if (!in) throw std::runtime_error("tensor file truncated while reading values of " + e.name);
    file.insert(std::move(e));
  }
  return file;
}

}  // namespace dqrec::io
