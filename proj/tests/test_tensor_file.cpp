#include "dqrec/tensor_file.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace dqrec;

namespace {
std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("dqrec_test_" + name);
}
}  // namespace

TEST_CASE("tensor file round-trips matrices, vectors, and scalars") {
  io::TensorFile file;
  Eigen::MatrixXd m(2, 3);
  m << 1, 2, 3, 4, 5, 6;
  Eigen::VectorXd v(4);
  v << -1, 0.5, 2, 1e-12;
  file.put("m", m);
  file.put("v", v);
  file.put_scalar("s", 0.25);

  const auto path = temp_path("roundtrip.dqv");
  file.save(path);
  const auto loaded = io::TensorFile::load(path);

  CHECK(loaded.matrix("m") == m);
  CHECK(loaded.vector("v") == v);
  CHECK(loaded.scalar("s") == 0.25);
  CHECK(loaded.names() == std::vector<std::string>{"m", "v", "s"});
  CHECK(loaded.contains("m"));
  CHECK_FALSE(loaded.contains("missing"));
  std::filesystem::remove(path);
}

TEST_CASE("identical content writes identical bytes") {
  const auto make = [] {
    io::TensorFile file;
    Eigen::MatrixXd m = Eigen::MatrixXd::Constant(3, 3, 0.125);
    file.put("a", m);
    file.put_scalar("b", -7);
    return file;
  };
  const auto p1 = temp_path("bytes1.dqv");
  const auto p2 = temp_path("bytes2.dqv");
  make().save(p1);
  make().save(p2);
  std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
  const std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  const std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(b1 == b2);
  CHECK(b1.substr(0, 4) == "DQV1");
  std::filesystem::remove(p1);
  std::filesystem::remove(p2);
}

TEST_CASE("bad magic and missing tensors raise") {
  const auto path = temp_path("bad.dqv");
  {
    std::ofstream out(path, std::ios::binary);
    out << "NOPE garbage";
  }
  CHECK_THROWS(io::TensorFile::load(path));
  std::filesystem::remove(path);

  io::TensorFile file;
  file.put_scalar("x", 1.0);
  CHECK_THROWS(file.matrix("x"));   // rank mismatch
  CHECK_THROWS(file.vector("nope"));
}

TEST_CASE("putting the same name twice replaces the entry") {
  io::TensorFile file;
  file.put_scalar("x", 1.0);
  file.put_scalar("x", 2.0);
  CHECK(file.scalar("x") == 2.0);
  CHECK(file.names().size() == 1);
}
