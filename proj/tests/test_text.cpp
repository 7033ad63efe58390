#include "dqrec/text.hpp"

#include <doctest.h>

#include <cstdlib>

using namespace dqrec;

TEST_CASE("split handles single and multi-character delimiters") {
  CHECK(text::split("a,b,c", ",") == std::vector<std::string>{"a", "b", "c"});
  CHECK(text::split("1::2::3", "::") == std::vector<std::string>{"1", "2", "3"});
  CHECK(text::split("", ",") == std::vector<std::string>{""});
  CHECK(text::split("a,,b", ",") == std::vector<std::string>{"a", "", "b"});
}

TEST_CASE("parse_int rejects garbage") {
  CHECK(text::parse_int(" 42 ") == 42);
  CHECK(text::parse_int("-7") == -7);
  CHECK_THROWS(text::parse_int("abc"));
  CHECK_THROWS(text::parse_int("12x"));
  CHECK_THROWS(text::parse_int(""));
}

TEST_CASE("format_double round-trips exactly") {
  for (const double v : {0.0, 1.0, -1.5, 0.3132616875182228, 1e-300, 6.02e23}) {
    const auto s = text::format_double(v);
    CHECK(std::strtod(s.c_str(), nullptr) == v);
  }
}

TEST_CASE("fnv1a is stable") {
  CHECK(text::fnv1a_hex("") == "cbf29ce484222325");
  CHECK(text::fnv1a_hex("a") != text::fnv1a_hex("b"));
  CHECK(text::fnv1a_hex("config") == text::fnv1a_hex("config"));
}
