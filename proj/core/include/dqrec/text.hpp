#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace dqrec::text {

// Splits a line on a (possibly multi-character) delimiter. An empty line
// yields a single empty field.
std::vector<std::string> split(const std::string& line, const std::string& delimiter);

std::string strip(const std::string& s);

// Strict integer parsers used by the loaders; throw std::runtime_error with
// the offending text on failure.
std::int64_t parse_int(const std::string& field);
double parse_double(const std::string& field);

// Reads all lines, dropping a trailing "\r" (CRLF input).
std::vector<std::string> read_lines(const std::filesystem::path& path);

// Opens for writing, throwing on failure. Parent directories are created.
std::ofstream open_out(const std::filesystem::path& path);

// Canonical float formatting for report files: shortest round-trippable form.
std::string format_double(double value);

// FNV-1a 64-bit over a string, rendered as 16 hex digits.
std::string fnv1a_hex(const std::string& payload);

}  // namespace dqrec::text
