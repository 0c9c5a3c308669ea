#pragma once

#include <filesystem>
#include <stdexcept>
#include <utility>
#include <vector>

#include "graphnormals/types.hpp"

// Text interchange formats.
//
//   points   one point per line, >= 3 numeric fields separated by whitespace
//            and/or commas; extra fields are ignored.
//   normals  "x y z nx ny nz" per line.
//   labels   one non-negative integer per point (any whitespace separation).
//
// Lines starting with '#' and blank lines are skipped everywhere.
namespace graphnormals::io {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised for malformed content; carries the 1-based line number.
class ParseError : public IoError {
 public:
  ParseError(const std::filesystem::path& path, std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct LabeledCloud {
  PointCloud cloud;
  std::vector<int> labels;
};

PointCloud read_xyz(const std::filesystem::path& path);
std::vector<int> read_labels(const std::filesystem::path& path);
LabeledCloud read_labeled(const std::filesystem::path& points_path,
                          const std::filesystem::path& labels_path);
std::pair<PointCloud, NormalField> read_normals(const std::filesystem::path& path);

void write_xyz(const std::filesystem::path& path, const PointCloud& cloud);
void write_labels(const std::filesystem::path& path, const std::vector<int>& labels);
void write_normals(const std::filesystem::path& path, const PointCloud& cloud,
                   const NormalField& normals);

/// Shortest decimal text that parses back to exactly the same double.
std::string format_real(double value);

/// Writes `content` to a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace graphnormals::io
