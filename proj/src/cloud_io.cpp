#include "graphnormals/cloud_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>

namespace graphnormals::io {

ParseError::ParseError(const std::filesystem::path& path, std::size_t line, const std::string& what)
    : IoError(path.string() + ":" + std::to_string(line) + ": " + what), line_(line) {}

namespace {

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

bool is_skipped(std::string_view line) {
  const auto first = line.find_first_not_of(" \t\r");
  return first == std::string_view::npos || line[first] == '#';
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t pos = 0;
  while (pos < line.size()) {
    const auto start = line.find_first_not_of(" \t\r,", pos);
    if (start == std::string_view::npos) break;
    auto end = line.find_first_of(" \t\r,", start);
    if (end == std::string_view::npos) end = line.size();
    fields.push_back(line.substr(start, end - start));
    pos = end;
  }
  return fields;
}

template <typename T>
bool parse_number(std::string_view field, T& value) {
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  return ec == std::errc() && ptr == end;
}

// Parses the first `count` numeric fields of every data line.
template <typename Fn>
void for_each_record(const std::filesystem::path& path, std::size_t count, Fn&& fn) {
  auto in = open_input(path);
  std::string line;
  std::size_t line_no = 0;
  std::vector<double> values(count);
  while (std::getline(in, line)) {
    ++line_no;
    if (is_skipped(line)) continue;
    const auto fields = split_fields(line);
    if (fields.size() < count)
      throw ParseError(path, line_no,
                       "expected at least " + std::to_string(count) + " fields, found " +
                           std::to_string(fields.size()));
    for (std::size_t f = 0; f < count; ++f) {
      if (!parse_number(fields[f], values[f]))
        throw ParseError(path, line_no, "'" + std::string(fields[f]) + "' is not a number");
    }
    fn(line_no, values);
  }
  if (in.bad()) throw IoError("read failure on '" + path.string() + "'");
}

}  // namespace

PointCloud read_xyz(const std::filesystem::path& path) {
  std::vector<Point3> points;
  for_each_record(path, 3, [&](std::size_t line_no, const std::vector<double>& v) {
    Point3 p(v[0], v[1], v[2]);
    if (!p.allFinite()) throw ParseError(path, line_no, "non-finite coordinate");
    points.push_back(p);
  });
  if (points.empty()) throw IoError("'" + path.string() + "' contains no points");
  return PointCloud(std::move(points));
}

std::vector<int> read_labels(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::vector<int> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_skipped(line)) continue;
    for (auto field : split_fields(line)) {
      int label = 0;
      if (!parse_number(field, label) || label < 0)
        throw ParseError(path, line_no, "'" + std::string(field) + "' is not a non-negative integer label");
      labels.push_back(label);
    }
  }
  if (in.bad()) throw IoError("read failure on '" + path.string() + "'");
  return labels;
}

LabeledCloud read_labeled(const std::filesystem::path& points_path,
                          const std::filesystem::path& labels_path) {
  PointCloud cloud = read_xyz(points_path);
  std::vector<int> labels = read_labels(labels_path);
  if (static_cast<Index>(labels.size()) != cloud.size())
    throw IoError("label count mismatch: " + std::to_string(labels.size()) + " labels for " +
                  std::to_string(cloud.size()) + " points");
  return {std::move(cloud), std::move(labels)};
}

std::pair<PointCloud, NormalField> read_normals(const std::filesystem::path& path) {
  std::vector<Point3> points;
  std::vector<Vector3> normals;
  for_each_record(path, 6, [&](std::size_t line_no, const std::vector<double>& v) {
    Point3 p(v[0], v[1], v[2]);
    Vector3 n(v[3], v[4], v[5]);
    if (!p.allFinite() || !n.allFinite()) throw ParseError(path, line_no, "non-finite value");
    if (n.norm() == 0.0) throw ParseError(path, line_no, "zero-length normal");
    points.push_back(p);
    normals.push_back(n);
  });
  if (points.empty()) throw IoError("'" + path.string() + "' contains no points");
  return {PointCloud(std::move(points)), NormalField::normalized(normals)};
}

std::string format_real(double value) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw IoError("cannot format number");
  return std::string(buf, ptr);
}

void write_xyz(const std::filesystem::path& path, const PointCloud& cloud) {
  std::ostringstream out;
  for (const auto& p : cloud.points())
    out << format_real(p.x()) << ' ' << format_real(p.y()) << ' ' << format_real(p.z()) << '\n';
  write_file_atomic(path, out.str());
}

void write_labels(const std::filesystem::path& path, const std::vector<int>& labels) {
  std::ostringstream out;
  for (int label : labels) out << label << '\n';
  write_file_atomic(path, out.str());
}

void write_normals(const std::filesystem::path& path, const PointCloud& cloud,
                   const NormalField& normals) {
  if (cloud.size() != normals.size())
    throw std::invalid_argument("write_normals: cloud has " + std::to_string(cloud.size()) +
                                " points but field has " + std::to_string(normals.size()) + " normals");
  std::ostringstream out;
  for (Index i = 0; i < cloud.size(); ++i) {
    const auto& p = cloud[i];
    const Vector3 n = normals[i];
    out << format_real(p.x()) << ' ' << format_real(p.y()) << ' ' << format_real(p.z()) << ' '
        << format_real(n.x()) << ' ' << format_real(n.y()) << ' ' << format_real(n.z()) << '\n';
  }
  write_file_atomic(path, out.str());
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    auto out = open_output(tmp);
    out << content;
    out.flush();
    if (!out) throw IoError("write failure on '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
}

}  // namespace graphnormals::io
