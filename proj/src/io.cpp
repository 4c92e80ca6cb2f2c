#include "trimet/io.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace trimet {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::string trimmed(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

bool parse_double(const std::string& text, double& out) {
  const std::string t = trimmed(text);
  if (t.empty()) return false;
  errno = 0;
  char* end = nullptr;
  out = std::strtod(t.c_str(), &end);
  return end == t.c_str() + t.size() && errno == 0;
}

bool parse_int(const std::string& text, long& out) {
  const std::string t = trimmed(text);
  if (t.empty()) return false;
  errno = 0;
  char* end = nullptr;
  const long v = std::strtol(t.c_str(), &end, 10);
  if (end != t.c_str() + t.size() || errno != 0) return false;
  out = v;
  return true;
}

[[noreturn]] void parse_fail(const std::string& path, std::size_t line,
                             const std::string& what) {
  throw std::runtime_error(path + ":" + std::to_string(line) + ": " + what);
}

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

Dataset load_csv(const std::string& path, const CsvOptions& opts) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");

  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> header;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trimmed(line).empty()) continue;
    std::vector<std::string> fields = split_fields(line);
    if (width == 0) {
      width = fields.size();
    } else if (fields.size() != width) {
      parse_fail(path, line_no,
                 "ragged row: expected " + std::to_string(width) + " fields, got " +
                     std::to_string(fields.size()));
    }
    if (opts.has_header && header.empty()) {
      for (std::string& f : fields) f = trimmed(f);
      header = std::move(fields);
    } else {
      rows.push_back(std::move(fields));
    }
  }
  if (rows.empty()) parse_fail(path, line_no ? line_no : 1, "no data rows");

  long label_idx = -1;
  if (opts.has_header) {
    const auto it = std::find(header.begin(), header.end(), trimmed(opts.label_column));
    if (it != header.end()) label_idx = it - header.begin();
  }
  if (label_idx < 0 && parse_int(opts.label_column, label_idx)) {
    // numeric index form
  }
  if (label_idx < 0 || label_idx >= static_cast<long>(width))
    throw std::runtime_error(path + ": label column '" + opts.label_column +
                             "' not found (columns: " + std::to_string(width) + ")");

  const std::size_t header_lines = opts.has_header ? 1 : 0;
  Dataset x;
  x.points.resize(static_cast<Eigen::Index>(rows.size()),
                  static_cast<Eigen::Index>(width - 1));
  x.labels.resize(rows.size());

  // Integer labels (all >= 0) pass through; otherwise intern by first
  // appearance so string classes become dense ids.
  bool all_int = true;
  std::vector<long> int_labels(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    long v = 0;
    if (!parse_int(rows[r][static_cast<std::size_t>(label_idx)], v) || v < 0) {
      all_int = false;
      break;
    }
    int_labels[r] = v;
  }
  std::map<std::string, int> interned;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (all_int) {
      x.labels[r] = static_cast<int>(int_labels[r]);
    } else {
      const std::string key = trimmed(rows[r][static_cast<std::size_t>(label_idx)]);
      auto [it, fresh] = interned.try_emplace(key, static_cast<int>(interned.size()));
      x.labels[r] = it->second;
    }
    Eigen::Index f = 0;
    for (std::size_t col = 0; col < width; ++col) {
      if (static_cast<long>(col) == label_idx) continue;
      double v = 0.0;
      if (!parse_double(rows[r][col], v))
        parse_fail(path, r + 1 + header_lines,
                   "non-numeric feature '" + trimmed(rows[r][col]) + "' in column " +
                       std::to_string(col));
      x.points(static_cast<Eigen::Index>(r), f++) = v;
    }
  }
  x.validate();
  return x;
}

void save_csv(const std::string& path, const Dataset& x,
              const std::vector<std::string>& feature_names) {
  x.validate();
  if (!feature_names.empty() &&
      static_cast<Eigen::Index>(feature_names.size()) != x.dim())
    throw std::invalid_argument("feature name count does not match dimension");

  std::string out;
  for (Eigen::Index f = 0; f < x.dim(); ++f) {
    out += feature_names.empty() ? "f" + std::to_string(f) : feature_names[static_cast<std::size_t>(f)];
    out += ',';
  }
  out += "label\n";
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    for (Eigen::Index f = 0; f < x.dim(); ++f) {
      out += fmt17(x.points(i, f));
      out += ',';
    }
    out += std::to_string(x.labels[static_cast<std::size_t>(i)]);
    out += '\n';
  }
  atomic_write(path, out);
}

Matrix load_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trimmed(line).empty()) continue;
    std::vector<double> row;
    for (const std::string& field : split_fields(line)) {
      double v = 0.0;
      if (!parse_double(field, v))
        parse_fail(path, line_no, "non-numeric value '" + trimmed(field) + "'");
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size())
      parse_fail(path, line_no, "ragged row");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) parse_fail(path, 1, "no data rows");
  Matrix m(static_cast<Eigen::Index>(rows.size()),
           static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  return m;
}

void save_matrix_csv(const std::string& path, const Matrix& m) {
  std::string out;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out += ',';
      out += fmt17(m(r, c));
    }
    out += '\n';
  }
  atomic_write(path, out);
}

void atomic_write(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, target);
}

void write_pgm(const std::string& path, const Matrix& image) {
  if (image.rows() < 1 || image.cols() < 1)
    throw std::invalid_argument("empty image");
  const double lo = image.minCoeff();
  const double hi = image.maxCoeff();
  const double range = hi - lo;

  std::string out = "P5\n" + std::to_string(image.cols()) + " " +
                    std::to_string(image.rows()) + "\n255\n";
  out.reserve(out.size() + static_cast<std::size_t>(image.size()));
  for (Eigen::Index r = 0; r < image.rows(); ++r) {
    for (Eigen::Index c = 0; c < image.cols(); ++c) {
      int v = 128;  // constant image convention
      if (range > 0.0)
        v = static_cast<int>(std::lround((image(r, c) - lo) / range * 255.0));
      out += static_cast<char>(static_cast<unsigned char>(std::clamp(v, 0, 255)));
    }
  }
  atomic_write(path, out);
}

std::vector<std::string> export_ghost_images(const ProjectionMatrix& l,
                                             int image_height, int image_width,
                                             int top_m,
                                             const std::string& out_dir) {
  if (image_height < 1 || image_width < 1 || top_m < 1)
    throw std::invalid_argument("image dimensions and top_m must be positive");
  if (static_cast<Eigen::Index>(image_height) * image_width != l.in_dim())
    throw std::invalid_argument(
        "image_height * image_width must equal the projection input dimension");
  if (top_m > l.out_dim())
    throw std::invalid_argument("top_m exceeds the number of projection columns");

  std::filesystem::create_directories(out_dir);
  std::vector<std::string> files;
  for (int j = 0; j < top_m; ++j) {
    Matrix image(image_height, image_width);
    for (int r = 0; r < image_height; ++r)
      for (int c = 0; c < image_width; ++c)
        image(r, c) = l.l(static_cast<Eigen::Index>(r) * image_width + c, j);
    char name[32];
    std::snprintf(name, sizeof name, "ghost_%03d.pgm", j);
    const std::string path = (std::filesystem::path(out_dir) / name).string();
    write_pgm(path, image);
    files.push_back(path);
  }
  return files;
}

}  // namespace trimet
