#pragma once

/// File ingestion and export: dataset CSV, plain matrix CSV, and the
/// grayscale PGM images of projection columns. All writers go through a
/// write-temp-then-rename step so readers never see partial files.

#include <string>
#include <vector>

#include "trimet/dataset.hpp"
#include "trimet/metric.hpp"

namespace trimet {

struct CsvOptions {
  bool has_header = true;
  // Column holding the class label, as a header name or a 0-based index in
  // text form. Integer labels >= 0 are used directly; anything else is
  // interned to dense integers in order of first appearance.
  std::string label_column = "label";
};

/// Parse errors carry `path:line:` prefixes. Rows must have a uniform
/// column count and every feature must parse as a real number.
Dataset load_csv(const std::string& path, const CsvOptions& opts = {});

/// Header `f0,...,f{d-1},label` (or the given names) and %.17g features,
/// so load_csv round-trips the exact Dataset.
void save_csv(const std::string& path, const Dataset& x,
              const std::vector<std::string>& feature_names = {});

Matrix load_matrix_csv(const std::string& path);
void save_matrix_csv(const std::string& path, const Matrix& m);

void atomic_write(const std::string& path, const std::string& content);

/// Binary PGM (P5, maxval 255), min-max normalized to [0, 255]; an image
/// with zero range maps to constant 128.
void write_pgm(const std::string& path, const Matrix& image);

/// Writes the top_m leading columns of `l` as image_height x image_width
/// grayscale images named ghost_000.pgm, ghost_001.pgm, ... in out_dir.
/// Columns are reshaped row-major; image_height * image_width must equal
/// the input dimension of `l`.
std::vector<std::string> export_ghost_images(const ProjectionMatrix& l,
                                             int image_height, int image_width,
                                             int top_m,
                                             const std::string& out_dir);

}  // namespace trimet
