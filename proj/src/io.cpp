#include "poisonlens/io.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "poisonlens/error.hpp"

namespace poisonlens {

namespace {

std::vector<unsigned char> read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::IoError, "cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<unsigned char>& buf, std::size_t offset, const std::string& path) {
  if (buf.size() < offset + 4) raise(ErrorCode::TruncatedFile, path + ": header cut short");
  return (std::uint32_t{buf[offset]} << 24) | (std::uint32_t{buf[offset + 1]} << 16) |
         (std::uint32_t{buf[offset + 2]} << 8) | std::uint32_t{buf[offset + 3]};
}

Index clamp_count(std::uint32_t count, Index limit) {
  const auto n = static_cast<Index>(count);
  return limit >= 0 && limit < n ? limit : n;
}

}  // namespace

IdxImages load_idx_images(const std::string& path, Index limit) {
  const auto buf = read_bytes(path);
  const std::uint32_t magic = read_be32(buf, 0, path);
  if (magic != kIdxImageMagic) raise(ErrorCode::BadMagic, path + ": not an IDX image file");
  const std::uint32_t count = read_be32(buf, 4, path);
  IdxImages out;
  out.rows = static_cast<int>(read_be32(buf, 8, path));
  out.cols = static_cast<int>(read_be32(buf, 12, path));
  const std::size_t plane = static_cast<std::size_t>(out.rows) * static_cast<std::size_t>(out.cols);
  if (buf.size() < 16 + plane * count) raise(ErrorCode::TruncatedFile, path + ": pixel payload cut short");
  const Index n = clamp_count(count, limit);
  out.pixels.resize(n, static_cast<Index>(plane));
  for (Index i = 0; i < n; ++i) {
    const unsigned char* src = buf.data() + 16 + static_cast<std::size_t>(i) * plane;
    for (std::size_t j = 0; j < plane; ++j) out.pixels(i, static_cast<Index>(j)) = src[j] / 255.0;
  }
  return out;
}

Vector load_idx_labels(const std::string& path, Index limit) {
  const auto buf = read_bytes(path);
  const std::uint32_t magic = read_be32(buf, 0, path);
  if (magic != kIdxLabelMagic) raise(ErrorCode::BadMagic, path + ": not an IDX label file");
  const std::uint32_t count = read_be32(buf, 4, path);
  if (buf.size() < 8 + std::size_t{count}) raise(ErrorCode::TruncatedFile, path + ": label payload cut short");
  const Index n = clamp_count(count, limit);
  Vector y(n);
  for (Index i = 0; i < n; ++i) y[i] = buf[8 + static_cast<std::size_t>(i)];
  return y;
}

LabeledDataset load_idx(const std::string& images_path, const std::string& labels_path, Index limit) {
  auto images = load_idx_images(images_path, -1);
  auto labels = load_idx_labels(labels_path, -1);
  if (images.pixels.rows() != labels.size()) {
    raise(ErrorCode::CountMismatch, images_path + " has " + std::to_string(images.pixels.rows()) + " images but " +
                                        labels_path + " has " + std::to_string(labels.size()) + " labels");
  }
  if (limit >= 0 && limit < labels.size()) {
    Matrix X = images.pixels.topRows(limit);
    Vector y = labels.head(limit);
    return LabeledDataset::from(std::move(X), std::move(y));
  }
  return LabeledDataset::from(std::move(images.pixels), std::move(labels));
}

MnistData load_mnist(const std::string& dir, Index train_limit, Index test_limit) {
  const std::filesystem::path d(dir);
  MnistData out;
  out.train = load_idx((d / "train-images-idx3-ubyte").string(), (d / "train-labels-idx1-ubyte").string(), train_limit);
  out.test = load_idx((d / "t10k-images-idx3-ubyte").string(), (d / "t10k-labels-idx1-ubyte").string(), test_limit);
  return out;
}

LabeledDataset load_csv_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::IoError, "cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) raise(ErrorCode::ParseError, path + ": empty file, expected a header row");
  std::vector<std::vector<double>> rows;
  std::size_t width = 0;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> cells;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      std::string cell = line.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
      while (!cell.empty() && cell.back() == ' ') cell.pop_back();
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size()) {
        raise(ErrorCode::ParseError, path + ":" + std::to_string(lineno) + ": non-numeric cell '" + cell + "'");
      }
      cells.push_back(v);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (cells.size() < 2) raise(ErrorCode::ParseError, path + ":" + std::to_string(lineno) + ": need features and a label");
    if (width == 0) width = cells.size();
    if (cells.size() != width) {
      raise(ErrorCode::ParseError, path + ":" + std::to_string(lineno) + ": expected " + std::to_string(width) + " cells");
    }
    rows.push_back(std::move(cells));
  }
  if (rows.empty()) raise(ErrorCode::ParseError, path + ": no data rows");
  const auto n = static_cast<Index>(rows.size());
  const auto p = static_cast<Index>(width - 1);
  Matrix X(n, p);
  Vector y(n);
  for (Index i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    for (Index j = 0; j < p; ++j) X(i, j) = r[static_cast<std::size_t>(j)];
    y[i] = r.back();
  }
  return LabeledDataset::from(std::move(X), std::move(y));
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::IoError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(ErrorCode::IoError, "cannot write " + path);
  out << content;
  if (!out) raise(ErrorCode::IoError, "write failed for " + path);
}

}  // namespace poisonlens
