#include <cstdio>
#include <fstream>
#include <sstream>

#include "hetfl/data.hpp"
#include "hetfl/errors.hpp"

namespace hetfl {
namespace {

std::string where(const std::string& path, std::size_t line) { return path + ":" + std::to_string(line) + ": "; }

}  // namespace

void save_dataset(const LabeledDataset& dataset, const std::string& path) {
  dataset.validate();
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << dataset.size() << ' ' << dataset.dim() << ' ' << dataset.num_classes << '\n';
  char buf[32];
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    for (double v : dataset.features.row(i)) {
      std::snprintf(buf, sizeof(buf), "%.9g ", v);
      out << buf;
    }
    out << dataset.labels[i] << '\n';
  }
  if (!out) throw IoError("write failed for " + path);
}

LabeledDataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset " + path);

  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw ParseError(where(path, 1) + "missing header `n d C`");
  long long n = 0, d = 0, c = 0;
  {
    std::istringstream header(line);
    std::string extra;
    if (!(header >> n >> d >> c) || (header >> extra)) {
      throw ParseError(where(path, 1) + "malformed header, expected `n d C`");
    }
  }
  if (n < 1) throw ValidationError(where(path, 1) + "dataset must contain at least one sample");
  if (d < 1) throw ParseError(where(path, 1) + "feature dimension must be positive");
  if (c < 2) throw ParseError(where(path, 1) + "class count must be at least 2");

  LabeledDataset out;
  out.num_classes = static_cast<std::size_t>(c);
  out.features = Tensor({static_cast<std::size_t>(n), static_cast<std::size_t>(d)});
  out.labels.reserve(static_cast<std::size_t>(n));

  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (row == static_cast<std::size_t>(n)) throw ParseError(where(path, line_no) + "more rows than the header declares");
    std::istringstream fields(line);
    auto dest = out.features.row(row);
    for (long long j = 0; j < d; ++j) {
      if (!(fields >> dest[static_cast<std::size_t>(j)])) {
        throw ParseError(where(path, line_no) + "expected " + std::to_string(d) + " features and a label");
      }
    }
    long long label = 0;
    std::string extra;
    if (!(fields >> label)) throw ParseError(where(path, line_no) + "missing integer label");
    if (fields >> extra) throw ParseError(where(path, line_no) + "trailing field '" + extra + "'");
    if (label < 0 || label >= c) {
      throw ValidationError(where(path, line_no) + "label " + std::to_string(label) + " outside [0, " +
                            std::to_string(c) + ")");
    }
    out.labels.push_back(static_cast<int>(label));
    ++row;
  }
  if (row == 0) throw ParseError(where(path, line_no) + "empty data section");
  if (row != static_cast<std::size_t>(n)) {
    throw ParseError(where(path, line_no) + "expected " + std::to_string(n) + " rows, found " + std::to_string(row));
  }
  return out;
}

}  // namespace hetfl
