#include "sledge/problems/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "sledge/core/rng.hpp"

namespace sledge {

namespace {

[[noreturn]] void parse_fail(const std::string& path, int line, const std::string& what) {
  throw std::runtime_error(path + ":" + std::to_string(line) + ": " + what);
}

double parse_double(const std::string& path, int line, const std::string& tok) {
  try {
    std::size_t used = 0;
    const double v = std::stod(tok, &used);
    if (used != tok.size()) parse_fail(path, line, "trailing junk in '" + tok + "'");
    return v;
  } catch (const std::invalid_argument&) {
    parse_fail(path, line, "not a number: '" + tok + "'");
  } catch (const std::out_of_range&) {
    parse_fail(path, line, "number out of range: '" + tok + "'");
  }
}

}  // namespace

LabeledDataset load_libsvm(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_libsvm: cannot open " + path);

  std::vector<double> raw_labels;
  LabeledDataset data;
  std::string line;
  int lineno = 0;
  int max_index = -1;
  while (std::getline(in, line)) {
    ++lineno;
    // Strip comments and skip blank lines.
    if (const auto pos = line.find('#'); pos != std::string::npos) line.resize(pos);
    std::istringstream ls(line);
    std::string tok;
    if (!(ls >> tok)) continue;
    raw_labels.push_back(parse_double(path, lineno, tok));
    std::vector<std::pair<int, double>> row;
    int prev_index = -1;
    while (ls >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos || colon == 0 || colon + 1 == tok.size())
        parse_fail(path, lineno, "expected idx:val, got '" + tok + "'");
      int idx = 0;
      const char* first = tok.data();
      const char* last = tok.data() + colon;
      const auto [p, ec] = std::from_chars(first, last, idx);
      if (ec != std::errc() || p != last)
        parse_fail(path, lineno, "bad feature index in '" + tok + "'");
      if (idx < 1) parse_fail(path, lineno, "feature indices are 1-based");
      if (idx - 1 <= prev_index)
        parse_fail(path, lineno, "feature indices must be strictly increasing");
      prev_index = idx - 1;
      row.emplace_back(idx - 1, parse_double(path, lineno, tok.substr(colon + 1)));
      max_index = std::max(max_index, idx - 1);
    }
    data.rows.push_back(std::move(row));
  }
  if (data.rows.empty()) throw std::runtime_error("load_libsvm: no samples in " + path);

  std::map<double, int> remap;
  for (double l : raw_labels) remap.emplace(l, 0);
  int next = 0;
  for (auto& [value, id] : remap) id = next++;
  data.labels.reserve(raw_labels.size());
  for (double l : raw_labels) data.labels.push_back(remap.at(l));
  data.num_classes = next;
  data.num_features = max_index + 1;
  return data;
}

void save_libsvm(const LabeledDataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_libsvm: cannot open " + path);
  for (int s = 0; s < data.size(); ++s) {
    out << data.labels[static_cast<std::size_t>(s)];
    for (const auto& [idx, val] : data.rows[static_cast<std::size_t>(s)]) {
      out << ' ' << (idx + 1) << ':';
      char buf[32];
      const auto res = std::to_chars(buf, buf + sizeof buf, val);
      out.write(buf, res.ptr - buf);
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("save_libsvm: write failed for " + path);
}

LabeledDataset make_blobs(int classes, int per_class, int features,
                          double separation, std::uint64_t seed) {
  if (classes < 2 || per_class < 1 || features < 1)
    throw std::invalid_argument("make_blobs: bad shape");
  if (separation < 0.0) throw std::invalid_argument("make_blobs: separation < 0");

  rng::Engine eng(seed, rng::kProblemGen, 2);
  LabeledDataset data;
  data.num_features = features;
  data.num_classes = classes;
  data.rows.reserve(static_cast<std::size_t>(classes) * per_class);
  for (int c = 0; c < classes; ++c) {
    // Center at distance `separation` along a random direction.
    std::vector<double> center(static_cast<std::size_t>(features));
    double norm2 = 0.0;
    for (auto& v : center) {
      v = eng.next_normal();
      norm2 += v * v;
    }
    const double scale = norm2 > 0.0 ? separation / std::sqrt(norm2) : 0.0;
    for (auto& v : center) v *= scale;
    for (int s = 0; s < per_class; ++s) {
      std::vector<std::pair<int, double>> row(static_cast<std::size_t>(features));
      for (int f = 0; f < features; ++f)
        row[static_cast<std::size_t>(f)] = {f, center[static_cast<std::size_t>(f)] +
                                                   eng.next_normal()};
      data.rows.push_back(std::move(row));
      data.labels.push_back(c);
    }
  }
  return data;
}

}  // namespace sledge
