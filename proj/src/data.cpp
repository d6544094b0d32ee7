#include "dmt/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>
#include <string>
#include <string_view>

#include "dmt/errors.hpp"

namespace dmt {

namespace {

bool parse_double(std::string_view tok, double& out) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  if (tok.empty()) return false;
  const auto* end = tok.data() + tok.size();
  const auto [ptr, ec] = std::from_chars(tok.data(), end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

bool parse_index(std::string_view tok, long long& out) {
  if (tok.empty()) return false;
  const auto* end = tok.data() + tok.size();
  const auto [ptr, ec] = std::from_chars(tok.data(), end, out);
  return ec == std::errc() && ptr == end;
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\v' || c == '\f'; }

std::vector<std::string_view> tokenize(std::string_view line) {
  std::vector<std::string_view> toks;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && is_space(line[i])) ++i;
    std::size_t j = i;
    while (j < line.size() && !is_space(line[j])) ++j;
    if (j > i) toks.push_back(line.substr(i, j - i));
    i = j;
  }
  return toks;
}

}  // namespace

Dataset parse_libsvm(std::istream& in) {
  Dataset out;
  std::string raw;
  std::size_t lineno = 0;
  Index max_index = -1;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string_view line(raw);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const auto toks = tokenize(line);
    if (toks.empty()) continue;

    SparseSample sample;
    double label = 0.0;
    if (!parse_double(toks[0], label)) throw ParseError(lineno, "non-numeric label '" + std::string(toks[0]) + "'");
    if (label == 1.0) {
      sample.label = 1;
    } else if (label == -1.0 || label == 0.0) {
      sample.label = -1;
    } else {
      throw ParseError(lineno, "unsupported label '" + std::string(toks[0]) + "'");
    }

    long long prev = 0;
    for (std::size_t k = 1; k < toks.size(); ++k) {
      const auto tok = toks[k];
      const auto colon = tok.find(':');
      long long idx = 0;
      double val = 0.0;
      if (colon == std::string_view::npos || !parse_index(tok.substr(0, colon), idx) ||
          !parse_double(tok.substr(colon + 1), val))
        throw ParseError(lineno, "malformed feature '" + std::string(tok) + "'");
      if (idx < 1) throw ParseError(lineno, "feature index must be >= 1 in '" + std::string(tok) + "'");
      if (idx <= prev) throw ParseError(lineno, "feature indices must be strictly increasing");
      prev = idx;
      sample.entries.emplace_back(static_cast<Index>(idx - 1), val);
      max_index = std::max(max_index, static_cast<Index>(idx - 1));
    }
    out.samples.push_back(std::move(sample));
  }
  if (in.bad()) throw IoError("read failure while parsing LIBSVM input");
  out.dim = max_index + 1;
  return out;
}

Dataset load_libsvm(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset '" + path + "'");
  return parse_libsvm(in);
}

void write_libsvm(std::ostream& out, const std::vector<SparseSample>& samples) {
  const auto old_prec = out.precision(17);
  for (const auto& s : samples) {
    out << (s.label > 0 ? "+1" : "-1");
    for (const auto& [idx, val] : s.entries) out << ' ' << (idx + 1) << ':' << val;
    out << '\n';
  }
  out.precision(old_prec);
}

Partition partition(const std::vector<SparseSample>& samples, Index n, PartitionMode mode, Rng& rng) {
  const auto m = static_cast<Index>(samples.size());
  if (n < 1) throw ConfigError("agent count must be >= 1", "network.agents");
  if (m < n) throw ConfigError("fewer samples (" + std::to_string(m) + ") than agents (" + std::to_string(n) + ")",
                               "network.agents");

  std::vector<Index> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), Index{0});
  if (mode == PartitionMode::LabelSorted) {
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
      return samples[static_cast<std::size_t>(a)].label < samples[static_cast<std::size_t>(b)].label;
    });
  } else {
    std::shuffle(order.begin(), order.end(), rng);
  }

  Partition part;
  part.mode = mode;
  part.assignment.resize(static_cast<std::size_t>(n));
  const Index base = m / n;
  const Index extra = m % n;
  Index pos = 0;
  for (Index i = 0; i < n; ++i) {
    const Index size = base + (i < extra ? 1 : 0);
    auto& block = part.assignment[static_cast<std::size_t>(i)];
    block.assign(order.begin() + pos, order.begin() + pos + size);
    pos += size;
  }
  return part;
}

Dataset make_synthetic_blobs(const BlobSpec& spec) {
  if (spec.samples < 1 || spec.dim < 1) throw ConfigError("synthetic dataset needs samples >= 1 and dim >= 1");
  Rng rng = make_stream(spec.seed, StreamPurpose::Dataset);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);

  auto unit_direction = [&] {
    std::vector<double> dir(static_cast<std::size_t>(spec.dim));
    double norm = 0.0;
    for (auto& v : dir) {
      v = normal(rng);
      norm += v * v;
    }
    norm = std::sqrt(norm);
    for (auto& v : dir) v /= norm;
    return dir;
  };
  const std::vector<double> dir = unit_direction();
  const std::vector<double> shared = unit_direction();

  Dataset out;
  out.dim = spec.dim;
  out.samples.reserve(static_cast<std::size_t>(spec.samples));
  for (Index j = 0; j < spec.samples; ++j) {
    SparseSample s;
    s.label = coin(rng) ? 1 : -1;
    const double shift = 0.5 * spec.separation * s.label;
    s.entries.reserve(static_cast<std::size_t>(spec.dim));
    for (Index k = 0; k < spec.dim; ++k)
      s.entries.emplace_back(k, shift * dir[static_cast<std::size_t>(k)] + spec.offset * shared[static_cast<std::size_t>(k)] +
                                    spec.spread * normal(rng));
    out.samples.push_back(std::move(s));
  }
  return out;
}

}  // namespace dmt
