#include "dmt/topology.hpp"

#include <fstream>
#include <istream>
#include <sstream>

namespace dmt {

EdgeList parse_edge_list(std::istream& in) {
  EdgeList out;
  std::string raw;
  std::size_t lineno = 0;
  Index max_node = -1;
  while (std::getline(in, raw)) {
    ++lineno;
    if (const auto hash = raw.find('#'); hash != std::string::npos) raw.resize(hash);
    std::istringstream line(raw);
    long long a = 0;
    long long b = 0;
    if (!(line >> a)) {
      if (raw.find_first_not_of(" \t\r") == std::string::npos) continue;
      throw ParseError(lineno, "expected 'i j' edge");
    }
    std::string rest;
    if (!(line >> b) || (line >> rest)) throw ParseError(lineno, "expected exactly two node ids");
    if (a < 0 || b < 0) throw ParseError(lineno, "node ids must be nonnegative");
    out.edges.emplace_back(static_cast<Index>(a), static_cast<Index>(b));
    max_node = std::max({max_node, static_cast<Index>(a), static_cast<Index>(b)});
  }
  out.agents = max_node + 1;
  return out;
}

EdgeList load_edge_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open edge list '" + path + "'");
  return parse_edge_list(in);
}

}  // namespace dmt
