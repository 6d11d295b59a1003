#pragma once

#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "cellnet/error.hpp"
#include "cellnet/graph.hpp"

namespace cellnet {

namespace detail {

inline void g6_fail(std::size_t line, const std::string& what) {
  throw Error(ErrorCode::MalformedGraph6, "line " + std::to_string(line) + ": " + what);
}

}  // namespace detail

/// graph6 encoding: size prefix N(n), then the upper triangle of the adjacency
/// matrix in column order (x(0,1), x(0,2), x(1,2), x(0,3), ...) packed six bits
/// per byte, most significant bit first, each byte offset by 63.
inline std::string encode_graph6(const Graph& g) {
  const std::size_t n = g.num_vertices();
  std::string out;
  if (n < 63) {
    out.push_back(static_cast<char>(n + 63));
  } else if (n <= 258047) {
    out.push_back(126);
    for (int shift = 12; shift >= 0; shift -= 6) out.push_back(static_cast<char>(((n >> shift) & 63) + 63));
  } else {
    out.push_back(126);
    out.push_back(126);
    for (int shift = 30; shift >= 0; shift -= 6) out.push_back(static_cast<char>(((n >> shift) & 63) + 63));
  }
  int bits = 0;
  int value = 0;
  for (std::size_t j = 1; j < n; ++j) {
    for (std::size_t i = 0; i < j; ++i) {
      value = (value << 1) | (g.has_edge(static_cast<Vertex>(i), static_cast<Vertex>(j)) ? 1 : 0);
      if (++bits == 6) {
        out.push_back(static_cast<char>(value + 63));
        bits = 0;
        value = 0;
      }
    }
  }
  if (bits > 0) out.push_back(static_cast<char>((value << (6 - bits)) + 63));
  return out;
}

/// Decodes one graph6 line; `line` is used in error messages.
inline Graph decode_graph6(std::string_view text, std::size_t line = 1) {
  if (text.rfind(">>graph6<<", 0) == 0) text.remove_prefix(10);
  if (text.empty()) detail::g6_fail(line, "empty graph6 record");
  if (text.front() == ':' || text.front() == ';') detail::g6_fail(line, "sparse6/digraph6 records are not supported");
  for (char c : text) {
    if (c < 63 || c > 126) detail::g6_fail(line, "byte outside the graph6 range 63..126");
  }
  std::size_t pos = 0;
  auto next6 = [&]() -> std::size_t { return static_cast<std::size_t>(text[pos++] - 63); };
  std::size_t n = 0;
  if (text[0] != 126) {
    n = next6();
  } else if (text.size() >= 2 && text[1] != 126) {
    if (text.size() < 4) detail::g6_fail(line, "truncated size prefix");
    pos = 1;
    for (int k = 0; k < 3; ++k) n = (n << 6) | next6();
  } else {
    if (text.size() < 8) detail::g6_fail(line, "truncated size prefix");
    pos = 2;
    for (int k = 0; k < 6; ++k) n = (n << 6) | next6();
  }
  const std::size_t nbits = n * (n - (n > 0 ? 1 : 0)) / 2;
  const std::size_t nbytes = (nbits + 5) / 6;
  if (text.size() - pos != nbytes) {
    detail::g6_fail(line, "expected " + std::to_string(nbytes) + " adjacency bytes for n=" + std::to_string(n) +
                              ", found " + std::to_string(text.size() - pos));
  }
  std::vector<Edge> edges;
  std::size_t bit = 0;
  for (std::size_t j = 1; j < n; ++j) {
    for (std::size_t i = 0; i < j; ++i, ++bit) {
      const int byte = text[pos + bit / 6] - 63;
      if ((byte >> (5 - bit % 6)) & 1) edges.push_back({static_cast<Vertex>(i), static_cast<Vertex>(j)});
    }
  }
  if (nbits % 6 != 0) {
    const int last = text.back() - 63;
    if (last & ((1 << (6 - nbits % 6)) - 1)) detail::g6_fail(line, "nonzero padding bits");
  }
  return Graph(n, std::move(edges));
}

/// All graphs of a graph6 stream, one per non-empty line.
inline std::vector<Graph> read_graph6(std::istream& in) {
  std::vector<Graph> out;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    while (!text.empty() && (text.back() == '\r' || text.back() == ' ')) text.pop_back();
    if (text.empty()) continue;
    out.push_back(decode_graph6(text, line));
  }
  return out;
}

inline std::vector<Graph> parse_graph6(const std::string& text) {
  std::istringstream in(text);
  return read_graph6(in);
}

inline std::vector<Graph> load_graph6(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path);
  return read_graph6(in);
}

}  // namespace cellnet
