#include "swapnas/cell.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "swapnas/errors.hpp"

namespace swapnas {

const char* op_name(int code) noexcept {
  switch (code) {
    case 0: return "none";
    case 1: return "conv3x3";
    case 2: return "conv1x1";
    case 3: return "avgpool3x3";
    case 4: return "skip";
    default: return "unknown";
  }
}

CellMatrix::CellMatrix(int nodes, std::vector<int> row_major) : nodes_(nodes), entries_(std::move(row_major)) {
  if (nodes < 0 || entries_.size() != static_cast<std::size_t>(nodes) * static_cast<std::size_t>(nodes))
    throw ValidationError("cell matrix needs nodes*nodes entries");
}

int CellMatrix::edge_count() const noexcept {
  int n = 0;
  for (int i = 0; i < nodes_; ++i)
    for (int j = i + 1; j < nodes_; ++j) n += entries_[static_cast<std::size_t>(i * nodes_ + j)] != 0;
  return n;
}

std::vector<CellViolation> validate_cell(const CellMatrix& m) {
  std::vector<CellViolation> out;
  const int n = m.nodes();
  if (n < 2) {
    out.push_back({-1, -1, "cell needs at least 2 nodes"});
    return out;
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const int code = m.at(i, j);
      if (code < 0 || code > kMaxOpCode) out.push_back({i, j, "unknown op code " + std::to_string(code)});
      if (code != 0 && i > j) out.push_back({i, j, "lower-triangular entry"});
      if (code != 0 && i == j) out.push_back({i, j, "diagonal entry"});
    }
  auto is_edge = [&](int i, int j) {
    const int c = m.at(i, j);
    return c >= 1 && c <= kMaxOpCode;
  };
  for (int v = 0; v < n; ++v) {
    bool has_in = false, has_out = false;
    for (int u = 0; u < v; ++u) has_in = has_in || is_edge(u, v);
    for (int w = v + 1; w < n; ++w) has_out = has_out || is_edge(v, w);
    if (v > 0 && !has_in) out.push_back({-1, v, "node " + std::to_string(v) + " has no incoming edge"});
    if (v < n - 1 && !has_out) out.push_back({v, -1, "node " + std::to_string(v) + " has no outgoing edge"});
  }
  return out;
}

CellMatrix random_cell(int nodes, Rng& rng) {
  if (nodes < 2) throw ContractError("random_cell needs at least 2 nodes");
  std::bernoulli_distribution present(0.5);
  std::uniform_int_distribution<int> code(1, kMaxOpCode);
  for (;;) {
    CellMatrix m(nodes);
    for (int i = 0; i < nodes; ++i)
      for (int j = i + 1; j < nodes; ++j)
        if (present(rng)) m.set(i, j, code(rng));
    for (int j = 1; j < nodes; ++j) {
      bool has_in = false;
      for (int i = 0; i < j; ++i) has_in = has_in || m.at(i, j) != 0;
      if (!has_in) {
        std::uniform_int_distribution<int> from(0, j - 1);
        const int i = from(rng);
        m.set(i, j, code(rng));
      }
    }
    for (int i = 0; i < nodes - 1; ++i) {
      bool has_out = false;
      for (int j = i + 1; j < nodes; ++j) has_out = has_out || m.at(i, j) != 0;
      if (!has_out) {
        std::uniform_int_distribution<int> to(i + 1, nodes - 1);
        const int j = to(rng);
        m.set(i, j, code(rng));
      }
    }
    if (is_valid_cell(m)) return m;
  }
}

std::string encode_cell(const CellMatrix& m) {
  std::ostringstream os;
  os << "nodes=" << m.nodes() << "\nmatrix=";
  for (std::size_t i = 0; i < m.entries().size(); ++i) os << (i ? " " : "") << m.entries()[i];
  os << '\n';
  return os.str();
}

std::string encode_cell_inline(const CellMatrix& m) {
  std::string s = encode_cell(m);
  s.pop_back();
  std::replace(s.begin(), s.end(), '\n', ';');
  return s;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

CellMatrix decode_cell(std::string_view text) {
  int nodes = -1;
  std::vector<int> matrix;
  bool have_matrix = false;
  std::size_t field_no = 0;
  while (!text.empty()) {
    const auto cut = text.find_first_of(";\n");
    std::string_view field = trim(text.substr(0, cut));
    text = cut == std::string_view::npos ? std::string_view{} : text.substr(cut + 1);
    ++field_no;
    if (field.empty() || field.front() == '#') continue;
    const auto eq = field.find('=');
    if (eq == std::string_view::npos) throw ParseError("cell field without '=': '" + std::string(field) + "'", field_no);
    const std::string_view key = trim(field.substr(0, eq));
    std::string_view value = trim(field.substr(eq + 1));
    if (key == "nodes") {
      auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), nodes);
      if (ec != std::errc{} || p != value.data() + value.size() || nodes < 0)
        throw ParseError("cell 'nodes' must be a non-negative integer", field_no);
    } else if (key == "matrix") {
      have_matrix = true;
      while (!value.empty()) {
        int v = 0;
        auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
        if (ec != std::errc{}) throw ParseError("cell 'matrix' must hold integers", field_no);
        matrix.push_back(v);
        value = trim(value.substr(static_cast<std::size_t>(p - value.data())));
        if (!value.empty() && value.front() == ',') value = trim(value.substr(1));
      }
    } else {
      throw ParseError("unknown cell field '" + std::string(key) + "'", field_no);
    }
  }
  if (nodes < 0) throw ParseError("cell is missing the 'nodes' field");
  if (!have_matrix) throw ParseError("cell is missing the 'matrix' field");
  if (matrix.size() != static_cast<std::size_t>(nodes) * static_cast<std::size_t>(nodes))
    throw ParseError("cell matrix has " + std::to_string(matrix.size()) + " entries, expected " +
                     std::to_string(nodes * nodes));
  return CellMatrix(nodes, std::move(matrix));
}

CellMatrix read_cell_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open cell file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return decode_cell(ss.str());
}

}  // namespace swapnas
