#pragma once

#include <compare>
#include <string>
#include <string_view>
#include <vector>

#include "swapnas/rng.hpp"

namespace swapnas {

/// Edge operation codes of the cell encoding.
enum class Op : int {
  None = 0,
  Conv3x3 = 1,
  Conv1x1 = 2,
  AvgPool3x3 = 3,
  Skip = 4,
};

inline constexpr int kMaxOpCode = 4;
const char* op_name(int code) noexcept;

/// N x N matrix of op codes; entry (i, j) is the operation on edge i -> j.
/// May hold invalid content: use validate_cell() before building from it.
class CellMatrix {
 public:
  CellMatrix() = default;
  explicit CellMatrix(int nodes) : nodes_(nodes), entries_(static_cast<std::size_t>(nodes * nodes), 0) {}
  CellMatrix(int nodes, std::vector<int> row_major);

  int nodes() const noexcept { return nodes_; }
  int at(int i, int j) const { return entries_.at(static_cast<std::size_t>(i * nodes_ + j)); }
  void set(int i, int j, int code) { entries_.at(static_cast<std::size_t>(i * nodes_ + j)) = code; }
  const std::vector<int>& entries() const noexcept { return entries_; }

  /// Number of nonzero upper-triangular entries.
  int edge_count() const noexcept;

  friend bool operator==(const CellMatrix&, const CellMatrix&) = default;
  /// Lexicographic on (nodes, row-major entries).
  friend auto operator<=>(const CellMatrix&, const CellMatrix&) = default;

 private:
  int nodes_ = 0;
  std::vector<int> entries_;
};

struct CellViolation {
  int row = -1;  // -1 when not tied to an entry
  int col = -1;
  std::string message;
};

/// Every invariant violation of `m`, empty when the cell is valid:
/// strictly upper-triangular, codes in 0..4, node 0 the only source and
/// node N-1 the only sink.
std::vector<CellViolation> validate_cell(const CellMatrix& m);
inline bool is_valid_cell(const CellMatrix& m) { return validate_cell(m).empty(); }

/// Random valid cell: each edge present with probability 1/2 and a uniform
/// code in 1..4, then missing in/out edges are added to repair connectivity.
CellMatrix random_cell(int nodes, Rng& rng);

/// Cell file text: "nodes=N" and "matrix=<N*N row-major integers>" lines.
std::string encode_cell(const CellMatrix& m);
/// Same content on one line, fields separated by ';' (CSV-embeddable).
std::string encode_cell_inline(const CellMatrix& m);
/// Parses either form; fields may be separated by newlines or ';'.
CellMatrix decode_cell(std::string_view text);

CellMatrix read_cell_file(const std::string& path);

}  // namespace swapnas
