#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace swapnas {

/// Dense row-major bit matrix. Each row is packed into ceil(cols/64) words,
/// bit c of a row lives in word c/64 at position c%64. Padding bits past
/// `cols` are always zero so whole rows can be compared word by word.
class BitMatrix {
 public:
  using Word = std::uint64_t;
  static constexpr std::size_t kWordBits = 64;

  BitMatrix() = default;
  BitMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), words_per_row_((cols + kWordBits - 1) / kWordBits),
        data_(rows * words_per_row_, 0) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t words_per_row() const noexcept { return words_per_row_; }
  bool empty() const noexcept { return rows_ == 0 || cols_ == 0; }

  bool get(std::size_t r, std::size_t c) const noexcept {
    return (data_[r * words_per_row_ + c / kWordBits] >> (c % kWordBits)) & 1U;
  }
  void set(std::size_t r, std::size_t c, bool value) noexcept {
    Word& w = data_[r * words_per_row_ + c / kWordBits];
    const Word mask = Word{1} << (c % kWordBits);
    w = value ? (w | mask) : (w & ~mask);
  }

  std::span<const Word> row(std::size_t r) const noexcept {
    return {data_.data() + r * words_per_row_, words_per_row_};
  }
  std::span<Word> row(std::size_t r) noexcept {
    return {data_.data() + r * words_per_row_, words_per_row_};
  }

  /// Appends a row; `words` must have words_per_row() entries with clean padding.
  void append_row(std::span<const Word> words);

  BitMatrix transposed() const;

  /// Number of set bits over the whole matrix.
  std::size_t popcount() const noexcept;

  friend bool operator==(const BitMatrix&, const BitMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::size_t words_per_row_ = 0;
  std::vector<Word> data_;
};

/// Number of pairwise-distinct rows.
std::size_t count_distinct_rows(const BitMatrix& m);

}  // namespace swapnas
