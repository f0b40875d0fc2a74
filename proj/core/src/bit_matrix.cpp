#include "swapnas/bit_matrix.hpp"

#include <algorithm>
#include <bit>
#include <cstring>

#include "swapnas/errors.hpp"
#include "swapnas/rng.hpp"

namespace swapnas {

void BitMatrix::append_row(std::span<const Word> words) {
  if (words.size() != words_per_row_) throw ContractError("append_row: word count mismatch");
  data_.insert(data_.end(), words.begin(), words.end());
  ++rows_;
}

BitMatrix BitMatrix::transposed() const {
  BitMatrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r) {
    const Word* src = data_.data() + r * words_per_row_;
    const std::size_t dst_word = r / kWordBits;
    const Word dst_bit = Word{1} << (r % kWordBits);
    for (std::size_t w = 0; w < words_per_row_; ++w) {
      Word bits = src[w];
      while (bits) {
        const std::size_t c = w * kWordBits + static_cast<std::size_t>(std::countr_zero(bits));
        t.data_[c * t.words_per_row_ + dst_word] |= dst_bit;
        bits &= bits - 1;
      }
    }
  }
  return t;
}

std::size_t BitMatrix::popcount() const noexcept {
  std::size_t n = 0;
  for (Word w : data_) n += static_cast<std::size_t>(std::popcount(w));
  return n;
}

namespace {

// Open-addressing set over row indices. Rows are compared word by word, so
// hash collisions never produce a wrong count.
class RowSet {
 public:
  RowSet(const BitMatrix& m, std::size_t expected)
      : m_(m), single_(m.words_per_row() == 1) {
    std::size_t cap = 16;
    while (cap < expected * 2) cap <<= 1;
    slots_.assign(cap, kEmpty);
    mask_ = cap - 1;
  }

  bool insert(std::size_t r) {
    if ((size_ + 1) * 2 > slots_.size()) grow();
    return insert_no_grow(r);
  }

  std::size_t size() const noexcept { return size_; }

 private:
  static constexpr std::size_t kEmpty = static_cast<std::size_t>(-1);

  std::uint64_t hash(std::size_t r) const noexcept {
    std::uint64_t h = 0x2545f4914f6cdd1dULL;
    for (BitMatrix::Word w : m_.row(r)) h = mix64(h ^ w);
    return h;
  }

  bool equal(std::size_t a, std::size_t b) const noexcept {
    if (single_) return m_.row(a)[0] == m_.row(b)[0];
    const auto ra = m_.row(a);
    const auto rb = m_.row(b);
    return std::memcmp(ra.data(), rb.data(), ra.size_bytes()) == 0;
  }

  bool insert_no_grow(std::size_t r) {
    std::size_t i = hash(r) & mask_;
    while (slots_[i] != kEmpty) {
      if (equal(slots_[i], r)) return false;
      i = (i + 1) & mask_;
    }
    slots_[i] = r;
    ++size_;
    return true;
  }

  void grow() {
    std::vector<std::size_t> old;
    old.swap(slots_);
    slots_.assign(old.size() * 2, kEmpty);
    mask_ = slots_.size() - 1;
    size_ = 0;
    for (std::size_t r : old)
      if (r != kEmpty) insert_no_grow(r);
  }

  const BitMatrix& m_;
  bool single_;
  std::vector<std::size_t> slots_;
  std::size_t mask_ = 0;
  std::size_t size_ = 0;
};

}  // namespace

std::size_t count_distinct_rows(const BitMatrix& m) {
  if (m.rows() == 0) return 0;
  // Distinct rows can never exceed 2^cols; start small when cols is tiny.
  std::size_t expected = m.rows();
  if (m.cols() < 20) expected = std::min<std::size_t>(expected, std::size_t{1} << m.cols());
  RowSet set(m, expected);
  for (std::size_t r = 0; r < m.rows(); ++r) set.insert(r);
  return set.size();
}

}  // namespace swapnas
