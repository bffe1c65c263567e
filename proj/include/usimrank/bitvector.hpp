#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace usimrank {

/// Fixed-size bit vector packed into 64-bit words; bits past size() stay zero.
class BitVector {
 public:
  using Word = std::uint64_t;
  static constexpr std::size_t kWordBits = 64;

  BitVector() = default;
  explicit BitVector(std::size_t bits, bool value = false) : bits_(bits), words_(word_count(bits), value ? ~Word{0} : 0) {
    trim();
  }

  static constexpr std::size_t word_count(std::size_t bits) { return (bits + kWordBits - 1) / kWordBits; }

  std::size_t size() const { return bits_; }
  std::span<const Word> words() const { return words_; }
  std::span<Word> words() { return words_; }

  bool test(std::size_t i) const { return words_[i / kWordBits] >> (i % kWordBits) & 1; }
  void set(std::size_t i) { words_[i / kWordBits] |= Word{1} << (i % kWordBits); }
  void reset(std::size_t i) { words_[i / kWordBits] &= ~(Word{1} << (i % kWordBits)); }

  bool any() const {
    for (Word w : words_)
      if (w) return true;
    return false;
  }

  std::size_t popcount() const {
    std::size_t c = 0;
    for (Word w : words_) c += static_cast<std::size_t>(std::popcount(w));
    return c;
  }

  BitVector& operator|=(const BitVector& o) {
    check(o);
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] |= o.words_[i];
    return *this;
  }
  BitVector& operator&=(const BitVector& o) {
    check(o);
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] &= o.words_[i];
    return *this;
  }
  friend BitVector operator&(BitVector a, const BitVector& b) { return a &= b; }
  friend BitVector operator|(BitVector a, const BitVector& b) { return a |= b; }
  friend bool operator==(const BitVector&, const BitVector&) = default;

 private:
  void check(const BitVector& o) const {
    if (o.bits_ != bits_) throw std::invalid_argument("bit vector sizes differ");
  }
  void trim() {
    if (bits_ % kWordBits) words_.back() &= (Word{1} << (bits_ % kWordBits)) - 1;
  }

  std::size_t bits_ = 0;
  std::vector<Word> words_;
};

/// popcount(a & b) over equally sized word spans.
inline std::size_t and_popcount(std::span<const BitVector::Word> a, std::span<const BitVector::Word> b) {
  if (a.size() != b.size()) throw std::invalid_argument("bit vector sizes differ");
  std::size_t c = 0;
  for (std::size_t i = 0; i < a.size(); ++i) c += static_cast<std::size_t>(std::popcount(a[i] & b[i]));
  return c;
}

}  // namespace usimrank
