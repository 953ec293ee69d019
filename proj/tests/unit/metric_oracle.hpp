#pragma once

// Brute-force LCS by subsequence enumeration, for checking the DP metrics.
//
// Every sequence over a 4-letter alphabet of length <= kMaxLen gets a code,
// shortest first. For each sequence the set of codes of all its subsequences
// is stored as a bitset; the LCS of two sequences is the length of the
// longest code present in both sets.

#include <bit>
#include <cstdint>
#include <string>
#include <vector>

#include <boost/rational.hpp>

namespace embexp::testing {

class SubsequenceOracle {
 public:
  static constexpr int kAlphabet = 4;

  explicit SubsequenceOracle(int max_len) {
    offsets_.push_back(0);
    int total = 0;
    for (int k = 0, n = 1; k <= max_len; ++k, n *= kAlphabet) {
      total += n;
      offsets_.push_back(total);
    }
    words_ = (static_cast<std::size_t>(total) + 63) / 64;
    for (int k = 0; k <= max_len; ++k) {
      for (int v = 0, n = count(k); v < n; ++v) {
        std::vector<int> seq(static_cast<std::size_t>(k));
        for (int i = k - 1, x = v; i >= 0; --i, x /= kAlphabet) seq[static_cast<std::size_t>(i)] = x % kAlphabet;
        seqs_.push_back(seq);
      }
    }
    bits_.assign(seqs_.size() * words_, 0);
    for (std::size_t s = 0; s < seqs_.size(); ++s) {
      const auto& seq = seqs_[s];
      const auto n = seq.size();
      for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        std::vector<int> sub;
        for (std::size_t i = 0; i < n; ++i) {
          if (mask & (1u << i)) sub.push_back(seq[i]);
        }
        const auto c = code(sub);
        bits_[s * words_ + c / 64] |= std::uint64_t{1} << (c % 64);
      }
    }
  }

  std::size_t size() const { return seqs_.size(); }
  const std::vector<int>& sequence(std::size_t i) const { return seqs_[i]; }

  std::vector<std::string> tokens(std::size_t i) const {
    std::vector<std::string> out;
    for (int x : seqs_[i]) out.emplace_back(1, static_cast<char>('a' + x));
    return out;
  }

  /// Length of the longest common subsequence of sequences i and j.
  int lcs(std::size_t i, std::size_t j) const {
    const auto* a = &bits_[i * words_];
    const auto* b = &bits_[j * words_];
    for (std::size_t w = words_; w-- > 0;) {
      const auto both = a[w] & b[w];
      if (both == 0) continue;
      const int c = static_cast<int>(w * 64 + 63 - static_cast<std::size_t>(std::countl_zero(both)));
      int k = 0;
      while (offsets_[static_cast<std::size_t>(k) + 1] <= c) ++k;
      return k;
    }
    return 0;
  }

 private:
  int count(int k) const { return offsets_[static_cast<std::size_t>(k) + 1] - offsets_[static_cast<std::size_t>(k)]; }

  std::size_t code(const std::vector<int>& seq) const {
    int v = 0;
    for (int x : seq) v = v * kAlphabet + x;
    return static_cast<std::size_t>(offsets_[seq.size()] + v);
  }

  std::vector<int> offsets_;
  std::size_t words_ = 0;
  std::vector<std::vector<int>> seqs_;
  std::vector<std::uint64_t> bits_;
};

/// LCS F1 from its definition in exact rational arithmetic, rounded once.
inline double f1_from_lcs(int lcs, std::size_t cand, std::size_t ref) {
  using Q = boost::rational<std::int64_t>;
  if (cand == 0 && ref == 0) return 1.0;
  if (cand == 0 || ref == 0 || lcs == 0) return 0.0;
  const Q p(lcs, static_cast<std::int64_t>(cand));
  const Q r(lcs, static_cast<std::int64_t>(ref));
  const Q f = Q(2) * p * r / (p + r);
  return static_cast<double>(f.numerator()) / static_cast<double>(f.denominator());
}

}  // namespace embexp::testing
