#pragma once

// Bit-packed views used by the sweep kernel. A data row is split into two
// 64-bit planes (observed ones, observed zeros); each factor column becomes a
// mask over the rows of that factor. The evidence sum for one entry is then
//
//   popcount(code & ~cover & pos) - popcount(code & ~cover & neg)
//
// where cover is the OR of the other active codes of the row. This is the
// same quantity as conditional_score() with both skip rules applied wordwise.

#include <bit>
#include <cstdint>
#include <span>
#include <vector>

#include "ormachine/model.hpp"
#include "ormachine/rng.hpp"

namespace ormachine::detail {

inline std::size_t words_for(std::size_t bits) noexcept { return (bits + 63) / 64; }

struct SignedPlanes {
  std::size_t rows = 0;
  std::size_t words = 0;
  std::vector<std::uint64_t> pos;
  std::vector<std::uint64_t> neg;

  const std::uint64_t* pos_row(std::size_t r) const noexcept { return pos.data() + r * words; }
  const std::uint64_t* neg_row(std::size_t r) const noexcept { return neg.data() + r * words; }
};

/// Planes per row of x, spanning its columns.
SignedPlanes pack_rows(const ObservedMatrix& x);
/// Planes per column of x, spanning its rows.
SignedPlanes pack_cols(const ObservedMatrix& x);

/// One mask per factor column l; bit r is set iff f(r, l) = 1.
struct ColumnMasks {
  std::size_t width = 0;
  std::size_t words = 0;
  std::vector<std::uint64_t> bits;
  std::vector<std::uint8_t> nonempty;

  const std::uint64_t* mask(std::size_t l) const noexcept { return bits.data() + l * words; }
};

ColumnMasks pack_factor(const BinaryMatrix& f);

/// Evidence sum for entry l of `row` against the data planes of that row.
/// `scratch` must hold at least masks.width pointers.
inline int packed_score(const std::uint64_t* pos, const std::uint64_t* neg, const ColumnMasks& masks,
                        std::span<const Bit> row, std::size_t l, const std::uint64_t** scratch) noexcept {
  if (!masks.nonempty[l]) return 0;
  std::size_t active = 0;
  for (std::size_t k = 0; k < masks.width; ++k) {
    if (k != l && row[k] && masks.nonempty[k]) scratch[active++] = masks.mask(k);
  }
  const std::uint64_t* code = masks.mask(l);
  int score = 0;
  for (std::size_t w = 0; w < masks.words; ++w) {
    std::uint64_t cover = 0;
    for (std::size_t k = 0; k < active; ++k) cover |= scratch[k][w];
    const std::uint64_t live = code[w] & ~cover;
    score += std::popcount(live & pos[w]) - std::popcount(live & neg[w]);
  }
  return score;
}

/// Correct predictions of the rows of `planes` under factor `f` and the
/// masks of the opposite factor.
std::size_t packed_correct(const SignedPlanes& planes, const BinaryMatrix& f, const ColumnMasks& masks,
                           unsigned threads);

struct PackedWorkspace {
  SignedPlanes by_row;
  SignedPlanes by_col;
};

}  // namespace ormachine::detail
