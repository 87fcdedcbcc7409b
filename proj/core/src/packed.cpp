#include "packed.hpp"

#include <algorithm>

namespace ormachine::detail {

SignedPlanes pack_rows(const ObservedMatrix& x) {
  SignedPlanes p;
  p.rows = x.rows();
  p.words = words_for(x.cols());
  p.pos.assign(p.rows * p.words, 0);
  p.neg.assign(p.rows * p.words, 0);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto row = x.row(r);
    for (std::size_t c = 0; c < x.cols(); ++c) {
      const std::uint64_t bit = std::uint64_t{1} << (c % 64);
      if (row[c] == kObservedOne) p.pos[r * p.words + c / 64] |= bit;
      else if (row[c] == kObservedZero) p.neg[r * p.words + c / 64] |= bit;
    }
  }
  return p;
}

SignedPlanes pack_cols(const ObservedMatrix& x) {
  SignedPlanes p;
  p.rows = x.cols();
  p.words = words_for(x.rows());
  p.pos.assign(p.rows * p.words, 0);
  p.neg.assign(p.rows * p.words, 0);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto row = x.row(r);
    const std::uint64_t bit = std::uint64_t{1} << (r % 64);
    for (std::size_t c = 0; c < x.cols(); ++c) {
      if (row[c] == kObservedOne) p.pos[c * p.words + r / 64] |= bit;
      else if (row[c] == kObservedZero) p.neg[c * p.words + r / 64] |= bit;
    }
  }
  return p;
}

ColumnMasks pack_factor(const BinaryMatrix& f) {
  ColumnMasks m;
  m.width = f.cols();
  m.words = words_for(f.rows());
  m.bits.assign(m.width * m.words, 0);
  m.nonempty.assign(m.width, 0);
  for (std::size_t r = 0; r < f.rows(); ++r) {
    const auto row = f.row(r);
    for (std::size_t l = 0; l < m.width; ++l) {
      if (row[l]) {
        m.bits[l * m.words + r / 64] |= std::uint64_t{1} << (r % 64);
        m.nonempty[l] = 1;
      }
    }
  }
  return m;
}

std::size_t packed_correct(const SignedPlanes& planes, const BinaryMatrix& f, const ColumnMasks& masks,
                           unsigned threads) {
  const auto rows = static_cast<std::ptrdiff_t>(planes.rows);
  const std::size_t words = planes.words;
  std::size_t correct = 0;
#pragma omp parallel num_threads(threads) reduction(+ : correct)
  {
    std::vector<std::uint64_t> predicted(words);
#pragma omp for schedule(static)
    for (std::ptrdiff_t r = 0; r < rows; ++r) {
      std::fill(predicted.begin(), predicted.end(), 0);
      const auto row = f.row(static_cast<std::size_t>(r));
      for (std::size_t l = 0; l < masks.width; ++l) {
        if (!row[l]) continue;
        const std::uint64_t* code = masks.mask(l);
        for (std::size_t w = 0; w < words; ++w) predicted[w] |= code[w];
      }
      const std::uint64_t* pos = planes.pos_row(static_cast<std::size_t>(r));
      const std::uint64_t* neg = planes.neg_row(static_cast<std::size_t>(r));
      for (std::size_t w = 0; w < words; ++w) {
        correct += static_cast<std::size_t>(std::popcount(predicted[w] & pos[w]) +
                                            std::popcount(~predicted[w] & neg[w]));
      }
    }
  }
  return correct;
}

}  // namespace ormachine::detail
