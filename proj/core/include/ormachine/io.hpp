#pragma once

// Dataset ingestion and persistence.
//
// Matrix files come in two formats:
//   * CSV: first line "rows,cols", then one line per row with cells in {0,1,?}
//     ('?' = missing).
//   * Compact binary: magic "ORM1", little-endian u64 rows, u64 cols, then one
//     byte per cell in {0,1,2} (2 = missing), row-major. Size is 20 + N*D bytes.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "ormachine/model.hpp"
#include "ormachine/sampler.hpp"

namespace ormachine {

enum class MatrixFormat : std::uint8_t { csv, binary };

/// csv for ".csv" / ".txt", binary otherwise.
MatrixFormat format_for_path(const std::filesystem::path& path);

void write_matrix_csv(std::ostream& out, const ObservedMatrix& x);
void write_matrix_binary(std::ostream& out, const ObservedMatrix& x);
/// Throw DataError on a corrupt header, bad magic, bad cell or truncated payload.
ObservedMatrix read_matrix_csv(std::istream& in);
ObservedMatrix read_matrix_binary(std::istream& in);

void save_matrix(const std::filesystem::path& path, const ObservedMatrix& x);
void save_matrix(const std::filesystem::path& path, const ObservedMatrix& x, MatrixFormat format);
void save_matrix(const std::filesystem::path& path, const BinaryMatrix& x);
ObservedMatrix load_matrix(const std::filesystem::path& path);
ObservedMatrix load_matrix(const std::filesystem::path& path, MatrixFormat format);
/// Loads a fully observed matrix; throws DataError if any cell is missing.
BinaryMatrix load_binary_matrix(const std::filesystem::path& path);

void write_real_csv(std::ostream& out, const RealMatrix& m);
RealMatrix read_real_csv(std::istream& in);

/// Ordered key/value report: one "key=value" line per entry.
using KeyValues = std::vector<std::pair<std::string, std::string>>;
void write_key_values(const std::filesystem::path& path, const KeyValues& kv);
std::map<std::string, std::string> read_key_values(const std::filesystem::path& path);

/// Files written under `dir`, each name prefixed with `prefix`:
///   z_mean.csv, u_mean.csv          posterior means, 6 decimals
///   z_map.csv / .orm, u_map.*       MAP factors in both matrix formats
///   lambda_trace.txt                one lambda per sweep
///   report.txt                      configuration and dimensions (key=value)
/// Throws DataError with the offending path on I/O failure.
void save_summary(const std::filesystem::path& dir, const PosteriorSummary& summary,
                  const std::string& prefix = "", const KeyValues& extra = {});

/// Reads back posterior means, MAP factors and lambda written by save_summary.
PosteriorSummary load_summary(const std::filesystem::path& dir, const std::string& prefix = "");

enum class MovieLensFormat : std::uint8_t { ml100k, ml1m };

/// "100k" or "1m"; throws std::invalid_argument otherwise.
MovieLensFormat parse_movielens_format(const std::string& name);

struct Rating {
  std::size_t user = 0;  // contiguous index
  std::size_t item = 0;  // contiguous index
  int rating = 0;
};

struct RatingsTable {
  std::vector<Rating> ratings;
  /// index -> original id, in order of first appearance.
  std::vector<std::int64_t> user_ids;
  std::vector<std::int64_t> item_ids;
  /// (user, item) pairs seen more than once; the last rating was kept.
  std::size_t duplicates = 0;

  std::size_t users() const noexcept { return user_ids.size(); }
  std::size_t items() const noexcept { return item_ids.size(); }
  double global_mean() const;
};

/// 100k lines: "user<TAB>item<TAB>rating<TAB>timestamp";
/// 1m lines: "user::item::rating::timestamp". Throws DataError naming the
/// line number of the first malformed line.
RatingsTable parse_movielens(std::istream& in, MovieLensFormat format);
/// `path` may be the ratings file or the dataset directory (u.data / ratings.dat).
RatingsTable load_movielens(const std::filesystem::path& path, MovieLensFormat format);

/// users x items: +1 above the global mean, -1 at or below it, 0 unrated.
/// Throws std::invalid_argument on an empty table.
ObservedMatrix binarize_global_mean(const RatingsTable& table);

struct ObservedSplit {
  ObservedMatrix train;
  std::vector<Cell> test_cells;
  std::vector<Bit> test_truth;
};

/// Uniform split of the observed cells: train keeps round(fraction * observed),
/// the rest are held out with their values. Throws std::invalid_argument if
/// either side would be empty.
ObservedSplit observe_fraction_split(const ObservedMatrix& x, double fraction, std::uint64_t seed);

/// FNV-1a 64-bit digest of a file's bytes, as 16 hex digits.
std::string file_digest(const std::filesystem::path& path);

}  // namespace ormachine
