#include "ormachine/io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string_view>
#include <unordered_map>

#include "ormachine/error.hpp"
#include "ormachine/rng.hpp"

namespace ormachine {

namespace fs = std::filesystem;

namespace {

constexpr std::array<char, 4> kMagic{'O', 'R', 'M', '1'};
constexpr std::uint32_t kSaltSplit = 0x40000010u;

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  return s;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  s = trim(s);
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

std::vector<std::string_view> split(std::string_view s, std::string_view delim) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = s.find(delim, start);
    if (pos == std::string_view::npos) {
      parts.push_back(s.substr(start));
      return parts;
    }
    parts.push_back(s.substr(start, pos - start));
    start = pos + delim.size();
  }
}

std::string format_double(double v, const char* fmt) {
  std::array<char, 64> buf{};
  std::snprintf(buf.data(), buf.size(), fmt, v);
  return buf.data();
}

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  return out;
}

std::ifstream open_in(const fs::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw DataError("cannot open '" + path.string() + "' for reading");
  return in;
}

void finish(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

void put_u64(std::ostream& out, std::uint64_t v) {
  std::array<char, 8> b{};
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(b.data(), b.size());
}

std::uint64_t get_u64(std::istream& in) {
  std::array<unsigned char, 8> b{};
  in.read(reinterpret_cast<char*>(b.data()), b.size());
  if (in.gcount() != 8) throw DataError("binary matrix: truncated header");
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

std::pair<std::size_t, std::size_t> read_csv_shape(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("csv matrix: missing 'rows,cols' header");
  const auto parts = split(trim(line), ",");
  std::size_t rows = 0;
  std::size_t cols = 0;
  if (parts.size() != 2 || !parse_number(parts[0], rows) || !parse_number(parts[1], cols) || rows == 0 || cols == 0) {
    throw DataError("csv matrix: malformed header '" + line + "'");
  }
  return {rows, cols};
}

}  // namespace

MatrixFormat format_for_path(const fs::path& path) {
  const std::string ext = path.extension().string();
  return ext == ".csv" || ext == ".txt" ? MatrixFormat::csv : MatrixFormat::binary;
}

void write_matrix_csv(std::ostream& out, const ObservedMatrix& x) {
  out << x.rows() << ',' << x.cols() << '\n';
  std::string line;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    line.clear();
    for (std::size_t c = 0; c < x.cols(); ++c) {
      if (c) line += ',';
      const Trit t = x(r, c);
      line += t == kMissing ? '?' : (t == kObservedOne ? '1' : '0');
    }
    out << line << '\n';
  }
}

ObservedMatrix read_matrix_csv(std::istream& in) {
  const auto [rows, cols] = read_csv_shape(in);
  std::vector<Trit> cells;
  cells.reserve(rows * cols);
  std::string line;
  for (std::size_t r = 0; r < rows; ++r) {
    if (!std::getline(in, line)) throw DataError("csv matrix: truncated, expected " + std::to_string(rows) + " rows");
    const auto parts = split(trim(line), ",");
    if (parts.size() != cols) {
      throw DataError("csv matrix: row " + std::to_string(r + 1) + " has " + std::to_string(parts.size()) +
                      " cells, expected " + std::to_string(cols));
    }
    for (auto p : parts) {
      p = trim(p);
      if (p == "0") cells.push_back(kObservedZero);
      else if (p == "1") cells.push_back(kObservedOne);
      else if (p == "?") cells.push_back(kMissing);
      else throw DataError("csv matrix: invalid cell '" + std::string(p) + "' in row " + std::to_string(r + 1));
    }
  }
  return ObservedMatrix(rows, cols, std::move(cells));
}

void write_matrix_binary(std::ostream& out, const ObservedMatrix& x) {
  out.write(kMagic.data(), kMagic.size());
  put_u64(out, x.rows());
  put_u64(out, x.cols());
  std::vector<char> payload(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const Trit t = x.cells()[i];
    payload[i] = static_cast<char>(t == kMissing ? 2 : (t == kObservedOne ? 1 : 0));
  }
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
}

ObservedMatrix read_matrix_binary(std::istream& in) {
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (in.gcount() != 4 || magic != kMagic) throw DataError("binary matrix: bad magic (expected ORM1)");
  const std::uint64_t rows = get_u64(in);
  const std::uint64_t cols = get_u64(in);
  if (rows == 0 || cols == 0 || rows > (std::uint64_t{1} << 40) / cols) {
    throw DataError("binary matrix: implausible shape " + std::to_string(rows) + "x" + std::to_string(cols));
  }
  std::vector<char> payload(rows * cols);
  in.read(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (static_cast<std::uint64_t>(in.gcount()) != payload.size()) {
    throw DataError("binary matrix: truncated payload (" + std::to_string(in.gcount()) + " of " +
                    std::to_string(payload.size()) + " bytes)");
  }
  std::vector<Trit> cells(payload.size());
  for (std::size_t i = 0; i < payload.size(); ++i) {
    switch (payload[i]) {
      case 0: cells[i] = kObservedZero; break;
      case 1: cells[i] = kObservedOne; break;
      case 2: cells[i] = kMissing; break;
      default: throw DataError("binary matrix: invalid cell byte at offset " + std::to_string(20 + i));
    }
  }
  return ObservedMatrix(rows, cols, std::move(cells));
}

void save_matrix(const fs::path& path, const ObservedMatrix& x, MatrixFormat format) {
  auto out = open_out(path, format == MatrixFormat::binary ? std::ios::out | std::ios::binary : std::ios::out);
  if (format == MatrixFormat::csv) write_matrix_csv(out, x);
  else write_matrix_binary(out, x);
  finish(out, path);
}

void save_matrix(const fs::path& path, const ObservedMatrix& x) { save_matrix(path, x, format_for_path(path)); }

void save_matrix(const fs::path& path, const BinaryMatrix& x) {
  save_matrix(path, ObservedMatrix::from_binary(x), format_for_path(path));
}

ObservedMatrix load_matrix(const fs::path& path, MatrixFormat format) {
  auto in = open_in(path, format == MatrixFormat::binary ? std::ios::in | std::ios::binary : std::ios::in);
  try {
    return format == MatrixFormat::csv ? read_matrix_csv(in) : read_matrix_binary(in);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

ObservedMatrix load_matrix(const fs::path& path) { return load_matrix(path, format_for_path(path)); }

BinaryMatrix load_binary_matrix(const fs::path& path) {
  const ObservedMatrix x = load_matrix(path);
  if (x.missing_count() > 0) throw DataError(path.string() + ": expected a fully observed matrix");
  return x.to_binary();
}

void write_real_csv(std::ostream& out, const RealMatrix& m) {
  out << m.rows() << ',' << m.cols() << '\n';
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (c) out << ',';
      out << format_double(m(r, c), "%.6f");
    }
    out << '\n';
  }
}

RealMatrix read_real_csv(std::istream& in) {
  const auto [rows, cols] = read_csv_shape(in);
  RealMatrix m(rows, cols);
  std::string line;
  for (std::size_t r = 0; r < rows; ++r) {
    if (!std::getline(in, line)) throw DataError("csv real matrix: truncated");
    const auto parts = split(trim(line), ",");
    if (parts.size() != cols) throw DataError("csv real matrix: wrong cell count in row " + std::to_string(r + 1));
    for (std::size_t c = 0; c < cols; ++c) {
      double v = 0.0;
      if (!parse_number(parts[c], v)) throw DataError("csv real matrix: invalid number in row " + std::to_string(r + 1));
      m(r, c) = v;
    }
  }
  return m;
}

void write_key_values(const fs::path& path, const KeyValues& kv) {
  auto out = open_out(path);
  for (const auto& [k, v] : kv) out << k << '=' << v << '\n';
  finish(out, path);
}

std::map<std::string, std::string> read_key_values(const fs::path& path) {
  auto in = open_in(path);
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected key=value");
    kv[line.substr(0, eq)] = std::string(trim(std::string_view(line).substr(eq + 1)));
  }
  return kv;
}

void save_summary(const fs::path& dir, const PosteriorSummary& s, const std::string& prefix, const KeyValues& extra) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create directory '" + dir.string() + "': " + ec.message());

  const auto write_real = [&](const std::string& name, const RealMatrix& m) {
    const fs::path p = dir / (prefix + name);
    auto out = open_out(p);
    write_real_csv(out, m);
    finish(out, p);
  };
  write_real("z_mean.csv", s.z_mean);
  write_real("u_mean.csv", s.u_mean);
  save_matrix(dir / (prefix + "z_map.csv"), s.z_map);
  save_matrix(dir / (prefix + "u_map.csv"), s.u_map);
  save_matrix(dir / (prefix + "z_map.orm"), s.z_map);
  save_matrix(dir / (prefix + "u_map.orm"), s.u_map);
  {
    const fs::path p = dir / (prefix + "lambda_trace.txt");
    auto out = open_out(p);
    for (double l : s.lambda_trace) out << format_double(l, "%.17g") << '\n';
    finish(out, p);
  }
  const SamplerConfig& c = s.config;
  KeyValues kv{
      {"rows", std::to_string(s.z_mean.rows())},
      {"cols", std::to_string(s.u_mean.rows())},
      {"width", std::to_string(s.z_mean.cols())},
      {"seed", std::to_string(c.seed)},
      {"burn_in", std::to_string(c.burn_in)},
      {"burn_in_sweeps", std::to_string(s.burn_in_sweeps)},
      {"samples", std::to_string(c.samples)},
      {"n_samples", std::to_string(s.n_samples)},
      {"prior_z", format_double(c.prior_z.p(), "%.17g")},
      {"prior_u", format_double(c.prior_u.p(), "%.17g")},
      {"lambda", format_double(s.lambda, "%.17g")},
      {"sigma_lambda", format_double(sigmoid(s.lambda), "%.17g")},
      {"lambda_init", format_double(c.lambda_init, "%.17g")},
      {"lambda_max", format_double(c.lambda_max, "%.17g")},
      {"lambda_update", c.lambda_update ? "true" : "false"},
      {"convergence_tol", format_double(c.convergence_tol, "%.17g")},
      {"convergence_patience", std::to_string(c.convergence_patience)},
      {"freeze_codes", c.freeze_codes ? "true" : "false"},
      {"stream_salt", std::to_string(c.stream_salt)},
  };
  kv.insert(kv.end(), extra.begin(), extra.end());
  write_key_values(dir / (prefix + "report.txt"), kv);
}

PosteriorSummary load_summary(const fs::path& dir, const std::string& prefix) {
  PosteriorSummary s;
  const auto read_real = [&](const std::string& name) {
    const fs::path p = dir / (prefix + name);
    auto in = open_in(p);
    try {
      return read_real_csv(in);
    } catch (const DataError& e) {
      throw DataError(p.string() + ": " + e.what());
    }
  };
  s.z_mean = read_real("z_mean.csv");
  s.u_mean = read_real("u_mean.csv");
  s.z_map = load_binary_matrix(dir / (prefix + "z_map.orm"));
  s.u_map = load_binary_matrix(dir / (prefix + "u_map.orm"));
  {
    auto in = open_in(dir / (prefix + "lambda_trace.txt"));
    std::string line;
    while (std::getline(in, line)) {
      double v = 0.0;
      if (!trim(line).empty() && parse_number(line, v)) s.lambda_trace.push_back(v);
    }
  }
  const auto kv = read_key_values(dir / (prefix + "report.txt"));
  const auto get = [&](const std::string& key) {
    const auto it = kv.find(key);
    if (it == kv.end()) throw DataError("summary report lacks '" + key + "'");
    return it->second;
  };
  s.lambda = std::stod(get("lambda"));
  s.n_samples = std::stoul(get("n_samples"));
  s.burn_in_sweeps = std::stoul(get("burn_in_sweeps"));
  s.config.seed = std::stoull(get("seed"));
  s.config.burn_in = std::stoul(get("burn_in"));
  s.config.samples = std::stoul(get("samples"));
  s.config.prior_z = BernoulliPrior(std::stod(get("prior_z")));
  s.config.prior_u = BernoulliPrior(std::stod(get("prior_u")));
  s.config.lambda_max = std::stod(get("lambda_max"));
  return s;
}

MovieLensFormat parse_movielens_format(const std::string& name) {
  if (name == "100k") return MovieLensFormat::ml100k;
  if (name == "1m") return MovieLensFormat::ml1m;
  throw std::invalid_argument("unknown MovieLens format '" + name + "' (expected 100k or 1m)");
}

double RatingsTable::global_mean() const {
  if (ratings.empty()) throw std::invalid_argument("global_mean: empty ratings table");
  double sum = 0.0;
  for (const auto& r : ratings) sum += r.rating;
  return sum / static_cast<double>(ratings.size());
}

RatingsTable parse_movielens(std::istream& in, MovieLensFormat format) {
  const std::string_view delim = format == MovieLensFormat::ml100k ? "\t" : "::";
  RatingsTable table;
  std::unordered_map<std::int64_t, std::size_t> users;
  std::unordered_map<std::int64_t, std::size_t> items;
  std::unordered_map<std::uint64_t, std::size_t> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto parts = split(trim(line), delim);
    std::int64_t user = 0;
    std::int64_t item = 0;
    int rating = 0;
    if (parts.size() < 3 || !parse_number(parts[0], user) || !parse_number(parts[1], item) ||
        !parse_number(parts[2], rating)) {
      throw DataError("MovieLens line " + std::to_string(lineno) + ": malformed record '" + line + "'");
    }
    if (rating < 1 || rating > 5) {
      throw DataError("MovieLens line " + std::to_string(lineno) + ": rating " + std::to_string(rating) +
                      " outside 1..5");
    }
    const auto [uit, unew] = users.try_emplace(user, table.user_ids.size());
    if (unew) table.user_ids.push_back(user);
    const auto [iit, inew] = items.try_emplace(item, table.item_ids.size());
    if (inew) table.item_ids.push_back(item);
    const std::uint64_t key = (static_cast<std::uint64_t>(uit->second) << 32) | iit->second;
    const auto [sit, fresh] = seen.try_emplace(key, table.ratings.size());
    if (fresh) {
      table.ratings.push_back({uit->second, iit->second, rating});
    } else {
      table.ratings[sit->second].rating = rating;
      ++table.duplicates;
    }
  }
  return table;
}

RatingsTable load_movielens(const fs::path& path, MovieLensFormat format) {
  fs::path file = path;
  if (fs::is_directory(path)) file = path / (format == MovieLensFormat::ml100k ? "u.data" : "ratings.dat");
  auto in = open_in(file);
  try {
    return parse_movielens(in, format);
  } catch (const DataError& e) {
    throw DataError(file.string() + ": " + e.what());
  }
}

ObservedMatrix binarize_global_mean(const RatingsTable& table) {
  const double mean = table.global_mean();
  ObservedMatrix x(table.users(), table.items());
  for (const auto& r : table.ratings) {
    x.set(r.user, r.item, static_cast<double>(r.rating) > mean ? kObservedOne : kObservedZero);
  }
  return x;
}

ObservedSplit observe_fraction_split(const ObservedMatrix& x, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw std::invalid_argument("observe_fraction_split: fraction must lie in (0, 1)");
  std::vector<Cell> observed;
  observed.reserve(x.observed_count());
  for (std::size_t n = 0; n < x.rows(); ++n)
    for (std::size_t d = 0; d < x.cols(); ++d)
      if (!x.is_missing(n, d)) observed.push_back({n, d});
  const auto keep = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(observed.size())));
  if (keep == 0 || keep == observed.size()) {
    throw std::invalid_argument("observe_fraction_split: split of " + std::to_string(observed.size()) +
                                " observed cells at fraction " + std::to_string(fraction) + " leaves one side empty");
  }
  std::vector<std::size_t> order(observed.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  CounterStream rng(seed, stream_tag(kSaltSplit, StreamMatrix::latent), 0, 0);
  for (std::size_t i = 0; i < keep; ++i) {
    std::swap(order[i], order[i + static_cast<std::size_t>(rng.below(order.size() - i))]);
  }
  std::vector<Bit> in_train(observed.size(), 0);
  for (std::size_t i = 0; i < keep; ++i) in_train[order[i]] = 1;

  ObservedSplit out{x, {}, {}};
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (in_train[i]) continue;
    const Cell c = observed[i];
    out.test_cells.push_back(c);
    out.test_truth.push_back(x(c.row, c.col) == kObservedOne ? 1 : 0);
    out.train.set(c.row, c.col, kMissing);
  }
  return out;
}

std::string file_digest(const fs::path& path) {
  auto in = open_in(path, std::ios::in | std::ios::binary);
  std::uint64_t h = 0xcbf29ce484222325ull;
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[static_cast<std::size_t>(i)]);
      h *= 0x100000001b3ull;
    }
  }
  std::array<char, 17> hex{};
  std::snprintf(hex.data(), hex.size(), "%016llx", static_cast<unsigned long long>(h));
  return hex.data();
}

}  // namespace ormachine
