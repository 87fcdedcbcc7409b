#include "cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "experiments.hpp"
#include "manifest.hpp"
#include "ormachine/ormachine.hpp"

namespace ormachine::cli {

namespace fs = std::filesystem;

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string join(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + num(v[i]);
  return s;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

void emit_metrics(const fs::path& path, const KeyValues& metrics, std::ostream& out) {
  write_key_values(path, metrics);
  for (const auto& [k, v] : metrics) out << k << '=' << v << '\n';
}

// Shared sampler flags.
struct SamplerFlags {
  std::size_t burn_in = 100;
  std::size_t samples = 100;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  bool fast = false;
  std::optional<double> prior_z;
  std::optional<double> prior_u;

  void attach(CLI::App* app, bool priors) {
    app->add_option("--burn-in", burn_in, "Burn-in sweeps")->capture_default_str();
    app->add_option("--samples", samples, "Posterior sample sweeps")->capture_default_str()->check(CLI::PositiveNumber);
    app->add_option("--seed", seed, "Random seed")->capture_default_str();
    app->add_option("--threads", threads, "Worker threads (0 = all cores)")->capture_default_str();
    app->add_flag("--fast", fast, "20 burn-in and 20 sample sweeps");
    if (priors) {
      app->add_option("--prior-z", prior_z, "Bernoulli prior of Z (default: from data density)")
          ->check(CLI::Range(0.0, 1.0));
      app->add_option("--prior-u", prior_u, "Bernoulli prior of U (default: from data density)")
          ->check(CLI::Range(0.0, 1.0));
    }
  }

  SamplerConfig config(const ObservedMatrix& x, std::size_t width) const {
    SamplerConfig cfg;
    cfg.burn_in = fast ? 20 : burn_in;
    cfg.samples = fast ? 20 : samples;
    cfg.seed = seed;
    cfg.threads = threads;
    const BernoulliPrior eb = empirical_bayes_prior(x, width);
    cfg.prior_z = prior_z ? BernoulliPrior(*prior_z) : eb;
    cfg.prior_u = prior_u ? BernoulliPrior(*prior_u) : eb;
    return cfg;
  }

  void record(RunManifest& m) const {
    m.config("burn_in", std::to_string(fast ? 20 : burn_in));
    m.config("samples", std::to_string(fast ? 20 : samples));
    m.config("seed", std::to_string(seed));
    m.config("threads", std::to_string(threads));
    m.config("fast", fast ? "true" : "false");
    m.config("prior_z", prior_z ? num(*prior_z) : "empirical");
    m.config("prior_u", prior_u ? num(*prior_u) : "empirical");
  }
};

// ---------------------------------------------------------------- simulate

struct SimulateOptions {
  std::size_t n = 100, d = 100, rank = 5;
  double density = 0.5, flip = 0.0, observe = 1.0;
  std::uint64_t seed = 0;
  std::string out;
  std::string format = "csv";
};

int cmd_simulate(const SimulateOptions& o, std::ostream& out) {
  RunManifest m("simulate");
  m.config("n", std::to_string(o.n));
  m.config("d", std::to_string(o.d));
  m.config("rank", std::to_string(o.rank));
  m.config("density", num(o.density));
  m.config("flip", num(o.flip));
  m.config("observe", num(o.observe));
  m.config("seed", std::to_string(o.seed));
  m.config("format", o.format);

  SyntheticSpec spec;
  spec.rows = o.n;
  spec.cols = o.d;
  spec.width = o.rank;
  spec.target_density = o.density;
  spec.flip_prob = o.flip;
  spec.observed_fraction = o.observe;
  spec.seed = o.seed;
  spec.validate();

  const auto data = m.timed("generate", [&] { return gen_random_boolean(spec); });
  const auto noisy = m.timed("noise", [&] { return apply_bitflip_noise(data.clean, o.flip, o.seed + 1); });
  const auto masked = m.timed("mask", [&] { return mask_random(noisy, o.observe, o.seed + 2); });

  const fs::path dir(o.out);
  fs::create_directories(dir);
  const std::string ext = o.format == "csv" ? ".csv" : ".orm";
  const std::vector<std::pair<std::string, ObservedMatrix>> files{
      {"clean", ObservedMatrix::from_binary(data.clean)},
      {"noisy", ObservedMatrix::from_binary(noisy)},
      {"masked", masked.observed},
      {"z_true", ObservedMatrix::from_binary(data.z)},
      {"u_true", ObservedMatrix::from_binary(data.u)},
  };
  m.timed("write", [&] {
    for (const auto& [name, matrix] : files) {
      const fs::path p = dir / (name + ext);
      save_matrix(p, matrix);
      m.output(name, p);
    }
  });
  m.write(dir / "manifest.txt");
  out << "wrote " << files.size() << " matrices to " << dir.string() << '\n';
  out << "clean=" << o.n << 'x' << o.d << " density=" << num(static_cast<double>(data.clean.count_ones()) / data.clean.size())
      << " observed=" << masked.observed.observed_count() << '\n';
  return kExitOk;
}

// --------------------------------------------------------------- factorize

struct FactorizeOptions {
  std::string in;
  std::string truth;
  std::string out;
  std::size_t rank = 0;
  std::vector<std::size_t> layers;
  std::vector<double> code_priors;
  std::string freeze_codes;
  SamplerFlags sampler;
};

int cmd_factorize(const FactorizeOptions& o, std::ostream& out) {
  RunManifest m("factorize");
  const ObservedMatrix x = m.timed("load", [&] { return load_matrix(o.in); });
  m.input("data", o.in);
  std::optional<BinaryMatrix> truth;
  if (!o.truth.empty()) {
    truth = load_binary_matrix(o.truth);
    m.input("truth", o.truth);
    if (truth->rows() != x.rows() || truth->cols() != x.cols()) {
      throw DataError("truth shape does not match the input matrix");
    }
  }

  const std::vector<std::size_t> widths = o.layers.empty() ? std::vector<std::size_t>{o.rank} : o.layers;
  if (widths.empty() || widths.front() < 1) throw std::invalid_argument("--rank must be >= 1");
  if (!o.layers.empty() && o.rank != 0 && o.rank != o.layers.front()) {
    throw std::invalid_argument("--rank disagrees with the first entry of --layers");
  }
  m.config("rank", std::to_string(widths.front()));
  m.config("layers", join(widths));
  o.sampler.record(m);

  SamplerConfig cfg = o.sampler.config(x, widths.front());
  const fs::path dir(o.out);
  fs::create_directories(dir);
  KeyValues metrics;
  std::vector<PosteriorSummary> layers;

  if (!o.freeze_codes.empty()) {
    if (widths.size() != 1) throw std::invalid_argument("--freeze-codes applies to a single layer");
    const BinaryMatrix codes = load_binary_matrix(o.freeze_codes);
    m.input("codes", o.freeze_codes);
    if (codes.rows() != x.cols() || codes.cols() != widths.front()) {
      throw DataError("code matrix must be " + std::to_string(x.cols()) + "x" + std::to_string(widths.front()));
    }
    cfg.freeze_codes = true;
    m.config("freeze_codes", o.freeze_codes);
    SamplerState state(x, widths.front(), cfg);
    state.set_codes(codes);
    layers.push_back(m.timed("sample", [&] { return run(state); }));
  } else if (widths.size() == 1 && o.code_priors.empty()) {
    layers.push_back(m.timed("sample", [&] { return run(x, widths.front(), cfg); }));
  } else {
    Architecture arch;
    arch.widths = widths;
    std::vector<double> priors = o.code_priors;
    if (priors.empty()) priors.assign(widths.size(), cfg.prior_u.p());
    for (double p : priors) arch.code_priors.emplace_back(p);
    m.config("code_priors", join(priors));
    const auto stack = m.timed("sample", [&] { return train_stack(x, arch, cfg); });
    layers = stack.layers;
    metrics.emplace_back("lambdas", join(stack.lambdas()));
  }

  const PosteriorSummary& bottom = layers.front();
  const BinaryMatrix estimate = reconstruct(bottom);
  std::size_t agree = 0;
  for (std::size_t n = 0; n < x.rows(); ++n)
    for (std::size_t d = 0; d < x.cols(); ++d)
      if (!x.is_missing(n, d)) agree += to_signed(estimate(n, d)) == x(n, d);

  metrics.emplace_back("rows", std::to_string(x.rows()));
  metrics.emplace_back("cols", std::to_string(x.cols()));
  metrics.emplace_back("observed", std::to_string(x.observed_count()));
  metrics.emplace_back("lambda", num(bottom.lambda));
  metrics.emplace_back("sigma_lambda", num(sigmoid(bottom.lambda)));
  metrics.emplace_back("burn_in_sweeps", std::to_string(bottom.burn_in_sweeps));
  metrics.emplace_back("fraction_correct",
                       x.observed_count() ? num(static_cast<double>(agree) / x.observed_count()) : "nan");
  if (truth) metrics.emplace_back("reconstruction_error", num(reconstruction_error(*truth, estimate)));

  m.timed("write", [&] {
    for (std::size_t k = 0; k < layers.size(); ++k) {
      const std::string prefix = layers.size() == 1 ? "" : "layer" + std::to_string(k) + "_";
      save_summary(dir, layers[k], prefix, {{"layer", std::to_string(k)}});
      m.output("summary" + (prefix.empty() ? std::string() : "." + prefix.substr(0, prefix.size() - 1)), dir / prefix);
    }
    save_matrix(dir / "reconstruction.csv", estimate);
    m.output("reconstruction", dir / "reconstruction.csv");
  });
  emit_metrics(dir / "metrics.txt", metrics, out);
  m.output("metrics", dir / "metrics.txt");
  m.write(dir / "manifest.txt");
  return kExitOk;
}

// ---------------------------------------------------------------- complete

struct CompleteOptions {
  std::string in;
  std::string truth;
  std::string movielens;
  std::string ml_format = "100k";
  std::optional<double> observe;
  std::string out;
  std::size_t rank = 2;
  double threshold = 0.5;
  bool roc = false;
  bool calibration = false;
  SamplerFlags sampler;
};

int cmd_complete(const CompleteOptions& o, std::ostream& out) {
  RunManifest m("complete");
  ObservedMatrix train(1, 1);
  std::vector<Cell> cells;
  std::optional<std::vector<Bit>> truths;

  const auto split_into = [&](const ObservedMatrix& full, double fraction) {
    auto split = observe_fraction_split(full, fraction, o.sampler.seed ^ 0x5A17u);
    train = std::move(split.train);
    cells = std::move(split.test_cells);
    truths = std::move(split.test_truth);
  };

  if (!o.movielens.empty()) {
    const auto table = m.timed("load", [&] { return load_movielens(o.movielens, parse_movielens_format(o.ml_format)); });
    const fs::path file = fs::is_directory(o.movielens)
                              ? fs::path(o.movielens) / (o.ml_format == "1m" ? "ratings.dat" : "u.data")
                              : fs::path(o.movielens);
    m.input("ratings", file);
    const ObservedMatrix x = binarize_global_mean(table);
    out << "ratings=" << table.ratings.size() << " users=" << table.users() << " items=" << table.items()
        << " duplicates=" << table.duplicates << " global_mean=" << num(table.global_mean()) << '\n';
    split_into(x, o.observe.value_or(0.1));
  } else {
    const ObservedMatrix x = m.timed("load", [&] { return load_matrix(o.in); });
    m.input("data", o.in);
    if (o.observe) {
      split_into(x, *o.observe);
    } else {
      train = x;
      for (std::size_t n = 0; n < x.rows(); ++n)
        for (std::size_t d = 0; d < x.cols(); ++d)
          if (x.is_missing(n, d)) cells.push_back({n, d});
      if (!o.truth.empty()) {
        const BinaryMatrix t = load_binary_matrix(o.truth);
        m.input("truth", o.truth);
        if (t.rows() != x.rows() || t.cols() != x.cols()) throw DataError("truth shape does not match the input matrix");
        std::vector<Bit> v;
        for (const Cell& c : cells) v.push_back(t(c.row, c.col));
        truths = std::move(v);
      }
    }
  }
  if ((o.roc || o.calibration) && !truths) {
    throw std::invalid_argument("--roc and --calibration need held-out truth (--truth, --observe or --movielens)");
  }
  if (cells.empty()) throw DataError("nothing to complete: the input has no missing cells");

  m.config("rank", std::to_string(o.rank));
  m.config("threshold", num(o.threshold));
  m.config("observe", o.observe ? num(*o.observe) : (o.movielens.empty() ? "none" : "0.1"));
  o.sampler.record(m);

  const SamplerConfig cfg = o.sampler.config(train, o.rank);
  const auto summary = m.timed("sample", [&] { return run(train, o.rank, cfg); });
  auto probs = m.timed("predict", [&] { return predict_plugin(summary.z_mean, summary.u_mean, summary.lambda, cells); });
  const PredictionReport report = make_report(cells, probs, truths, o.threshold);

  const fs::path dir(o.out);
  fs::create_directories(dir);
  {
    auto f = open_out(dir / "predictions.csv");
    f << "row,col,probability,map" << (truths ? ",truth" : "") << '\n';
    char buf[64];
    for (std::size_t i = 0; i < cells.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.6f", report.probabilities[i]);
      f << cells[i].row << ',' << cells[i].col << ',' << buf << ',' << int(report.map[i]);
      if (truths) f << ',' << int((*truths)[i]);
      f << '\n';
    }
  }
  m.output("predictions", dir / "predictions.csv");

  KeyValues metrics{{"train_observed", std::to_string(train.observed_count())},
                    {"predicted_cells", std::to_string(cells.size())},
                    {"lambda", num(summary.lambda)}};
  if (truths) {
    const ConfusionCounts& c = *report.counts;
    metrics.emplace_back("accuracy", num(*report.accuracy()));
    metrics.emplace_back("true_positive", std::to_string(c.true_positive));
    metrics.emplace_back("false_positive", std::to_string(c.false_positive));
    metrics.emplace_back("true_negative", std::to_string(c.true_negative));
    metrics.emplace_back("false_negative", std::to_string(c.false_negative));
  }
  if (o.roc) {
    const auto thresholds = default_roc_thresholds();
    const auto curve = roc_curve(report.probabilities, *truths, thresholds);
    auto f = open_out(dir / "roc.csv");
    f << "threshold,fpr,tpr\n";
    for (const auto& p : curve) f << num(p.threshold) << ',' << num(p.fpr) << ',' << num(p.tpr) << '\n';
    metrics.emplace_back("roc_auc", num(roc_auc(curve)));
    m.output("roc", dir / "roc.csv");
  }
  if (o.calibration) {
    const auto h = calibration_split(report.probabilities, *truths, o.threshold);
    auto f = open_out(dir / "calibration.csv");
    f << "bin_low,bin_high,correct,incorrect\n";
    for (std::size_t b = 0; b < kCalibrationBins; ++b) {
      f << num(static_cast<double>(b) / kCalibrationBins) << ',' << num(static_cast<double>(b + 1) / kCalibrationBins)
        << ',' << h.correct[b] << ',' << h.incorrect[b] << '\n';
    }
    metrics.emplace_back("correct_mean_distance", num(h.correct_mean_distance));
    metrics.emplace_back("incorrect_mean_distance", num(h.incorrect_mean_distance));
    m.output("calibration", dir / "calibration.csv");
  }
  emit_metrics(dir / "metrics.txt", metrics, out);
  m.output("metrics", dir / "metrics.txt");
  m.write(dir / "manifest.txt");
  return kExitOk;
}

// --------------------------------------------------------------- benchmark

struct BenchmarkOptions {
  std::string suite;
  std::size_t repeats = 10;
  std::string out;
  std::string movielens;
  std::string ml_format = "100k";
  SamplerFlags sampler;
};

experiments::Protocol protocol_from(const SamplerFlags& f) {
  experiments::Protocol p;
  p.burn_in = f.fast ? 20 : f.burn_in;
  p.samples = f.fast ? 20 : f.samples;
  p.threads = f.threads;
  return p;
}

template <typename Trial>
std::vector<experiments::Stat> repeat(std::size_t repeats, std::uint64_t seed, std::size_t metrics, Trial&& trial) {
  std::vector<std::vector<double>> values(metrics);
  for (std::size_t r = 0; r < repeats; ++r) {
    const std::vector<double> v = trial(seed + r);
    for (std::size_t i = 0; i < metrics; ++i) values[i].push_back(v[i]);
  }
  std::vector<experiments::Stat> stats;
  for (const auto& v : values) stats.push_back(experiments::describe(v));
  return stats;
}

void write_stats(std::ostream& f, const std::vector<experiments::Stat>& stats) {
  for (const auto& s : stats) f << ',' << num(s.mean) << ',' << num(s.stddev);
}

int cmd_benchmark(const BenchmarkOptions& o, std::ostream& out) {
  RunManifest m("benchmark");
  m.config("suite", o.suite);
  m.config("repeats", std::to_string(o.repeats));
  o.sampler.record(m);
  const experiments::Protocol protocol = protocol_from(o.sampler);
  const std::uint64_t seed = o.sampler.seed;

  std::ostringstream csv;
  if (o.suite == "factorization") {
    csv << "rows,cols,rank,density,flip,repeats,error_mean,error_std,observed_error_mean,observed_error_std,"
           "lambda_mean,lambda_std\n";
    struct Grid {
      std::size_t n, rank;
      double density;
    };
    for (const Grid g : {Grid{1000, 5, 0.5}, Grid{100, 7, 0.5}, Grid{100, 7, 0.7}}) {
      for (int step = 1; step <= 10; ++step) {
        const double flip = 0.05 * step;
        const auto stats = m.timed("grid", [&] {
          return repeat(o.repeats, seed, 3, [&](std::uint64_t s) {
            const auto r = experiments::factorization_trial(g.n, g.n, g.rank, g.density, flip, s, protocol);
            return std::vector<double>{r.error, r.observed_error, r.lambda};
          });
        });
        csv << g.n << ',' << g.n << ',' << g.rank << ',' << num(g.density) << ',' << num(flip) << ',' << o.repeats;
        write_stats(csv, stats);
        csv << '\n';
      }
    }
  } else if (o.suite == "completion") {
    csv << "rows,cols,rank,observed_fraction,repeats,accuracy_mean,accuracy_std,baseline_mean,baseline_std,"
           "correct_distance_mean,correct_distance_std,incorrect_distance_mean,incorrect_distance_std\n";
    for (double fraction : {0.005, 0.01, 0.02, 0.035}) {
      const auto stats = m.timed("grid", [&] {
        return repeat(o.repeats, seed, 4, [&](std::uint64_t s) {
          const auto r = experiments::completion_trial(250, 250, 5, fraction, s, protocol);
          return std::vector<double>{r.accuracy, r.baseline, r.calibration.correct_mean_distance,
                                     r.calibration.incorrect_mean_distance};
        });
      });
      csv << "250,250,5," << num(fraction) << ',' << o.repeats;
      write_stats(csv, stats);
      csv << '\n';
    }
  } else if (o.suite == "movielens") {
    if (o.movielens.empty()) throw std::invalid_argument("the movielens suite needs --movielens <path>");
    const auto table = load_movielens(o.movielens, parse_movielens_format(o.ml_format));
    const ObservedMatrix x = binarize_global_mean(table);
    csv << "dataset,observed_fraction,repeats,accuracy_mean,accuracy_std,reference\n";
    for (const auto& ref : experiments::kMovieLens100kReference) {
      const auto stats = m.timed("grid", [&] {
        return repeat(o.repeats, seed, 1, [&](std::uint64_t s) {
          return std::vector<double>{experiments::observed_completion_trial(x, 2, ref.fraction, s, protocol).accuracy};
        });
      });
      csv << o.ml_format << ',' << num(ref.fraction) << ',' << o.repeats;
      write_stats(csv, stats);
      csv << ',' << (o.ml_format == "100k" ? num(ref.accuracy) : "") << '\n';
    }
  } else if (o.suite == "digits") {
    experiments::Protocol p = protocol;
    if (!o.sampler.fast) p.burn_in = p.samples = 200;
    p.empirical_bayes = true;
    csv << "copies,missing,widths,code_priors,repeats,single_error_mean,single_error_std,multi_error_mean,"
           "multi_error_std\n";
    const std::vector<std::size_t> widths{7, 4, 2};
    const std::vector<double> priors{0.01, 0.05, 0.2};
    const auto stats = m.timed("grid", [&] {
      return repeat(o.repeats, seed, 2, [&](std::uint64_t s) {
        const auto r = experiments::digits_trial(5, 0.7, widths, priors, s, p);
        return std::vector<double>{r.single_error, r.multi_error};
      });
    });
    csv << "5,0.7,\"" << join(widths) << "\",\"" << join(priors) << "\"," << o.repeats;
    write_stats(csv, stats);
    csv << '\n';
  } else {
    throw std::invalid_argument("unknown suite '" + o.suite + "' (factorization, completion, movielens, digits)");
  }

  out << csv.str();
  if (!o.out.empty()) {
    const fs::path path(o.out);
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    open_out(path) << csv.str();
    m.output("table", path);
    m.write(fs::path(path).replace_extension(".manifest.txt"));
  }
  return kExitOk;
}

// ------------------------------------------------------------------ digits

struct DigitsOptions {
  std::size_t copies = 1;
  double missing = 0.0;
  double flip = 0.0;
  std::size_t height = 17;
  std::size_t width = 10;
  std::string orientation = "portrait";
  std::string scan_ranks;
  std::string out;
  SamplerFlags sampler;
};

std::pair<std::size_t, std::size_t> parse_rank_range(const std::string& s) {
  const auto dots = s.find("..");
  if (dots == std::string::npos) throw std::invalid_argument("--scan-ranks expects LMIN..LMAX, got '" + s + "'");
  try {
    const std::size_t lo = std::stoul(s.substr(0, dots));
    const std::size_t hi = std::stoul(s.substr(dots + 2));
    if (lo < 1 || hi < lo) throw std::invalid_argument("");
    return {lo, hi};
  } catch (const std::exception&) {
    throw std::invalid_argument("--scan-ranks expects 1 <= LMIN <= LMAX, got '" + s + "'");
  }
}

int cmd_digits(const DigitsOptions& o, std::ostream& out) {
  RunManifest m("digits");
  m.config("copies", std::to_string(o.copies));
  m.config("missing", num(o.missing));
  m.config("flip", num(o.flip));
  m.config("height", std::to_string(o.height));
  m.config("width", std::to_string(o.width));
  m.config("orientation", o.orientation);
  o.sampler.record(m);

  const auto orient = o.orientation == "landscape" ? DigitOrientation::landscape : DigitOrientation::portrait;
  const auto digits = calculator_digits(o.copies, o.flip, o.height, o.width, o.sampler.seed, orient);
  ObservedMatrix x = digits.x;
  if (o.missing > 0.0) {
    const auto masked = mask_random(digits.x.to_binary(), 1.0 - o.missing, o.sampler.seed + 1);
    x = masked.observed;
  }

  const fs::path dir(o.out);
  fs::create_directories(dir);
  save_matrix(dir / "digits.csv", x);
  save_matrix(dir / "clean.csv", digits.clean);
  save_matrix(dir / "segments.csv", digits.segments);
  {
    auto f = open_out(dir / "labels.csv");
    f << "row,label\n";
    for (std::size_t i = 0; i < digits.labels.size(); ++i) f << i << ',' << digits.labels[i] << '\n';
  }
  m.output("digits", dir / "digits.csv");
  m.output("clean", dir / "clean.csv");
  m.output("segments", dir / "segments.csv");
  m.output("labels", dir / "labels.csv");
  out << "digits=" << x.rows() << 'x' << x.cols() << " observed=" << x.observed_count() << '\n';

  if (!o.scan_ranks.empty()) {
    const auto [lo, hi] = parse_rank_range(o.scan_ranks);
    m.config("scan_ranks", o.scan_ranks);
    for (std::size_t l = lo; l <= hi; ++l) {
      const SamplerConfig cfg = o.sampler.config(x, l);
      const auto s = m.timed("rank" + std::to_string(l), [&] { return run(x, l, cfg); });
      const fs::path codes = dir / ("codes_L" + std::to_string(l) + ".csv");
      auto f = open_out(codes);
      write_real_csv(f, s.u_mean);
      const fs::path latents = dir / ("latents_L" + std::to_string(l) + ".csv");
      auto g = open_out(latents);
      write_real_csv(g, s.z_mean);
      m.output("codes_L" + std::to_string(l), codes);
      m.output("latents_L" + std::to_string(l), latents);
      out << "L=" << l << " lambda=" << num(s.lambda) << " codes=" << codes.string() << '\n';
    }
  }
  m.write(dir / "manifest.txt");
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bayesian Boolean matrix factorisation with the OrMachine"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "ormachine 0.1.0");

  SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "Generate a random low-rank Boolean dataset");
  simulate->add_option("--n", sim.n, "Rows")->capture_default_str()->check(CLI::PositiveNumber);
  simulate->add_option("--d", sim.d, "Columns")->capture_default_str()->check(CLI::PositiveNumber);
  simulate->add_option("--rank", sim.rank, "Rank of the product")->capture_default_str()->check(CLI::PositiveNumber);
  simulate->add_option("--density", sim.density, "Expected density of the clean product")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  simulate->add_option("--flip", sim.flip, "Bit-flip probability")->capture_default_str()->check(CLI::Range(0.0, 0.5));
  simulate->add_option("--observe", sim.observe, "Fraction of cells kept in the masked matrix")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  simulate->add_option("--seed", sim.seed, "Random seed")->capture_default_str();
  simulate->add_option("--format", sim.format, "Matrix file format")
      ->capture_default_str()
      ->check(CLI::IsMember({"csv", "binary"}));
  simulate->add_option("--out", sim.out, "Output directory")->required();

  FactorizeOptions fac;
  auto* factorize = app.add_subcommand("factorize", "Sample the posterior of a Boolean factorisation");
  factorize->add_option("--in", fac.in, "Input matrix (.csv or .orm)")->required();
  factorize->add_option("--truth", fac.truth, "Noise-free reference for the reconstruction error");
  factorize->add_option("--rank", fac.rank, "Latent dimension");
  factorize->add_option("--layers", fac.layers, "Layer widths, bottom first (e.g. 7,4,2)")->delimiter(',');
  factorize->add_option("--code-priors", fac.code_priors, "Per-layer code priors")
      ->delimiter(',')
      ->check(CLI::Range(0.0, 1.0));
  factorize->add_option("--freeze-codes", fac.freeze_codes, "Fixed code matrix (D x L)");
  factorize->add_option("--out", fac.out, "Output directory")->required();
  fac.sampler.attach(factorize, true);

  CompleteOptions com;
  auto* complete = app.add_subcommand("complete", "Predict missing cells");
  auto* in_opt = complete->add_option("--in", com.in, "Input matrix with missing cells");
  auto* ml_opt = complete->add_option("--movielens", com.movielens, "MovieLens ratings file or directory");
  in_opt->excludes(ml_opt);
  complete->add_option("--ml-format", com.ml_format, "MovieLens format")
      ->capture_default_str()
      ->check(CLI::IsMember({"100k", "1m"}));
  complete->add_option("--truth", com.truth, "Full reference matrix for scoring")->excludes(ml_opt);
  complete->add_option("--observe", com.observe, "Train on this fraction of the observed cells, score the rest")
      ->check(CLI::Range(0.0, 1.0));
  complete->add_option("--rank", com.rank, "Latent dimension")->capture_default_str()->check(CLI::PositiveNumber);
  complete->add_option("--threshold", com.threshold, "Positive iff probability >= threshold")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  complete->add_flag("--roc", com.roc, "Write roc.csv");
  complete->add_flag("--calibration", com.calibration, "Write calibration.csv");
  complete->add_option("--out", com.out, "Output directory")->required();
  com.sampler.attach(complete, true);

  BenchmarkOptions ben;
  auto* benchmark = app.add_subcommand("benchmark", "Run an experiment grid and print a CSV table");
  benchmark->add_option("--suite", ben.suite, "factorization | completion | movielens | digits")->required();
  benchmark->add_option("--repeats", ben.repeats, "Repetitions per grid point")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  benchmark->add_option("--out", ben.out, "CSV output path");
  benchmark->add_option("--movielens", ben.movielens, "MovieLens ratings file or directory");
  benchmark->add_option("--ml-format", ben.ml_format, "MovieLens format")
      ->capture_default_str()
      ->check(CLI::IsMember({"100k", "1m"}));
  ben.sampler.attach(benchmark, false);

  DigitsOptions dig;
  auto* digits = app.add_subcommand("digits", "Generate calculator digits, optionally scanning ranks");
  digits->add_option("--copies", dig.copies, "Rounds of the digits 0-9")->capture_default_str()->check(CLI::PositiveNumber);
  digits->add_option("--missing", dig.missing, "Fraction of cells hidden")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  digits->add_option("--flip", dig.flip, "Bit-flip probability")->capture_default_str()->check(CLI::Range(0.0, 1.0));
  digits->add_option("--height", dig.height, "Image height")->capture_default_str();
  digits->add_option("--width", dig.width, "Image width")->capture_default_str();
  digits->add_option("--orientation", dig.orientation, "portrait | landscape")
      ->capture_default_str()
      ->check(CLI::IsMember({"portrait", "landscape"}));
  digits->add_option("--scan-ranks", dig.scan_ranks, "Factorise at each rank in LMIN..LMAX");
  digits->add_option("--out", dig.out, "Output directory")->required();
  dig.sampler.attach(digits, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*simulate) return cmd_simulate(sim, out);
    if (*factorize) {
      if (fac.rank == 0 && fac.layers.empty()) throw std::invalid_argument("--rank or --layers is required");
      return cmd_factorize(fac, out);
    }
    if (*complete) {
      if (com.in.empty() && com.movielens.empty()) throw std::invalid_argument("--in or --movielens is required");
      return cmd_complete(com, out);
    }
    if (*benchmark) return cmd_benchmark(ben, out);
    if (*digits) return cmd_digits(dig, out);
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const DegenerateError& e) {
    err << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::invalid_argument& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace ormachine::cli
