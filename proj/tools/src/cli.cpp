#include "swapnas/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <sstream>

#include "swapnas/bench_eval.hpp"
#include "swapnas/errors.hpp"
#include "swapnas/evo_search.hpp"
#include "swapnas/io.hpp"
#include "swapnas/parallel.hpp"
#include "swapnas/run_config.hpp"
#include "swapnas/text_format.hpp"

namespace swapnas {

namespace {

struct Common {
  std::uint64_t seed = 0;
  unsigned threads = 0;
};

struct AssemblyFlags {
  int depth = 3;
  int stem = 16;
  std::string reductions = "1,2";
  int classes = 10;
  bool no_standardise = false;
  std::string mu = "auto";
  std::string sigma = "auto";

  AssemblyConfig assembly(int input_channels) const {
    AssemblyConfig cfg;
    cfg.depth = depth;
    cfg.stem_channels = stem;
    cfg.input_channels = input_channels;
    cfg.reduction_points = parse_int_list(reductions);
    cfg.num_classes = classes;
    cfg.validate();
    return cfg;
  }
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "Seed for every random draw")->capture_default_str();
  cmd->add_option("--threads", c.threads, "Worker thread cap (0 = all cores)")->capture_default_str();
}

void add_assembly(CLI::App* cmd, AssemblyFlags& a, bool with_reg) {
  cmd->add_option("--depth", a.depth, "Stacked cells")->capture_default_str();
  cmd->add_option("--stem", a.stem, "Stem output channels")->capture_default_str();
  cmd->add_option("--reductions", a.reductions, "Cell indices preceded by a reduction block")->capture_default_str();
  cmd->add_option("--classes", a.classes, "Classifier head width")->capture_default_str();
  cmd->add_flag("--no-standardise", a.no_standardise, "Skip per-channel batch standardisation");
  if (with_reg) {
    cmd->add_option("--mu", a.mu, "Regularisation centre: number, auto or none")->capture_default_str();
    cmd->add_option("--sigma", a.sigma, "Regularisation width: number, auto or none")->capture_default_str();
  }
}

InputBatch load_batch(const std::string& spec, const std::string& tensor, std::uint64_t seed) {
  if (!tensor.empty()) return read_tensor_file(tensor);
  return make_gaussian_batch(BatchSpec::parse(spec), seed);
}

std::string opt_real(const std::optional<double>& v) { return v ? format_real(*v) : "nan"; }

std::vector<Shape> parse_dims(const std::string& text) {
  std::vector<Shape> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    Shape s;
    char x1 = 0, x2 = 0;
    std::istringstream is(item);
    if (!(is >> s.channels >> x1 >> s.width >> x2 >> s.height) || x1 != 'x' || x2 != 'x' || !is.eof() ||
        s.channels < 1 || s.width < 1 || s.height < 1)
      throw ValidationError("input shape must look like CxWxH, got '" + item + "'");
    out.push_back(s);
  }
  if (out.empty()) throw ValidationError("--dims needs at least one CxWxH entry");
  return out;
}

std::vector<std::pair<double, double>> parse_grid(const std::string& text) {
  std::vector<std::pair<double, double>> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw ValidationError("grid entries must look like mu:sigma, got '" + item + "'");
    double mu = 0, sigma = 0;
    try {
      mu = parse_real(item.substr(0, colon));
      sigma = parse_real(item.substr(colon + 1));
    } catch (const ParseError&) {
      throw ValidationError("grid entries must look like mu:sigma, got '" + item + "'");
    }
    RegularisationParams check(mu, sigma);
    out.emplace_back(mu, sigma);
  }
  if (out.empty()) throw ValidationError("--grid is empty");
  return out;
}

// ---------------------------------------------------------------------------

struct ScoreArgs {
  Common common;
  AssemblyFlags asm_flags;
  std::string cell, table, batch = "gauss:32x3x32x32", tensor, out;
  int runs = 1;
};

int cmd_score(const ScoreArgs& a, std::ostream& out) {
  const bool table_mode = !a.table.empty();
  if (table_mode == !a.cell.empty()) throw ValidationError("score needs exactly one of --cell or --table");
  if (table_mode && a.out.empty()) throw ValidationError("--table needs --out");
  if (a.runs < 1) throw ValidationError("--runs must be >= 1");

  if (!table_mode) {
    const CellMatrix cell = read_cell_file(a.cell);
    const InputBatch batch = load_batch(a.batch, a.tensor, a.common.seed);
    ScoringSetup setup;
    setup.assembly = a.asm_flags.assembly(batch.shape().channels);
    setup.capture.standardise = !a.asm_flags.no_standardise;
    setup.regularisation = resolve_regularisation(parse_regularisation(a.asm_flags.mu, a.asm_flags.sigma),
                                                  cell.nodes(), setup.assembly, a.common.seed);
    ScoreRecord r = score_cell(cell, batch, a.common.seed, setup);
    r.arch_id = std::filesystem::path(a.cell).stem().string();
    out << "psi=" << r.psi << '\n'
        << "psi_reg=" << format_real(r.psi_reg) << '\n'
        << "theta_mb=" << format_real(r.theta_mb) << '\n'
        << "params=" << r.params << '\n'
        << "flops=" << r.flops << '\n'
        << "v=" << r.values << '\n'
        << "card_a=" << r.card_a << '\n';
    if (setup.regularisation)
      out << "mu=" << format_real(setup.regularisation->mu()) << '\n'
          << "sigma=" << format_real(setup.regularisation->sigma()) << '\n';
    if (!a.out.empty()) write_file_atomic(a.out, format_score_records(std::span<const ScoreRecord>(&r, 1)));
    return kExitOk;
  }

  const BenchmarkTable table = load_accuracy_table(a.table);
  if (table.size() == 0) throw ValidationError("accuracy table has no rows");
  std::vector<ScoreRecord> all;
  for (int k = 0; k < a.runs; ++k) {
    const std::uint64_t seed = a.common.seed + static_cast<std::uint64_t>(k);
    const InputBatch batch = load_batch(a.batch, a.tensor, seed);
    ScoringSetup setup;
    setup.assembly = a.asm_flags.assembly(batch.shape().channels);
    setup.capture.standardise = !a.asm_flags.no_standardise;
    setup.regularisation = resolve_regularisation(parse_regularisation(a.asm_flags.mu, a.asm_flags.sigma),
                                                  table.entries().front().cell.nodes(), setup.assembly, seed);
    auto recs = score_table(table, batch, seed, setup);
    all.insert(all.end(), recs.begin(), recs.end());
  }
  write_file_atomic(a.out, format_score_records(all));
  out << "scored=" << all.size() << '\n' << "out=" << a.out << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct SearchArgs {
  Common common;
  bool seed_given = false;
  std::string config, out, checkpoint;
  bool resume = false;
  bool quiet = false;
};

int cmd_search(const SearchArgs& a, std::ostream& out, std::ostream& err) {
  SearchRunConfig rc = a.config.empty() ? SearchRunConfig{} : load_search_config(a.config);
  SearchConfig& cfg = rc.search;
  if (a.seed_given) cfg.seed = a.common.seed;
  cfg.scoring.regularisation =
      resolve_regularisation(rc.regularisation, cfg.nodes, cfg.scoring.assembly, cfg.seed);
  cfg.validate();

  const CellScorer scorer = make_swap_scorer(cfg);
  SearchState state;
  if (a.resume && !a.checkpoint.empty() && std::filesystem::exists(a.checkpoint)) {
    state = decode_checkpoint(read_text_file(a.checkpoint));
    if (state.fingerprint != cfg.fingerprint())
      throw ValidationError("checkpoint " + a.checkpoint + " was written by a different configuration");
  } else {
    state = initialise_search(cfg, scorer);
  }
  run_cycles(state, cfg, scorer, cfg.cycles, [&](const SearchState& s) {
    if (!a.quiet)
      err << "cycle " << s.cycle << " best=" << format_real(s.trace.back()) << " evaluations=" << s.evaluations
          << '\n';
    if (!a.checkpoint.empty()) write_file_atomic(a.checkpoint, encode_checkpoint(s));
  });
  const SearchResult result = finish_search(state);
  const std::string text = format_search_result(result, cfg);
  if (!a.out.empty()) write_file_atomic(a.out, text);
  out << "best_cell=" << encode_cell_inline(result.best.cell) << '\n'
      << "best_score=" << format_real(result.best.score) << '\n'
      << "best_psi=" << result.best.psi << '\n'
      << "best_theta_mb=" << format_real(result.best.theta_mb) << '\n'
      << "evaluations=" << result.evaluations << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct CorrelateArgs {
  Common common;
  std::string scores, truth, out, plot;
};

int cmd_correlate(const CorrelateArgs& a, std::ostream& out) {
  const auto records = parse_score_records(read_text_file(a.scores));
  const BenchmarkTable table = load_accuracy_table(a.truth);
  const CorrelationReport report = correlation_report(records, table);
  out << "samples=" << report.mean.samples << '\n'
      << "seeds=" << report.per_seed.size() << '\n'
      << "swap_rho=" << opt_real(report.mean.psi) << '\n'
      << "swap_reg_rho=" << opt_real(report.mean.psi_reg) << '\n'
      << "params_rho=" << opt_real(report.mean.theta) << '\n'
      << "flops_rho=" << opt_real(report.mean.flops) << '\n';
  if (!a.out.empty()) write_file_atomic(a.out, format_correlation_report(report));
  if (!a.plot.empty()) {
    PlotSeries psi{"psi", {}}, psi_reg{"psi_reg", {}}, theta{"theta_mb", {}};
    for (const auto& r : records) {
      const BenchmarkEntry* e = table.find(r.arch_id);
      if (!e) continue;
      psi.points.emplace_back(static_cast<double>(r.psi), e->accuracy);
      psi_reg.points.emplace_back(r.psi_reg, e->accuracy);
      theta.points.emplace_back(r.theta_mb, e->accuracy);
    }
    const std::vector<PlotSeries> series{psi, psi_reg, theta};
    write_file_atomic(a.plot, format_plot_data(series));
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct SweepArgs {
  Common common;
  std::string scores, truth, grid = "auto", out;
};

int cmd_sweep(const SweepArgs& a, std::ostream& out) {
  const auto records = parse_score_records(read_text_file(a.scores));
  const BenchmarkTable table = load_accuracy_table(a.truth);
  std::vector<std::pair<double, double>> grid;
  if (a.grid == "auto") {
    std::vector<double> sizes;
    for (const auto& r : records) sizes.push_back(r.theta_mb);
    if (sizes.size() < 2) throw StatisticsError("insufficient data: need at least two score records");
    const double top = estimate_mu_sigma(sizes).mu();
    for (double frac : {0.01, 0.125, 0.25, 0.5, 0.75, 1.0}) {
      const double v = round_up_two_significant(top * frac);
      grid.emplace_back(v, v);
    }
  } else {
    grid = parse_grid(a.grid);
  }
  const auto rows = mu_sigma_sweep(records, table, grid);
  const auto seeds = seed_groups(records);
  const std::string text = format_sweep(rows, seeds);
  if (!a.out.empty()) write_file_atomic(a.out, text);
  out << text;
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct AblateArgs {
  Common common;
  AssemblyFlags asm_flags;
  std::string truth, dims = "3x3x3,3x15x15,3x32x32", out;
  int count = 100;
  int nodes = 4;
  int samples = 32;
  double jitter = 0.005;
};

int cmd_ablate(const AblateArgs& a, std::ostream& out) {
  if (a.samples < 1) throw ValidationError("--samples must be >= 1");
  if (a.jitter < 0.0) throw ValidationError("--jitter must be >= 0");
  const auto dims = parse_dims(a.dims);
  std::vector<CellMatrix> cells;
  std::vector<double> accuracy;
  if (!a.truth.empty()) {
    const BenchmarkTable table = load_accuracy_table(a.truth);
    for (const auto& e : table.entries()) {
      cells.push_back(e.cell);
      accuracy.push_back(e.accuracy);
    }
  } else {
    if (a.count < 1) throw ValidationError("--count must be >= 1");
    Rng rng(derive_seed(a.common.seed, 0xab1a7e));
    for (int i = 0; i < a.count; ++i) cells.push_back(random_cell(a.nodes, rng));
  }
  for (const Shape& d : dims)
    if (d.channels != dims.front().channels) throw ValidationError("every --dims entry needs the same channel count");

  AblationOptions opt;
  opt.assembly = a.asm_flags.assembly(dims.front().channels);
  opt.capture.standardise = !a.asm_flags.no_standardise;
  opt.jitter = a.jitter;
  opt.seed = a.common.seed;
  const RegularisationChoice choice = parse_regularisation(a.asm_flags.mu, a.asm_flags.sigma);
  if (choice.mode == RegularisationChoice::Mode::Fixed) opt.regularisation = RegularisationParams(choice.mu, choice.sigma);
  if (choice.mode == RegularisationChoice::Mode::None)
    throw ValidationError("ablate-dims reports psi_reg; use numbers or auto for --mu/--sigma");

  const auto rows = accuracy.empty()
                        ? input_dim_ablation(cells, dims, a.samples, opt)
                        : input_dim_ablation(cells, dims, a.samples, opt, std::span<const double>(accuracy));
  const std::string text = format_ablation(rows);
  if (!a.out.empty()) write_file_atomic(a.out, text);
  out << text;
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct HistogramArgs {
  Common common;
  AssemblyFlags asm_flags;
  int nodes = 4;
  int count = 1000;
  int bins = 20;
  int input_channels = 3;
  std::string out;
};

int cmd_histogram(const HistogramArgs& a, std::ostream& out) {
  if (a.count < 2) throw ValidationError("--count must be >= 2");
  if (a.bins < 1) throw ValidationError("--bins must be >= 1");
  const AssemblyConfig cfg = a.asm_flags.assembly(a.input_channels);
  const auto sizes = sample_sizes(a.nodes, cfg, a.count, a.common.seed);
  const Histogram h = size_histogram(sizes, static_cast<std::size_t>(a.bins));
  const RegularisationParams est = estimate_mu_sigma(sizes);
  std::ostringstream os;
  os << "bin_lo,bin_hi,count\n";
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    const double lo = h.lo + h.width * static_cast<double>(i);
    const double hi = i + 1 == h.counts.size() ? h.hi : lo + h.width;
    os << format_real(lo) << ',' << format_real(hi) << ',' << h.counts[i] << '\n';
  }
  if (!a.out.empty()) write_file_atomic(a.out, os.str());
  out << os.str() << "min_mb=" << format_real(h.lo) << '\n'
      << "max_mb=" << format_real(h.hi) << '\n'
      << "mu=" << format_real(est.mu()) << '\n'
      << "sigma=" << format_real(est.sigma()) << '\n';
  return kExitOk;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ValidationError*>(&e) || dynamic_cast<const ParseError*>(&e) ||
      dynamic_cast<const AssemblyError*>(&e) || dynamic_cast<const ShapeError*>(&e))
    return kExitValidation;
  return kExitRuntime;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Training-free architecture scoring and search with sample-wise activation patterns", "swapnas"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Print help for every command");

  ScoreArgs score;
  auto* s = app.add_subcommand("score", "Score one cell, or every row of an accuracy table");
  add_common(s, score.common);
  s->add_option("--cell", score.cell, "Cell file")->check(CLI::ExistingFile);
  s->add_option("--table", score.table, "Accuracy table CSV (scores every row)")->check(CLI::ExistingFile);
  s->add_option("--batch", score.batch, "Synthetic batch gauss:SxCxWxH[@jitter]")->capture_default_str();
  s->add_option("--tensor", score.tensor, "Input batch tensor file (overrides --batch)")->check(CLI::ExistingFile);
  s->add_option("--runs", score.runs, "Table mode: runs with seeds seed, seed+1, ...")->capture_default_str();
  s->add_option("--out", score.out, "Score CSV output");
  add_assembly(s, score.asm_flags, true);

  SearchArgs search;
  auto* se = app.add_subcommand("search", "Evolutionary search driven by the regularised score");
  add_common(se, search.common);
  se->add_option("--config", search.config, "key=value search config")->check(CLI::ExistingFile);
  se->add_option("--out", search.out, "Result file");
  se->add_option("--checkpoint", search.checkpoint, "Checkpoint file, rewritten after every cycle");
  se->add_flag("--resume", search.resume, "Continue from --checkpoint when it exists");
  se->add_flag("--quiet", search.quiet, "No per-cycle log line");

  CorrelateArgs corr;
  auto* c = app.add_subcommand("correlate", "Spearman rho of scores against ground-truth accuracy");
  add_common(c, corr.common);
  c->add_option("--scores", corr.scores, "Score CSV")->required()->check(CLI::ExistingFile);
  c->add_option("--truth", corr.truth, "Accuracy table CSV")->required()->check(CLI::ExistingFile);
  c->add_option("--out", corr.out, "Per-seed report CSV");
  c->add_option("--plot", corr.plot, "Plot data (series,x,y)");

  SweepArgs sweep;
  auto* sw = app.add_subcommand("sweep", "Correlation over a grid of mu/sigma values");
  add_common(sw, sweep.common);
  sw->add_option("--scores", sweep.scores, "Score CSV")->required()->check(CLI::ExistingFile);
  sw->add_option("--truth", sweep.truth, "Accuracy table CSV")->required()->check(CLI::ExistingFile);
  sw->add_option("--grid", sweep.grid, "mu:sigma,... or auto (mu = sigma up to the largest size)")
      ->capture_default_str();
  sw->add_option("--out", sweep.out, "Sweep CSV");

  AblateArgs ablate;
  auto* ab = app.add_subcommand("ablate-dims", "Pattern counts across input sizes");
  add_common(ab, ablate.common);
  ab->add_option("--truth", ablate.truth, "Accuracy table CSV (cells and accuracies)")->check(CLI::ExistingFile);
  ab->add_option("--count", ablate.count, "Random cells when no table is given")->capture_default_str();
  ab->add_option("--nodes", ablate.nodes, "Nodes per random cell")->capture_default_str();
  ab->add_option("--dims", ablate.dims, "Input shapes CxWxH,...")->capture_default_str();
  ab->add_option("--samples", ablate.samples, "Batch size")->capture_default_str();
  ab->add_option("--jitter", ablate.jitter, "Per-sample noise around one shared image (0 = i.i.d.)")
      ->capture_default_str();
  ab->add_option("--out", ablate.out, "Ablation CSV");
  add_assembly(ab, ablate.asm_flags, true);

  HistogramArgs hist;
  auto* h = app.add_subcommand("histogram", "Model-size histogram of random cells");
  add_common(h, hist.common);
  h->add_option("--nodes", hist.nodes, "Nodes per cell")->capture_default_str();
  h->add_option("--count", hist.count, "Sampled cells")->capture_default_str();
  h->add_option("--bins", hist.bins, "Histogram bins")->capture_default_str();
  h->add_option("--input-channels", hist.input_channels, "Input channels")->capture_default_str();
  h->add_option("--out", hist.out, "Histogram CSV");
  add_assembly(h, hist.asm_flags, false);

  std::vector<std::string> argv_store{"swapnas"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_store) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    const auto threads_of = [&]() -> unsigned {
      if (s->parsed()) return score.common.threads;
      if (se->parsed()) return search.common.threads;
      if (c->parsed()) return corr.common.threads;
      if (sw->parsed()) return sweep.common.threads;
      if (ab->parsed()) return ablate.common.threads;
      return hist.common.threads;
    };
    set_max_threads(threads_of());
    if (s->parsed()) return cmd_score(score, out);
    if (se->parsed()) {
      search.seed_given = se->count("--seed") > 0;
      return cmd_search(search, out, err);
    }
    if (c->parsed()) return cmd_correlate(corr, out);
    if (sw->parsed()) return cmd_sweep(sweep, out);
    if (ab->parsed()) return cmd_ablate(ablate, out);
    return cmd_histogram(hist, out);
  } catch (const std::exception& e) {
    err << "swapnas: error: " << e.what() << '\n';
    return exit_code_for(e);
  }
}

}  // namespace swapnas
