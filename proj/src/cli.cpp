#include "mklvc/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>
#include <unistd.h>

#include "mklvc/baselines.hpp"
#include "mklvc/diagnostics.hpp"
#include "mklvc/embf.hpp"
#include "mklvc/errors.hpp"
#include "mklvc/metrics.hpp"
#include "mklvc/stats.hpp"
#include "mklvc/transport.hpp"

namespace fs = std::filesystem;

namespace mklvc {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitNumerical = 2;

std::string fmt6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// Writes `content` to `path` via a temporary file, or to `out` when path is
// empty or "-".
void emit_text(const std::string& path, const std::string& content, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << content;
    return;
  }
  std::random_device rd;
  fs::path tmp = path;
  tmp += ".partial-" + std::to_string(::getpid()) + "-" + std::to_string(rd());
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw ValidationError("cannot open " + tmp.string() + " for writing");
    f << content;
    f.close();
    if (!f) {
      std::error_code ignored;
      fs::remove(tmp, ignored);
      throw ValidationError("failed writing " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    std::error_code ignored;
    fs::remove(tmp, ignored);
    throw ValidationError("cannot move output into place at " + path + ": " + ec.message());
  }
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream in(line);
  while (std::getline(in, cur, sep)) parts.push_back(cur);
  if (!line.empty() && line.back() == sep) parts.emplace_back();
  return parts;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ValidationError("cannot parse " + what + " '" + text + "' as a number");
  }
}

SortProfile identity_profile(Eigen::Index dim) {
  SortProfile p;
  p.std = Eigen::VectorXd::Zero(dim);
  p.permutation.resize(static_cast<std::size_t>(dim));
  for (Eigen::Index i = 0; i < dim; ++i) p.permutation[static_cast<std::size_t>(i)] = i;
  p.source_tag = "identity";
  return p;
}

// ---------------------------------------------------------------- fit-stats

struct FitStatsOptions {
  std::vector<std::string> inputs;
  std::string output;
  std::string tag;
};

void run_fit_stats(const FitStatsOptions& o, std::ostream& out) {
  std::vector<EmbeddingSequence> parts;
  parts.reserve(o.inputs.size());
  for (const auto& p : o.inputs) parts.push_back(embf::read_embeddings(p));
  const EmbeddingSequence all = concatenate(parts);

  const std::string tag =
      o.tag.empty() ? "corpus:" + std::to_string(o.inputs.size()) + " files" : o.tag;
  const SortProfile profile = sort_profile(per_dim_std(all), tag);
  embf::write_sort_profile(o.output, profile);

  const StdSpectrum spectrum = std_spectrum(all);
  out << "wrote " << o.output << ": D=" << all.dim() << " frames=" << all.num_frames()
      << " top100_variance_share=" << fmt6(spectrum.variance_share(100)) << "\n";
}

// ------------------------------------------------------------------ convert

struct ConvertOptions {
  std::string method;
  std::string src, ref, out;
  std::string manifest;
  int jobs = 1;
  Eigen::Index block_dim = 2;
  Eigen::Index k = 4;
  std::optional<Eigen::Index> n_trim;
  std::string metric = "cosine";
  double epsilon = 1e-2;
  int max_iters = 1000;
  double marginal_tol = 1e-6;
  std::string profile_path;
  std::string ridge = "auto";
  std::optional<std::uint64_t> seed;
  std::string save_map;
};

struct ConvertJob {
  std::string src, ref, out;
};

struct JobOutcome {
  int code = kExitOk;
  std::string message;
  std::string warning;
};

struct ConvertPlan {
  ConvertOptions opts;
  Metric metric = Metric::kCosine;
  std::optional<double> ridge;
  std::optional<SortProfile> profile;
};

ConvertPlan validate_convert(const ConvertOptions& o) {
  ConvertPlan plan{o, parse_metric(o.metric), std::nullopt, std::nullopt};
  if (o.method != "mkl" && o.method != "knn" && o.method != "sinkhorn")
    throw ValidationError("unknown method '" + o.method + "' (expected mkl, knn or sinkhorn)");

  const bool single = !o.src.empty() || !o.ref.empty() || !o.out.empty();
  if (single == !o.manifest.empty())
    throw ValidationError("give either --src/--ref/--out or --manifest");
  if (single && (o.src.empty() || o.ref.empty() || o.out.empty()))
    throw ValidationError("--src, --ref and --out are all required");
  if (o.jobs < 1) throw ValidationError("--jobs must be positive");

  if (o.method == "mkl") {
    if (o.block_dim < 1) throw ValidationError("--K must be positive");
    if (o.ridge != "auto") {
      const double r = parse_double(o.ridge, "--ridge");
      if (!(r >= 0.0) || !std::isfinite(r)) throw ValidationError("--ridge must be non-negative");
      plan.ridge = r;
    }
  } else if (!o.save_map.empty()) {
    throw ValidationError("--save-map only applies to --method mkl");
  }
  if (!o.save_map.empty() && !single)
    throw ValidationError("--save-map cannot be combined with --manifest");
  if (o.method == "knn") {
    if (o.k < 1) throw ValidationError("--k must be positive");
    if (o.n_trim && *o.n_trim < 1) throw ValidationError("--n-trim must be positive");
  }
  if (o.method == "sinkhorn") {
    if (!(o.epsilon > 0.0)) throw ValidationError("--epsilon must be positive");
    if (o.max_iters < 1) throw ValidationError("--max-iters must be positive");
    if (!(o.marginal_tol > 0.0)) throw ValidationError("--marginal-tol must be positive");
  }
  if (!o.profile_path.empty()) plan.profile = embf::read_sort_profile(o.profile_path);
  return plan;
}

JobOutcome convert_one(const ConvertPlan& plan, const ConvertJob& job) {
  const ConvertOptions& o = plan.opts;
  const EmbeddingSequence src = embf::read_embeddings(job.src);
  const EmbeddingSequence ref = embf::read_embeddings(job.ref);

  auto resolve_profile = [&]() -> SortProfile {
    if (plan.profile) return *plan.profile;
    return sort_profile(per_dim_std(src), "source:" + job.src);
  };

  JobOutcome outcome;
  std::ostringstream msg;
  std::optional<EmbeddingSequence> converted;
  if (o.method == "mkl") {
    const SortProfile profile = resolve_profile();
    const FactorizedMap map = factorize_fit(src, ref, o.block_dim, profile, plan.ridge);
    converted = factorize_apply(map, src);
    if (!o.save_map.empty()) embf::write_factorized_map(o.save_map, map);
    msg << "method=mkl K=" << o.block_dim << " blocks=" << map.blocks.size()
        << " ridge=" << (plan.ridge ? fmt6(*plan.ridge) : std::string("auto"))
        << " profile=" << profile.source_tag;
  } else if (o.method == "knn") {
    const bool trimmed = o.n_trim && *o.n_trim != src.dim();
    const SortProfile profile =
        (plan.profile || trimmed) ? resolve_profile() : identity_profile(src.dim());
    converted = knn_convert(src, ref, KnnConfig{o.k, o.n_trim, plan.metric}, profile);
    msg << "method=knn k=" << o.k << " n_trim=" << o.n_trim.value_or(src.dim())
        << " metric=" << metric_name(plan.metric) << " profile=" << profile.source_tag;
  } else {
    SinkhornConversion result = sinkhorn_convert(
        src, ref, SinkhornConfig{o.epsilon, o.max_iters, o.marginal_tol, plan.metric});
    converted = std::move(result.output);
    outcome.warning = result.plan.warning;
    msg << "method=sinkhorn epsilon=" << fmt6(o.epsilon)
        << " metric=" << metric_name(plan.metric) << " iterations=" << result.plan.iterations
        << " converged=" << (result.plan.converged ? "yes" : "no");
  }

  embf::write_embeddings(job.out, *converted);
  outcome.message = "converted " + job.src + " -> " + job.out + " T=" +
                    std::to_string(converted->num_frames()) +
                    " D=" + std::to_string(converted->dim()) + " " + msg.str();
  return outcome;
}

JobOutcome guarded_convert(const ConvertPlan& plan, const ConvertJob& job) {
  try {
    return convert_one(plan, job);
  } catch (const NumericalError& e) {
    return {kExitNumerical, job.src + ": numerical failure: " + e.what(), {}};
  } catch (const std::exception& e) {
    return {kExitValidation, job.src + ": " + e.what(), {}};
  }
}

std::vector<ConvertJob> read_manifest(const std::string& path) {
  std::vector<ConvertJob> jobs;
  std::istringstream in(read_text(path));
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    std::istringstream fields(t);
    ConvertJob job;
    std::string extra;
    if (!(fields >> job.src >> job.ref >> job.out) || (fields >> extra))
      throw ValidationError(path + ":" + std::to_string(lineno) +
                            ": expected 'source reference output'");
    jobs.push_back(std::move(job));
  }
  if (jobs.empty()) throw ValidationError(path + ": manifest has no entries");
  return jobs;
}

int run_convert(const ConvertOptions& o, std::ostream& out, std::ostream& err) {
  const ConvertPlan plan = validate_convert(o);
  const std::vector<ConvertJob> jobs =
      o.manifest.empty() ? std::vector<ConvertJob>{{o.src, o.ref, o.out}} : read_manifest(o.manifest);

  std::vector<JobOutcome> outcomes(jobs.size());
  const auto workers = static_cast<std::size_t>(
      std::min<std::size_t>(static_cast<std::size_t>(o.jobs), jobs.size()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < jobs.size(); ++i) outcomes[i] = guarded_convert(plan, jobs[i]);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++)
          outcomes[i] = guarded_convert(plan, jobs[i]);
      });
    for (auto& t : pool) t.join();
  }

  int code = kExitOk;
  for (const auto& r : outcomes) {
    if (r.code == kExitOk)
      out << r.message << "\n";
    else
      err << "error: " << r.message << "\n";
    if (!r.warning.empty()) err << "warning: " << r.warning << "\n";
    code = std::max(code, r.code);
  }
  return code;
}

// ----------------------------------------------------------------- diagnose

struct DiagnoseOptions {
  std::string input;
  Eigen::Index block_dim = 2;
  Eigen::Index stride = kDefaultProfileStride;
  Eigen::Index subsample = kDefaultSubsample;
  Eigen::Index mc_samples = kDefaultSubsample;
  std::uint64_t seed = 0;
  std::string profile_path;
  std::string output;
  std::string spectrum_output;
};

void run_diagnose(const DiagnoseOptions& o, std::ostream& out) {
  const EmbeddingSequence x = embf::read_embeddings(o.input);
  const SortProfile profile = o.profile_path.empty()
                                  ? sort_profile(per_dim_std(x), "source:" + o.input)
                                  : embf::read_sort_profile(o.profile_path);
  const GaussianityProfile g =
      gaussianity_profile(x, o.block_dim, profile, o.subsample, o.mc_samples, o.seed, o.stride);

  std::ostringstream table;
  table << "# gaussianity profile: W2 to the fitted Gaussian divided by K\n"
        << "# K=" << g.block_dim << " stride=" << g.stride << " subsample=" << o.subsample
        << " mc_samples=" << g.mc_samples << " sample_size=" << g.sample_size
        << " seed=" << g.seed << " solver=" << g.solver << " profile=" << profile.source_tag
        << "\n"
        << "start_index\tw2_over_K\n";
  for (std::size_t i = 0; i < g.w2_values.size(); ++i)
    table << g.block_start_indices[i] << "\t" << fmt6(g.w2_values[i]) << "\n";
  emit_text(o.output, table.str(), out);

  if (!o.spectrum_output.empty()) {
    const StdSpectrum s = std_spectrum(x);
    std::ostringstream spec;
    spec << "# std spectrum, descending; top100_variance_share="
         << fmt6(s.variance_share(100)) << "\n"
         << "rank\tstd\n";
    for (Eigen::Index i = 0; i < s.values.size(); ++i)
      spec << (i + 1) << "\t" << fmt6(s.values(i)) << "\n";
    emit_text(o.spectrum_output, spec.str(), out);
  }
}

// -------------------------------------------------------------------- score

struct ScoreOptions {
  std::string pairs;
  std::string output;
  std::string per_pair;
};

Eigen::VectorXd read_vector(const fs::path& path) {
  const std::string bytes = read_text(path);
  if (bytes.size() >= 4 && bytes.compare(0, 4, "EMBF") == 0) {
    const EmbeddingSequence x = embf::embeddings_from(embf::decode(bytes));
    if (x.num_frames() != 1)
      throw ValidationError(path.string() + ": speaker vector file must hold exactly one row");
    return x.frames().row(0).transpose();
  }
  std::istringstream in(bytes);
  std::vector<double> values;
  std::string tok;
  while (in >> tok) values.push_back(parse_double(tok, path.string() + " entry"));
  if (values.empty()) throw ValidationError(path.string() + ": empty speaker vector");
  return Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

struct PairScore {
  ScoredPair scored;
  ClampedValue wer, cer, sim;
};

std::vector<PairScore> read_pairs(const std::string& path) {
  const fs::path base = fs::path(path).parent_path();
  auto resolve = [&](const std::string& p) {
    const fs::path q(p);
    return q.is_absolute() ? q : base / q;
  };

  std::vector<PairScore> rows;
  std::istringstream in(read_text(path));
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty() || trim(line).front() == '#') continue;
    const auto f = split(line, '\t');
    const std::string where = path + ":" + std::to_string(lineno) + ": ";
    try {
      PairScore row;
      row.scored.method = trim(f.at(0));
      row.scored.pair_id = f.size() > 1 ? trim(f[1]) : "";
      if (f.size() == 5) {
        const double w = parse_double(trim(f[2]), "WER");
        const double c = parse_double(trim(f[3]), "CER");
        const double s = parse_double(trim(f[4]), "SIM");
        row.wer = {w, w};
        row.cer = {c, c};
        row.sim = {s, s};
      } else if (f.size() == 6) {
        row.wer = wer(f[2], f[3]);
        row.cer = cer(f[2], f[3]);
        row.sim = cosine_sim(read_vector(resolve(trim(f[4]))), read_vector(resolve(trim(f[5]))));
      } else {
        throw ValidationError("expected 5 or 6 tab-separated fields, got " +
                              std::to_string(f.size()));
      }
      if (row.scored.method.empty()) throw ValidationError("empty method name");
      row.scored.score = total_score(row.wer.clamped, row.cer.clamped, row.sim.clamped);
      rows.push_back(std::move(row));
    } catch (const ValidationError& e) {
      throw ValidationError(where + e.what());
    }
  }
  if (rows.empty()) throw ValidationError(path + ": no score records");
  return rows;
}

void run_score(const ScoreOptions& o, std::ostream& out) {
  const std::vector<PairScore> rows = read_pairs(o.pairs);
  std::vector<ScoredPair> scored;
  scored.reserve(rows.size());
  for (const auto& r : rows) scored.push_back(r.scored);

  std::ostringstream table;
  table << "method\tpairs\ttotal\twer\tcer\tsim\n";
  for (const auto& row : aggregate(scored))
    table << row.method << "\t" << row.count << "\t" << fmt6(row.mean.total) << "\t"
          << fmt6(row.mean.wer) << "\t" << fmt6(row.mean.cer) << "\t" << fmt6(row.mean.sim)
          << "\n";
  emit_text(o.output, table.str(), out);

  if (!o.per_pair.empty()) {
    std::ostringstream detail;
    detail << "method\tpair_id\ttotal\twer\tcer\tsim\twer_raw\tcer_raw\tsim_raw\n";
    for (const auto& r : rows)
      detail << r.scored.method << "\t" << r.scored.pair_id << "\t" << fmt6(r.scored.score.total)
             << "\t" << fmt6(r.scored.score.wer) << "\t" << fmt6(r.scored.score.cer) << "\t"
             << fmt6(r.scored.score.sim) << "\t" << fmt6(r.wer.raw) << "\t" << fmt6(r.cer.raw)
             << "\t" << fmt6(r.sim.raw) << "\n";
    emit_text(o.per_pair, detail.str(), out);
  }
}

// ----------------------------------------------------------------------- w2

struct W2Options {
  std::string a, b;
  Eigen::Index subsample = kDefaultSubsample;
  std::optional<std::uint64_t> seed;
};

void run_w2(const W2Options& o, std::ostream& out) {
  const EmbeddingSequence a = embf::read_embeddings(o.a);
  const EmbeddingSequence b = embf::read_embeddings(o.b);
  if (a.dim() != b.dim())
    throw DimensionMismatchError("w2 inputs", static_cast<std::size_t>(a.dim()),
                                 static_cast<std::size_t>(b.dim()));
  if (o.subsample < 1) throw ValidationError("--subsample must be positive");
  const Eigen::Index s = std::min({a.num_frames(), b.num_frames(), o.subsample});
  const bool subsampling = a.num_frames() > s || b.num_frames() > s;
  if (subsampling && !o.seed)
    throw ValidationError("--seed is required when the inputs are subsampled");
  const std::uint64_t seed = o.seed.value_or(0);

  out << "empirical_w2\t" << fmt6(empirical_w2(a.frames(), b.frames(), o.subsample, seed)) << "\n";
  if (a.num_frames() >= 2 && b.num_frames() >= 2)
    out << "gaussian_w2\t" << fmt6(gaussian_w2(fit_gaussian(a), fit_gaussian(b))) << "\n";
  out << "# points=" << s << " seed=" << (o.seed ? std::to_string(*o.seed) : "none")
      << " solver=exact-assignment\n";
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Factorized Monge-Kantorovich voice-conversion toolkit over embedding files",
               "mklvc"};
  app.require_subcommand(1);

  FitStatsOptions fit;
  auto* fit_cmd = app.add_subcommand("fit-stats", "Per-dimension std and sort profile of a corpus");
  fit_cmd->add_option("embeddings", fit.inputs, "EMBF embedding files")->required();
  fit_cmd->add_option("-o,--output", fit.output, "Profile file to write")->required();
  fit_cmd->add_option("--tag", fit.tag, "Source tag (default: corpus:<n> files)");

  ConvertOptions conv;
  auto* conv_cmd = app.add_subcommand("convert", "Convert a source sequence towards a reference");
  conv_cmd->add_option("--method", conv.method, "mkl, knn or sinkhorn")->required();
  conv_cmd->add_option("--src", conv.src, "Source embeddings");
  conv_cmd->add_option("--ref", conv.ref, "Reference embeddings");
  conv_cmd->add_option("--out", conv.out, "Output embeddings");
  conv_cmd->add_option("--manifest", conv.manifest, "Lines of 'source reference output'");
  conv_cmd->add_option("--jobs", conv.jobs, "Parallel conversions for --manifest");
  conv_cmd->add_option("--K", conv.block_dim, "MKL block dimension");
  conv_cmd->add_option("--k", conv.k, "kNN neighbours");
  conv_cmd->add_option("--n-trim", conv.n_trim, "kNN distance dimensions (default D)");
  conv_cmd->add_option("--metric", conv.metric, "cosine or sqeuclidean");
  conv_cmd->add_option("--epsilon", conv.epsilon, "Sinkhorn entropic regularization");
  conv_cmd->add_option("--max-iters", conv.max_iters, "Sinkhorn iteration cap");
  conv_cmd->add_option("--marginal-tol", conv.marginal_tol, "Sinkhorn marginal tolerance");
  conv_cmd->add_option("--profile", conv.profile_path, "Sort profile (default: from the source)");
  conv_cmd->add_option("--ridge", conv.ridge, "Covariance ridge, or 'auto'");
  conv_cmd->add_option("--seed", conv.seed, "Recorded seed (conversion is deterministic)");
  conv_cmd->add_option("--save-map", conv.save_map, "Also write the fitted MKL map");

  DiagnoseOptions diag;
  auto* diag_cmd = app.add_subcommand("diagnose", "Per-block distance to a Gaussian");
  diag_cmd->add_option("--input", diag.input, "Embeddings")->required();
  diag_cmd->add_option("--K", diag.block_dim, "Block dimension")->required();
  diag_cmd->add_option("--stride", diag.stride, "Start-index stride");
  diag_cmd->add_option("--subsample", diag.subsample, "Points per cloud");
  diag_cmd->add_option("--mc-samples", diag.mc_samples, "Samples drawn from each fitted Gaussian");
  diag_cmd->add_option("--seed", diag.seed, "Random seed")->required();
  diag_cmd->add_option("--profile", diag.profile_path, "Sort profile (default: from the input)");
  diag_cmd->add_option("-o,--output", diag.output, "Profile table (default: stdout)");
  diag_cmd->add_option("--spectrum-out", diag.spectrum_output, "Also write the std spectrum");

  ScoreOptions score;
  auto* score_cmd = app.add_subcommand("score", "Aggregate WER/CER/SIM into a leaderboard");
  score_cmd->add_option("--pairs", score.pairs, "Tab-separated score records")->required();
  score_cmd->add_option("-o,--output", score.output, "Leaderboard (default: stdout)");
  score_cmd->add_option("--per-pair", score.per_pair, "Also write per-pair scores");

  W2Options w2;
  auto* w2_cmd = app.add_subcommand("w2", "Wasserstein-2 distance between two embedding files");
  w2_cmd->add_option("--a", w2.a, "First embeddings")->required();
  w2_cmd->add_option("--b", w2.b, "Second embeddings")->required();
  w2_cmd->add_option("--subsample", w2.subsample, "Points per cloud");
  w2_cmd->add_option("--seed", w2.seed, "Random seed (required when subsampling)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*fit_cmd) run_fit_stats(fit, out);
    if (*conv_cmd) return run_convert(conv, out, err);
    if (*diag_cmd) run_diagnose(diag, out);
    if (*score_cmd) run_score(score, out);
    if (*w2_cmd) run_w2(w2, out);
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitOk;
}

}  // namespace mklvc
