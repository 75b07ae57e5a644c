// mixsimplex: command-line front end.
//
// Exit codes: 0 success, 1 check failure, 2 usage or spec error,
// 3 I/O error, 4 malformed data.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mixsimplex/checks.hpp"
#include "mixsimplex/io.hpp"
#include "mixsimplex.hpp"

namespace {

using namespace mixsimplex;
using nlohmann::json;
using io::data_error;
using io::format_double;
using io::io_error;

constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitData = 4;

/// A usage problem detected after parsing (bad combination of flags, unsupported mode).
struct usage_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw io_error("cannot read " + path);
  return ss.str();
}

class OutputFile {
 public:
  explicit OutputFile(const std::string& path) : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw io_error("cannot open " + path + " for writing");
  }
  std::ostream& stream() { return out_; }
  void close() {
    out_.close();
    if (!out_) throw io_error("cannot write " + path_);
  }

 private:
  std::string path_;
  std::ofstream out_;
};

io::DistributionSpec load_spec(const std::string& path) {
  const std::string text = read_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(path + ": not valid JSON (" + e.what() + ")");
  }
  return io::parse_spec(j);
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag, const io::DistributionSpec& spec) {
  if (flag) return *flag;
  return spec.seed.value_or(0);
}

double unit_scale(bool bits) { return bits ? 1.0 / std::numbers::ln2 : 1.0; }
const char* unit_name(bool bits) { return bits ? "bits" : "nats"; }

template <class D>
constexpr bool has_density = requires(const D& d, const SimplexPoint& y) { log_density(d, y); };

FaceSample draw(const io::AnyDistribution& dist, Rng& g) {
  return std::visit(
      [&](const auto& d) -> FaceSample {
        auto s = sample(d, g);
        return {s.face, std::move(s.point)};
      },
      dist);
}

json face_json(const FaceIndexSet& f) {
  json a = json::array();
  for (int i : f.indices()) a.push_back(i + 1);
  return a;
}

// ---------------------------------------------------------------------------

int cmd_maxent(int k_min, int k_max, int n_max, const std::string& format, bool bits) {
  if (k_max < 2 || k_max > kMaxFaceAlphabet) throw usage_error("--k must be in [2, 63]");
  if (k_min < 2 || k_min > k_max) throw usage_error("--k-min must be in [2, --k]");
  if (n_max < 0 || n_max > 60) throw usage_error("--n-max must be in [0, 60]");
  const double s = unit_scale(bits);
  if (format == "csv") {
    std::cout << "K,N,H_maxent,H_discrete,H_continuous\n";
    for (int k = k_min; k <= k_max; ++k)
      for (int n = 0; n <= n_max; ++n)
        std::cout << k << ',' << n << ',' << format_double(s * maxent_entropy(k, n)) << ','
                  << format_double(s * std::log(static_cast<double>(k))) << ','
                  << format_double(0.0 - s * log_factorial(static_cast<unsigned>(k - 1))) << '\n';
  } else {
    json rows = json::array();
    for (int k = k_min; k <= k_max; ++k)
      for (int n = 0; n <= n_max; ++n)
        rows.push_back({{"K", k},
                        {"N", n},
                        {"H_maxent", s * maxent_entropy(k, n)},
                        {"H_discrete", s * std::log(static_cast<double>(k))},
                        {"H_continuous", 0.0 - s * log_factorial(static_cast<unsigned>(k - 1))}});
    std::cout << json{{"unit", unit_name(bits)}, {"rows", rows}}.dump(2) << '\n';
  }
  return 0;
}

int cmd_sample(const std::string& spec_path, long long num, std::optional<std::uint64_t> seed_flag, const std::string& out_path) {
  if (num < 0) throw usage_error("--num must be non-negative");
  const auto spec = load_spec(spec_path);
  Rng g = make_stream(resolve_seed(seed_flag, spec));
  OutputFile out(out_path);
  for (long long i = 0; i < num; ++i) {
    const FaceSample s = draw(spec.dist, g);
    out.stream() << io::sample_line(s.face, s.point) << '\n';
  }
  out.close();
  return 0;
}

struct Measure {
  double value = 0.0;
  std::optional<double> std_error;
  json extra = json::object();
};

Measure exact_entropy(const io::AnyDistribution& dist, bool bits) {
  if (const auto* md = std::get_if<MixedDirichlet>(&dist)) {
    if (md->alphabet_size() > 14) throw usage_error("exact entropy of a mixed-dirichlet needs K <= 14; use --mode mc");
    return {entropy_exact(*md).value, std::nullopt, {}};
  }
  if (const auto* me = std::get_if<MaxEntMixed>(&dist)) {
    Measure m{me->direct_sum_entropy(), std::nullopt, {}};
    m.extra["coding_entropy"] =
        unit_scale(bits) * coding_entropy_by_dimension(me->dimension_probs(), me->direct_sum_entropy(), me->bits());
    return m;
  }
  if (const auto* gs = std::get_if<GaussianSparsemax>(&dist); gs && gs->alphabet_size() == 2) {
    const auto p = GaussianSparsemax2::from(*gs);
    return {gs2_entropy(p.z, p.sigma), std::nullopt, {}};
  }
  throw usage_error("exact entropy is available for mixed-dirichlet, maxent and gaussian-sparsemax with K = 2");
}

Measure mc_entropy(const io::AnyDistribution& dist, std::size_t n, Rng& g) {
  return std::visit(
      [&](const auto& d) -> Measure {
        using D = std::decay_t<decltype(d)>;
        if constexpr (has_density<D>) {
          const Estimate e = direct_sum_entropy_mc(d, n, g);
          return {e.value, e.std_error, {}};
        } else {
          throw usage_error("this distribution kind has no density; entropy is unavailable");
        }
      },
      dist);
}

Measure exact_kl(const io::AnyDistribution& p, const io::AnyDistribution& q) {
  const auto* mp = std::get_if<MixedDirichlet>(&p);
  const auto* mq = std::get_if<MixedDirichlet>(&q);
  if (mp && mq) {
    if (mp->alphabet_size() != mq->alphabet_size()) throw usage_error("kl: the two distributions have different K");
    if (mp->alphabet_size() > 14) throw usage_error("exact kl of mixed-dirichlet needs K <= 14; use --mode mc");
    return {kl_mixed_exact(*mp, *mq).value, std::nullopt, {}};
  }
  const auto* ep = std::get_if<MaxEntMixed>(&p);
  const auto* eq = std::get_if<MaxEntMixed>(&q);
  if (ep && eq) {
    if (ep->alphabet_size() != eq->alphabet_size()) throw usage_error("kl: the two distributions have different K");
    return {kl(*ep, *eq), std::nullopt, {}};
  }
  const auto* gp = std::get_if<GaussianSparsemax>(&p);
  const auto* gq = std::get_if<GaussianSparsemax>(&q);
  if (gp && gq && gp->alphabet_size() == 2 && gq->alphabet_size() == 2) {
    const auto a = GaussianSparsemax2::from(*gp);
    const auto b = GaussianSparsemax2::from(*gq);
    return {gs2_kl(a.z, a.sigma, b.z, b.sigma), std::nullopt, {}};
  }
  throw usage_error("exact kl is available for two mixed-dirichlet, two maxent, or two K = 2 gaussian-sparsemax specs");
}

Measure mc_kl(const io::AnyDistribution& p, const io::AnyDistribution& q, std::size_t n, Rng& g) {
  if (io::alphabet_size(p) != io::alphabet_size(q)) throw usage_error("kl: the two distributions have different K");
  return std::visit(
      [&](const auto& a, const auto& b) -> Measure {
        using A = std::decay_t<decltype(a)>;
        using B = std::decay_t<decltype(b)>;
        if constexpr (has_density<A> && has_density<B>) {
          const KlOutcome o = direct_sum_kl_mc(a, b, n, g);
          Measure m{o.estimate.value, o.estimate.std_error, {{"support_violation", o.support_violation}}};
          if (o.witness) m.extra["witness_face"] = face_json(*o.witness);
          return m;
        } else {
          throw usage_error("kl needs distribution kinds with a density");
        }
      },
      p, q);
}

void print_measure(const char* quantity, const std::string& kind, const std::string& mode, const Measure& m, bool bits) {
  const double s = unit_scale(bits);
  json out{{"quantity", quantity}, {"kind", kind}, {"mode", mode}, {"unit", unit_name(bits)}};
  if (std::isfinite(m.value)) out["value"] = s * m.value;
  else out["value"] = nullptr;
  if (m.std_error && std::isfinite(m.value)) out["std_error"] = s * *m.std_error;
  for (const auto& [key, v] : m.extra.items()) out[key] = v;
  std::cout << out.dump(2) << '\n';
}

int cmd_entropy(const std::string& spec_path, const std::string& mode, long long samples, std::optional<std::uint64_t> seed,
                bool bits) {
  const auto spec = load_spec(spec_path);
  if (samples < 2) throw usage_error("--samples must be at least 2");
  Rng g = make_stream(resolve_seed(seed, spec));
  const Measure m = mode == "exact" ? exact_entropy(spec.dist, bits) : mc_entropy(spec.dist, static_cast<std::size_t>(samples), g);
  print_measure("entropy", spec.kind, mode, m, bits);
  return 0;
}

int cmd_kl(const std::string& p_path, const std::string& q_path, const std::string& mode, long long samples,
           std::optional<std::uint64_t> seed, bool bits) {
  const auto p = load_spec(p_path);
  const auto q = load_spec(q_path);
  if (samples < 2) throw usage_error("--samples must be at least 2");
  Rng g = make_stream(resolve_seed(seed, p));
  const Measure m = mode == "exact" ? exact_kl(p.dist, q.dist) : mc_kl(p.dist, q.dist, static_cast<std::size_t>(samples), g);
  print_measure("kl", p.kind + " || " + q.kind, mode, m, bits);
  return 0;
}

int cmd_face_hist(const std::string& in_path, long long top) {
  std::istringstream in(read_file(in_path));
  const auto records = io::read_samples(in);
  const int k = records.front().point.alphabet_size();
  std::vector<SimplexPoint> points;
  points.reserve(records.size());
  for (const auto& r : records) {
    if (r.point.alphabet_size() != k) throw data_error("samples: inconsistent K across lines");
    points.push_back(r.point);
  }
  const FaceHistogram h = face_histogram(points);
  const double n = static_cast<double>(h.total);
  std::cout << "section,key,count,fraction\n";
  for (int d = 0; d < k; ++d) {
    const auto it = h.by_dimension.find(d);
    const std::size_t c = it == h.by_dimension.end() ? 0 : it->second;
    std::cout << "dimension," << d << ',' << c << ',' << format_double(static_cast<double>(c) / n) << '\n';
  }
  std::vector<std::pair<FaceIndexSet, std::size_t>> faces(h.by_face.begin(), h.by_face.end());
  std::stable_sort(faces.begin(), faces.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  if (top >= 0 && static_cast<std::size_t>(top) < faces.size()) faces.resize(static_cast<std::size_t>(top));
  for (const auto& [f, c] : faces)
    std::cout << "face,\"" << f.to_string() << "\"," << c << ',' << format_double(static_cast<double>(c) / n) << '\n';
  return 0;
}

int cmd_fit_glm(const std::string& data_path, double train_frac, int steps, double lr, std::uint64_t seed,
                const std::string& out_path, const std::string& predict, long long mc_samples) {
  if (!(train_frac > 0.0 && train_frac < 1.0)) throw usage_error("--train-frac must be in (0, 1)");
  if (steps < 1) throw usage_error("--steps must be positive");
  if (!(lr > 0.0)) throw usage_error("--lr must be positive");
  if (mc_samples < 1) throw usage_error("--mc-samples must be positive");
  std::istringstream in(read_file(data_path));
  const io::GlmDataset ds = io::read_dataset_csv(in);
  for (std::size_t row : ds.renormalized_rows)
    std::cerr << "warning: dataset row " << row << ": targets renormalized to sum to 1\n";
  const std::size_t n = ds.rows.size();
  if (n < 2) throw data_error("dataset: need at least two rows to split");

  // Seeded Fisher-Yates split.
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng split_rng = make_stream(seed, 1000);
  for (std::size_t i = n - 1; i > 0; --i) {
    const auto j = std::min(i, static_cast<std::size_t>(uniform01(split_rng) * static_cast<double>(i + 1)));
    std::swap(order[i], order[j]);
  }
  const std::size_t n_train = std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(train_frac * static_cast<double>(n))), 1, n - 1);
  std::vector<GlmObservation> train;
  std::vector<GlmObservation> test;
  for (std::size_t i = 0; i < n; ++i) (i < n_train ? train : test).push_back(ds.rows[order[i]]);

  GlmFitConfig cfg;
  cfg.steps = steps;
  cfg.learning_rate = lr;
  cfg.seed = seed;
  const GlmFitResult fit = glm_fit(train, cfg);

  const PredictionRule rule = predict == "sample-mean" ? PredictionRule::kSampleMean : PredictionRule::kMostProbableMean;
  Rng pred_rng = make_stream(seed, 2000);
  std::vector<SimplexPoint> predicted;
  std::vector<SimplexPoint> truth;
  for (const auto& obs : test) {
    predicted.push_back(glm_predict(fit.model, obs.x, rule, static_cast<std::size_t>(mc_samples), pred_rng));
    truth.push_back(obs.y);
  }
  const RegressionMetrics m = regression_metrics(predicted, truth);

  if (!out_path.empty()) {
    OutputFile out(out_path);
    out.stream() << io::model_to_json(fit.model).dump(2) << '\n';
    out.close();
  }
  json report{{"predict", predict},
              {"train_rows", n_train},
              {"test_rows", n - n_train},
              {"steps", steps},
              {"final_train_loss", fit.loss_history.back()},
              {"rmse", m.rmse},
              {"mae", m.mae},
              {"macro_f1", m.macro_f1}};
  std::cout << report.dump(2) << '\n';
  return 0;
}

int cmd_generate_data(int k, int d, long long rows, std::uint64_t seed, const std::string& out_path,
                      const std::string& truth_path) {
  if (k < 2 || k > kMaxFaceAlphabet) throw usage_error("--k must be in [2, 63]");
  if (d < 0 || d > 10000) throw usage_error("--d must be in [0, 10000]");
  if (rows < 1) throw usage_error("--rows must be positive");
  const PlantedDataset ds = generate_planted_dataset(k, d, static_cast<std::size_t>(rows), seed);
  if (out_path.empty() || out_path == "-") {
    io::write_dataset_csv(std::cout, ds.rows, d, k);
  } else {
    OutputFile out(out_path);
    io::write_dataset_csv(out.stream(), ds.rows, d, k);
    out.close();
  }
  if (!truth_path.empty()) {
    OutputFile out(truth_path);
    out.stream() << io::model_to_json(ds.truth).dump(2) << '\n';
    out.close();
  }
  return 0;
}

int cmd_check(const std::string& level, const std::string& fault) {
  checks::Faults faults;
  if (fault == "log-normalizer-sign") faults.flip_log_normalizer_sign = true;
  else if (!fault.empty()) throw usage_error("unknown fault '" + fault + "'");
  const auto results = checks::run(level == "full" ? checks::Level::kFull : checks::Level::kFast, faults);
  std::vector<std::string> failed;
  for (const auto& r : results) {
    std::cout << (r.passed ? "PASS " : "FAIL ") << r.id << ": " << r.detail << '\n';
    if (!r.passed) failed.push_back(r.id);
  }
  std::cout << results.size() - failed.size() << '/' << results.size() << " checks passed\n";
  if (failed.empty()) return 0;
  std::cerr << "failed checks:";
  for (const auto& id : failed) std::cerr << ' ' << id;
  std::cerr << '\n';
  return kExitCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mixed discrete-continuous distributions on the probability simplex"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "mixsimplex 1.0.0");
  unsigned threads = 0;
  app.add_option("--threads", threads, "Worker threads for Monte Carlo (default: $MIXSIMPLEX_THREADS or 1)")
      ->check(CLI::Range(1U, 256U));

  // maxent
  auto* maxent = app.add_subcommand("maxent", "Maximum entropy table over K and bit precision N");
  int me_k = 0;
  int me_kmin = 2;
  int me_nmax = 0;
  std::string me_format = "csv";
  bool me_bits = false;
  maxent->add_option("--k", me_k, "Largest alphabet size K")->required();
  maxent->add_option("--k-min", me_kmin, "Smallest alphabet size")->capture_default_str();
  maxent->add_option("--n-max", me_nmax, "Largest bit precision N")->capture_default_str();
  maxent->add_option("--format", me_format, "Output format")->capture_default_str()->check(CLI::IsMember({"csv", "json"}));
  maxent->add_flag("--bits", me_bits, "Report entropies in bits");

  // sample
  auto* samp = app.add_subcommand("sample", "Draw samples from a distribution spec into a JSON-lines file");
  std::string s_dist;
  std::string s_out;
  long long s_num = 0;
  std::optional<std::uint64_t> s_seed;
  samp->add_option("--dist", s_dist, "Distribution spec (JSON)")->required();
  samp->add_option("--num", s_num, "Number of samples")->required();
  samp->add_option("--seed", s_seed, "Random seed (default: the spec's seed, else 0)");
  samp->add_option("--out", s_out, "Output file")->required();

  // entropy / kl
  auto* ent = app.add_subcommand("entropy", "Direct sum entropy of a distribution spec");
  auto* klc = app.add_subcommand("kl", "Direct sum KL divergence between two distribution specs");
  std::string e_dist;
  std::string e_dist2;
  std::string e_mode = "exact";
  long long e_samples = 100000;
  std::optional<std::uint64_t> e_seed;
  bool e_bits = false;
  for (auto* sc : {ent, klc}) {
    sc->add_option("--dist", e_dist, "Distribution spec (JSON)")->required();
    sc->add_option("--mode", e_mode, "exact or mc")->capture_default_str()->check(CLI::IsMember({"exact", "mc"}));
    sc->add_option("--samples", e_samples, "Monte Carlo samples")->capture_default_str();
    sc->add_option("--seed", e_seed, "Random seed (default: the spec's seed, else 0)");
    sc->add_flag("--bits", e_bits, "Report in bits");
  }
  klc->add_option("--dist2", e_dist2, "Second distribution spec (JSON)")->required();

  // face-hist
  auto* fh = app.add_subcommand("face-hist", "Face and dimension histogram of a samples file (CSV)");
  std::string fh_in;
  long long fh_top = 20;
  fh->add_option("--in", fh_in, "Samples file (JSON lines)")->required();
  fh->add_option("--top", fh_top, "Number of faces listed (-1 for all)")->capture_default_str();

  // fit-glm
  auto* fit = app.add_subcommand("fit-glm", "Fit the Mixed Dirichlet regression model to a CSV dataset");
  std::string f_data;
  std::string f_out;
  std::string f_predict = "most-probable-mean";
  double f_frac = 0.2;
  int f_steps = 400;
  double f_lr = 0.1;
  std::uint64_t f_seed = 0;
  long long f_mc = 100;
  fit->add_option("--data", f_data, "Dataset CSV")->required();
  fit->add_option("--train-frac", f_frac, "Fraction of rows used for training")->capture_default_str();
  fit->add_option("--steps", f_steps, "Adam steps")->capture_default_str();
  fit->add_option("--lr", f_lr, "Adam learning rate")->capture_default_str();
  fit->add_option("--seed", f_seed, "Seed for the split, initialization and sampling")->capture_default_str();
  fit->add_option("--out", f_out, "Write the fitted model (JSON)");
  fit->add_option("--predict", f_predict, "Prediction rule")->capture_default_str()
      ->check(CLI::IsMember({"most-probable-mean", "sample-mean"}));
  fit->add_option("--mc-samples", f_mc, "Samples per prediction for sample-mean")->capture_default_str();

  // generate-data
  auto* gen = app.add_subcommand("generate-data", "Synthetic dataset from a random planted model (CSV)");
  int g_k = 5;
  int g_d = 4;
  long long g_rows = 500;
  std::uint64_t g_seed = 0;
  std::string g_out;
  std::string g_truth;
  gen->add_option("--k", g_k, "Number of target coordinates")->capture_default_str();
  gen->add_option("--d", g_d, "Number of predictors")->capture_default_str();
  gen->add_option("--rows", g_rows, "Number of rows")->capture_default_str();
  gen->add_option("--seed", g_seed, "Random seed")->capture_default_str();
  gen->add_option("--out", g_out, "Output CSV (default: standard output)");
  gen->add_option("--truth-out", g_truth, "Also write the planted model (JSON)");

  // check
  auto* chk = app.add_subcommand("check", "Run the oracle verification suite");
  std::string c_level = "fast";
  std::string c_fault;
  chk->add_option("--level", c_level, "fast or full")->capture_default_str()->check(CLI::IsMember({"fast", "full"}));
  chk->add_option("--inject-fault", c_fault, "Deliberately break a component")->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  if (threads > 0) {
    const std::string v = std::to_string(threads);
    setenv("MIXSIMPLEX_THREADS", v.c_str(), 1);
  }

  try {
    if (*maxent) return cmd_maxent(me_kmin, me_k, me_nmax, me_format, me_bits);
    if (*samp) return cmd_sample(s_dist, s_num, s_seed, s_out);
    if (*ent) return cmd_entropy(e_dist, e_mode, e_samples, e_seed, e_bits);
    if (*klc) return cmd_kl(e_dist, e_dist2, e_mode, e_samples, e_seed, e_bits);
    if (*fh) return cmd_face_hist(fh_in, fh_top);
    if (*fit) return cmd_fit_glm(f_data, f_frac, f_steps, f_lr, f_seed, f_out, f_predict, f_mc);
    if (*gen) return cmd_generate_data(g_k, g_d, g_rows, g_seed, g_out, g_truth);
    if (*chk) return cmd_check(c_level, c_fault);
  } catch (const io_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const data_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const usage_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const resource_limit_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
