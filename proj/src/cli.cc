#include "qreform/cli.h"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>

#include "qreform/anchor_corpus.h"
#include "qreform/beam_search.h"
#include "qreform/errors.h"
#include "qreform/ir_eval.h"
#include "qreform/retrieval.h"
#include "qreform/toy_data.h"
#include "qreform/trainer.h"

namespace qreform {

namespace fs = std::filesystem;

namespace {

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "' for reading");
  return in;
}

std::ofstream open_out(const std::string& path) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  return out;
}

struct Manifest {
  std::string subcommand;
  std::map<std::string, std::string> flags;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  void write(const std::string& path) const {
    nlohmann::json j;
    j["subcommand"] = subcommand;
    j["flags"] = flags;
    if (seed) j["seed"] = *seed;
    j["inputs"] = inputs;
    j["outputs"] = outputs;
    j["tool_version"] = kToolVersion;
    j["duration_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const std::time_t now = std::time(nullptr);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    j["finished_at"] = stamp;
    open_out(path) << j.dump(2) << '\n';
  }
};

void record_flags(const CLI::App& app, Manifest& m) {
  for (const CLI::Option* opt : app.get_options()) {
    const std::string name = opt->get_single_name();
    if (name == "help" || name == "config" || name.empty()) continue;
    std::string value;
    if (opt->count() > 0) {
      for (const auto& r : opt->results()) value += (value.empty() ? "" : ",") + r;
    } else {
      value = opt->get_default_str();
    }
    m.flags[name] = value;
  }
}

// Tab-separated `qid<TAB>query` lines.
std::vector<toy::Topic> read_topics(const std::string& path) {
  std::ifstream in = open_in(path);
  std::vector<toy::Topic> topics;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0)
      throw DataError(path + " line " + std::to_string(line_no) + ": expected qid<TAB>query");
    topics.push_back(toy::Topic{line.substr(0, tab), line.substr(tab + 1)});
  }
  return topics;
}

void write_topics(const std::string& path, const std::vector<toy::Topic>& topics) {
  std::ofstream out = open_out(path);
  for (const auto& t : topics) out << t.qid << '\t' << t.query << '\n';
}

void write_qrels(const std::string& path, const Qrels& qrels) {
  std::ofstream out = open_out(path);
  for (const auto& qid : qrels.query_ids())
    for (const auto& [doc, grade] : qrels.judgments(qid))
      out << qid << " 0 " << doc << ' ' << grade << '\n';
}

// ---- build-pairs -----------------------------------------------------------

struct BuildPairsArgs {
  std::string input, out_train, out_valid;
  std::size_t valid_size = 1000;
  std::uint64_t seed = 1;
  FilterRules rules;
};

void run_build_pairs(const BuildPairsArgs& a, std::ostream& err) {
  std::ifstream in = open_in(a.input);
  ParseStats stats;
  const auto records = parse_anchor_log(in, &stats);
  const auto sessions = group_sessions(records);
  const PairCorpus corpus = build_pairs(sessions, a.valid_size, a.seed, a.rules);
  for (const auto& w : corpus.warnings) err << "warning: " << w << '\n';
  {
    std::ofstream out = open_out(a.out_train);
    write_pairs(out, corpus.train);
  }
  {
    std::ofstream out = open_out(a.out_valid);
    write_pairs(out, corpus.validation);
  }
  err << "lines " << stats.lines << ", records " << stats.records << ", skipped "
      << stats.skipped << ", sessions " << sessions.size() << ", pairs "
      << corpus.train.size() + corpus.validation.size() << " (train " << corpus.train.size()
      << ", validation " << corpus.validation.size() << ")\n";
}

// ---- train ---------------------------------------------------------------

struct TrainArgs {
  std::string pairs, valid, out, curve, alphabet, resume;
  TrainConfig config;
  ModelConfig model;
};

std::vector<TrainingPair> load_pairs(const std::string& path) {
  std::ifstream in = open_in(path);
  return read_pairs(in);
}

void run_train(const TrainArgs& a, std::ostream& err) {
  AdamState adam;
  std::optional<Model> model;
  if (!a.resume.empty()) {
    model.emplace(load_checkpoint(a.resume, &adam));
  } else {
    Alphabet alphabet = a.alphabet.empty() ? Alphabet::standard() : Alphabet::from_file(a.alphabet);
    model.emplace(std::move(alphabet), a.model);
    init_params(*model, a.config.seed, a.config.init_range);
  }
  const auto train = encode_pairs(model->alphabet(), load_pairs(a.pairs));
  const auto valid = encode_pairs(model->alphabet(), load_pairs(a.valid));
  if (train.empty()) throw DataError("no usable training pairs in '" + a.pairs + "'");

  Trainer trainer(*model, a.config);
  if (!a.resume.empty()) trainer.adam() = adam;
  double running = 0.0;
  int since = 0;
  const ValidationCurve curve = trainer.fit(train, valid, [&](std::int64_t step, double loss) {
    running += loss;
    ++since;
    if (step % a.config.validation_interval == 0 || step == a.config.max_steps) {
      err << "step " << step << " train_loss " << std::fixed << std::setprecision(4)
          << running / since << '\n';
      running = 0.0;
      since = 0;
    }
  });
  save_checkpoint(a.out, *model, &trainer.adam());
  std::ofstream out = open_out(a.curve);
  out << "step\tloss\n";
  out << std::setprecision(10);
  for (const auto& p : curve) out << p.step << '\t' << p.loss << '\n';
  if (!curve.empty()) err << "final validation loss " << curve.back().loss << '\n';
}

// ---- generate ------------------------------------------------------------

struct GenerateArgs {
  std::string ckpt, query, queries, out;
  BeamOptions beam;
};

void write_candidates(std::ostream& out, const BeamResult& r, const std::string* source) {
  out << std::fixed << std::setprecision(6);
  for (std::size_t i = 0; i < r.candidates.size(); ++i) {
    if (source != nullptr) out << *source << '\t';
    out << (i + 1) << '\t' << r.candidates[i].display_score << '\t' << r.candidates[i].text;
    if (!r.candidates[i].terminated) out << "\t[no-eos]";
    out << '\n';
  }
}

void run_generate(const GenerateArgs& a, std::ostream& out, std::ostream& err) {
  if (a.query.empty() == a.queries.empty())
    throw ContractViolation("generate: give exactly one of --query or --queries");
  const Model model = load_checkpoint(a.ckpt);
  std::ostringstream buf;
  auto one = [&](const std::string& q, bool batch) {
    const BeamResult r = generate(model, q, a.beam);
    for (const auto& w : r.warnings) err << "warning: '" << q << "': " << w << '\n';
    write_candidates(buf, r, batch ? &q : nullptr);
  };
  if (!a.query.empty()) {
    one(a.query, false);
  } else {
    std::ifstream in = open_in(a.queries);
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      one(line, true);
    }
  }
  if (a.out.empty()) {
    out << buf.str();
  } else {
    open_out(a.out) << buf.str();
  }
}

// ---- index / search --------------------------------------------------------

struct IndexArgs {
  std::string corpus, out;
};

void run_index(const IndexArgs& a, std::ostream& err) {
  std::ifstream in = open_in(a.corpus);
  const InvertedIndex index = InvertedIndex::build(read_corpus(in));
  std::ofstream out = open_out(a.out);
  index.write(out);
  err << "indexed " << index.doc_count() << " documents, " << index.term_count() << " terms, "
      << index.total_tokens() << " tokens\n";
}

InvertedIndex load_index(const std::string& path) {
  std::ifstream in = open_in(path);
  return InvertedIndex::read(in);
}

struct SearchArgs {
  std::string index, queries, runtag = "qreform", out;
  SearchOptions options;
};

void run_search(const SearchArgs& a, std::ostream& out) {
  const InvertedIndex index = load_index(a.index);
  std::ostringstream buf;
  for (const auto& t : read_topics(a.queries))
    write_run(buf, t.qid, search(index, t.query, a.options), a.runtag);
  if (a.out.empty()) {
    out << buf.str();
  } else {
    open_out(a.out) << buf.str();
  }
}

// ---- evaluate ------------------------------------------------------------

struct EvaluateArgs {
  std::string run, qrels, out;
  int k = 20;
  int g_max = 0;
};

Qrels load_qrels(const std::string& path) {
  std::ifstream in = open_in(path);
  return parse_qrels(in);
}

void run_evaluate(const EvaluateArgs& a, std::ostream& out, std::ostream& err) {
  std::ifstream in = open_in(a.run);
  const ParsedRun run = parse_run(in);
  for (const auto& w : run.warnings) err << "warning: " << w << '\n';
  const MetricReport report = evaluate_run(run.rankings, load_qrels(a.qrels), a.k, a.g_max);
  std::ostringstream buf;
  write_report(buf, report);
  if (a.out.empty()) {
    out << buf.str();
  } else {
    open_out(a.out) << buf.str();
  }
}

// ---- evaluate-reform -------------------------------------------------------

struct EvaluateReformArgs {
  std::string ckpt, index, queries, qrels, out_report, out_curve;
  int m = 10;
  int g_max = 0;
  BeamOptions beam;
  SearchOptions search;
};

struct ReformSummary {
  double baseline = 0.0;
  std::vector<double> curve;
};

ReformSummary run_evaluate_reform(const EvaluateReformArgs& a, std::ostream& err) {
  const Model model = load_checkpoint(a.ckpt);
  const InvertedIndex index = load_index(a.index);
  const Qrels qrels = load_qrels(a.qrels);
  const int g_max = a.g_max > 0 ? a.g_max : std::max(1, qrels.max_grade());
  BeamOptions beam = a.beam;
  beam.num_candidates = a.m;

  std::ostringstream report;
  report << "qid\tquery\tbaseline_err@20\tbest_err@20\tbest_m\tbest_candidate\n";
  report << std::fixed << std::setprecision(6);
  std::vector<std::vector<double>> curves;
  double baseline_sum = 0.0;
  const auto topics = read_topics(a.queries);
  if (topics.empty()) throw DataError("no queries in '" + a.queries + "'");
  for (const auto& t : topics) {
    const BeamResult r = generate(model, t.query, beam);
    for (const auto& w : r.warnings) err << "warning: query " << t.qid << ": " << w << '\n';
    std::vector<std::string> candidates;
    for (const auto& c : r.candidates) candidates.push_back(c.text);
    std::vector<double> curve(static_cast<std::size_t>(a.m), 0.0);
    double baseline = 0.0;
    std::string best_text;
    int best_m = 0;
    if (candidates.empty()) {
      baseline = err_at_k(search(index, t.query, a.search), qrels.judgments(t.qid), 20, g_max);
    } else {
      const BestOfMResult b = best_of_m(t.qid, t.query, candidates, index, qrels,
                                        static_cast<int>(candidates.size()), g_max, a.search);
      baseline = b.baseline;
      for (std::size_t i = 0; i < curve.size(); ++i)
        curve[i] = b.best_curve[std::min(i, b.best_curve.size() - 1)];
      best_text = b.candidates[static_cast<std::size_t>(b.best_index)];
      best_m = b.best_index + 1;
    }
    report << t.qid << '\t' << t.query << '\t' << baseline << '\t' << curve.back() << '\t'
           << best_m << '\t' << best_text << '\n';
    baseline_sum += baseline;
    curves.push_back(std::move(curve));
  }
  ReformSummary summary;
  const double n = static_cast<double>(topics.size());
  summary.baseline = baseline_sum / n;
  summary.curve.assign(static_cast<std::size_t>(a.m), 0.0);
  for (const auto& c : curves)
    for (std::size_t i = 0; i < c.size(); ++i) summary.curve[i] += c[i] / n;
  report << "all\t\t" << summary.baseline << '\t' << summary.curve.back() << "\t\t\n";
  open_out(a.out_report) << report.str();

  std::ofstream curve_out = open_out(a.out_curve);
  curve_out << "m\tbest_err@20\n" << std::fixed << std::setprecision(6);
  for (std::size_t i = 0; i < summary.curve.size(); ++i)
    curve_out << (i + 1) << '\t' << summary.curve[i] << '\n';
  err << "baseline err@20 " << summary.baseline << ", best-of-" << a.m << " err@20 "
      << summary.curve.back() << '\n';
  return summary;
}

// ---- demo ----------------------------------------------------------------

struct DemoArgs {
  std::string out = "demo_out";
  std::uint64_t seed = 1;
  int steps = 600;
  int batch = 32;
  double lr = 1e-3;
  double init_range = 0.1;
  int m = 10;
  int beam = 30;
};

void run_demo(const DemoArgs& a, Manifest& manifest, std::ostream& err) {
  const fs::path dir(a.out);
  fs::create_directories(dir);
  auto path = [&](const char* name) {
    const std::string p = (dir / name).string();
    manifest.outputs.push_back(p);
    return p;
  };
  const toy::DemoWorld world = toy::demo_world(a.seed);
  {
    std::ofstream out = open_out(path("anchors.tsv"));
    for (const auto& r : world.anchors) out << r.url_id << '\t' << r.anchor_text << '\t' << r.freq << '\n';
  }
  {
    std::ofstream out = open_out(path("corpus.tsv"));
    for (const auto& d : world.documents) out << d.doc_id << '\t' << d.text << '\n';
  }
  write_topics(path("topics.tsv"), world.topics);
  write_qrels(path("qrels.txt"), world.qrels);

  err << "[demo] build-pairs\n";
  BuildPairsArgs bp;
  bp.input = (dir / "anchors.tsv").string();
  bp.out_train = path("pairs.train.tsv");
  bp.out_valid = path("pairs.valid.tsv");
  bp.valid_size = 200;
  bp.seed = a.seed;
  run_build_pairs(bp, err);

  err << "[demo] train\n";
  TrainArgs tr;
  tr.pairs = bp.out_train;
  tr.valid = bp.out_valid;
  tr.out = path("model.ckpt");
  tr.curve = path("validation_curve.tsv");
  tr.config.learning_rate = a.lr;
  tr.config.init_range = a.init_range;
  tr.config.batch_size = a.batch;
  tr.config.max_steps = a.steps;
  tr.config.validation_interval = std::max(1, a.steps / 10);
  tr.config.seed = a.seed;
  run_train(tr, err);

  err << "[demo] index + baseline search\n";
  IndexArgs ix{(dir / "corpus.tsv").string(), path("index.txt")};
  run_index(ix, err);
  SearchArgs se;
  se.index = ix.out;
  se.queries = (dir / "topics.tsv").string();
  se.runtag = "baseline";
  se.out = path("baseline.run");
  std::ostringstream sink;
  run_search(se, sink);
  EvaluateArgs ev;
  ev.run = se.out;
  ev.qrels = (dir / "qrels.txt").string();
  ev.out = path("baseline.report.tsv");
  run_evaluate(ev, sink, err);

  err << "[demo] evaluate-reform\n";
  EvaluateReformArgs er;
  er.ckpt = tr.out;
  er.index = ix.out;
  er.queries = se.queries;
  er.qrels = ev.qrels;
  er.out_report = path("reform.report.tsv");
  er.out_curve = path("reform.curve.tsv");
  er.m = a.m;
  er.beam.beam_width = a.beam;
  run_evaluate_reform(er, err);
}

int fail(std::ostream& err, int code, const std::string& what) {
  err << "error: " << what << '\n';
  return code;
}

bool given(const std::vector<std::string>& args, const std::string& flag) {
  for (const auto& a : args)
    if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
  return false;
}

// Appends `--key value` for every key=value line of the --config file whose
// flag is not already on the command line.
std::vector<std::string> merge_config(std::vector<std::string> args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty()) return args;
  std::ifstream in = open_in(path);
  std::vector<std::string> extra;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw DataError(path + " line " + std::to_string(line_no) + ": expected key=value");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    std::string key = trim(line.substr(0, eq));
    if (key.rfind("--", 0) == 0) key = key.substr(2);
    if (key.empty() || key == "config")
      throw DataError(path + " line " + std::to_string(line_no) + ": bad key");
    const std::string flag = "--" + key;
    if (given(args, flag) || given(extra, flag)) continue;
    extra.push_back(flag);
    extra.push_back(trim(line.substr(eq + 1)));
  }
  args.insert(args.end(), extra.begin(), extra.end());
  return args;
}

}  // namespace

int run_cli(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Query reformulation toolkit: mine pairs, train, generate, retrieve, evaluate"};
  app.name("qreform");
  app.require_subcommand(1, 1);
  app.set_version_flag("--version", kToolVersion);
  std::uint64_t seed = 1;

  // Merged into argv before parsing; registered so it shows in help.
  std::string config_path;
  auto with_config = [&config_path](CLI::App* sub) {
    sub->add_option("--config", config_path, "key=value file; command-line flags take precedence");
  };

  BuildPairsArgs bp;
  auto* build = app.add_subcommand("build-pairs", "Mine (anchor, canonical anchor) pairs");
  with_config(build);
  build->add_option("--input", bp.input, "Anchor log TSV")->required();
  build->add_option("--out-train", bp.out_train, "Training pairs TSV")->required();
  build->add_option("--out-valid", bp.out_valid, "Validation pairs TSV")->required();
  build->add_option("--valid-size", bp.valid_size, "Held-out pair count")->capture_default_str();
  build->add_option("--seed", seed, "Split seed")->capture_default_str();
  build->add_option("--min-freq", bp.rules.min_freq)->capture_default_str();
  build->add_option("--max-chars", bp.rules.max_chars)->capture_default_str();
  build->add_option("--min-jaccard", bp.rules.min_jaccard)->capture_default_str();

  TrainArgs tr;
  auto* train = app.add_subcommand("train", "Train the encoder-decoder");
  with_config(train);
  train->add_option("--pairs", tr.pairs, "Training pairs TSV")->required();
  train->add_option("--valid", tr.valid, "Validation pairs TSV")->required();
  train->add_option("--out", tr.out, "Checkpoint path")->required();
  train->add_option("--curve", tr.curve, "Validation curve TSV (default <out>.curve.tsv)");
  train->add_option("--resume", tr.resume, "Continue from a checkpoint with optimizer state");
  train->add_option("--alphabet", tr.alphabet, "Alphabet override file");
  train->add_option("--lr", tr.config.learning_rate)->capture_default_str();
  train->add_option("--batch", tr.config.batch_size)->capture_default_str();
  train->add_option("--clip", tr.config.clip_threshold)->capture_default_str();
  train->add_option("--init-range", tr.config.init_range)->capture_default_str();
  train->add_option("--steps", tr.config.max_steps)->capture_default_str();
  train->add_option("--valid-interval", tr.config.validation_interval)->capture_default_str();
  train->add_option("--seed", seed)->capture_default_str();
  train->add_option("--embedding-dim", tr.model.embedding_dim)->capture_default_str();
  train->add_option("--filters", tr.model.filters_per_width)->capture_default_str();
  train->add_option("--pool-stride", tr.model.pool_stride)->capture_default_str();
  train->add_option("--encoder-hidden", tr.model.encoder_hidden)->capture_default_str();
  train->add_option("--decoder-embedding-dim", tr.model.decoder_embedding_dim)
      ->capture_default_str();
  train->add_option("--decoder-hidden", tr.model.decoder_hidden)->capture_default_str();
  train->add_option("--attention-dim", tr.model.attention_dim)->capture_default_str();

  GenerateArgs ge;
  auto* gen = app.add_subcommand("generate", "Beam-search reformulations");
  with_config(gen);
  gen->add_option("--ckpt", ge.ckpt, "Checkpoint")->required();
  gen->add_option("--query", ge.query, "Single query");
  gen->add_option("--queries", ge.queries, "File with one query per line");
  gen->add_option("--out", ge.out, "Output TSV (default stdout)");
  gen->add_option("--beam", ge.beam.beam_width)->capture_default_str();
  gen->add_option("--m", ge.beam.num_candidates)->capture_default_str();
  gen->add_option("--max-len", ge.beam.max_len)->capture_default_str();

  IndexArgs ix;
  auto* index = app.add_subcommand("index", "Build an inverted index");
  with_config(index);
  index->add_option("--corpus", ix.corpus, "doc_id<TAB>text corpus")->required();
  index->add_option("--out", ix.out, "Index path")->required();

  SearchArgs se;
  auto* srch = app.add_subcommand("search", "Rank documents, TREC run output");
  with_config(srch);
  srch->add_option("--index", se.index)->required();
  srch->add_option("--queries", se.queries, "qid<TAB>query file")->required();
  srch->add_option("--k", se.options.k)->capture_default_str();
  srch->add_option("--mu", se.options.mu)->capture_default_str();
  srch->add_option("--runtag", se.runtag)->capture_default_str();
  srch->add_option("--out", se.out, "Run file (default stdout)");

  EvaluateArgs ev;
  auto* eval = app.add_subcommand("evaluate", "Score a TREC run against qrels");
  with_config(eval);
  eval->add_option("--run", ev.run)->required();
  eval->add_option("--qrels", ev.qrels)->required();
  eval->add_option("--k", ev.k)->capture_default_str();
  eval->add_option("--gmax", ev.g_max, "Maximum grade (0: largest in qrels)")
      ->capture_default_str();
  eval->add_option("--out", ev.out, "Report TSV (default stdout)");

  EvaluateReformArgs er;
  auto* reform = app.add_subcommand("evaluate-reform", "Best-of-m evaluation of reformulations");
  with_config(reform);
  reform->add_option("--ckpt", er.ckpt)->required();
  reform->add_option("--index", er.index)->required();
  reform->add_option("--queries", er.queries, "qid<TAB>query file")->required();
  reform->add_option("--qrels", er.qrels)->required();
  reform->add_option("--m", er.m)->capture_default_str();
  reform->add_option("--beam", er.beam.beam_width)->capture_default_str();
  reform->add_option("--max-len", er.beam.max_len)->capture_default_str();
  reform->add_option("--gmax", er.g_max)->capture_default_str();
  reform->add_option("--mu", er.search.mu)->capture_default_str();
  reform->add_option("--out-report", er.out_report)->required();
  reform->add_option("--out-curve", er.out_curve)->required();

  DemoArgs de;
  auto* demo = app.add_subcommand("demo", "End-to-end run on generated toy data");
  with_config(demo);
  demo->add_option("--out", de.out, "Report directory")->capture_default_str();
  demo->add_option("--seed", seed)->capture_default_str();
  demo->add_option("--steps", de.steps)->capture_default_str();
  demo->add_option("--batch", de.batch)->capture_default_str();
  demo->add_option("--lr", de.lr)->capture_default_str();
  demo->add_option("--init-range", de.init_range)->capture_default_str();
  demo->add_option("--m", de.m)->capture_default_str();
  demo->add_option("--beam", de.beam)->capture_default_str();

  std::vector<std::string> args(argv.begin() + (argv.empty() ? 0 : 1), argv.end());
  try {
    args = merge_config(std::move(args));
  } catch (const DataError& e) {
    return fail(err, kDataFailure, e.what());
  }
  if (!args.empty() && !args[0].empty() && args[0][0] != '-') {
    bool known = false;
    for (const auto* sub : app.get_subcommands({})) known = known || sub->get_name() == args[0];
    if (!known) {
      err << "usage error: unknown subcommand '" << args[0] << "'\n" << app.help();
      return kUsage;
    }
  }
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    const auto chosen = app.get_subcommands();
    out << (chosen.empty() ? app.help() : chosen.front()->help());
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << kToolVersion << '\n';
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    err << app.help();
    return kUsage;
  }

  CLI::App* sub = app.get_subcommands().front();
  Manifest manifest;
  manifest.subcommand = sub->get_name();
  record_flags(*sub, manifest);
  try {
    std::string manifest_path;
    if (sub == build) {
      bp.seed = seed;
      manifest.seed = seed;
      manifest.inputs = {bp.input};
      manifest.outputs = {bp.out_train, bp.out_valid};
      run_build_pairs(bp, err);
      manifest_path = bp.out_train + ".manifest.json";
    } else if (sub == train) {
      tr.config.seed = seed;
      manifest.seed = seed;
      if (tr.curve.empty()) tr.curve = tr.out + ".curve.tsv";
      manifest.inputs = {tr.pairs, tr.valid};
      if (!tr.resume.empty()) manifest.inputs.push_back(tr.resume);
      manifest.outputs = {tr.out, tr.curve};
      tr.model.validate();
      run_train(tr, err);
      manifest_path = tr.out + ".manifest.json";
    } else if (sub == gen) {
      manifest.inputs = {ge.ckpt};
      if (!ge.queries.empty()) manifest.inputs.push_back(ge.queries);
      if (!ge.out.empty()) manifest.outputs = {ge.out};
      run_generate(ge, out, err);
      if (!ge.out.empty()) manifest_path = ge.out + ".manifest.json";
    } else if (sub == index) {
      manifest.inputs = {ix.corpus};
      manifest.outputs = {ix.out};
      run_index(ix, err);
      manifest_path = ix.out + ".manifest.json";
    } else if (sub == srch) {
      manifest.inputs = {se.index, se.queries};
      if (!se.out.empty()) manifest.outputs = {se.out};
      run_search(se, out);
      if (!se.out.empty()) manifest_path = se.out + ".manifest.json";
    } else if (sub == eval) {
      manifest.inputs = {ev.run, ev.qrels};
      if (!ev.out.empty()) manifest.outputs = {ev.out};
      run_evaluate(ev, out, err);
      if (!ev.out.empty()) manifest_path = ev.out + ".manifest.json";
    } else if (sub == reform) {
      manifest.inputs = {er.ckpt, er.index, er.queries, er.qrels};
      manifest.outputs = {er.out_report, er.out_curve};
      run_evaluate_reform(er, err);
      manifest_path = er.out_report + ".manifest.json";
    } else if (sub == demo) {
      de.seed = seed;
      manifest.seed = seed;
      run_demo(de, manifest, err);
      manifest_path = (fs::path(de.out) / "manifest.json").string();
      err << "[demo] outputs in " << de.out << '\n';
    }
    if (!manifest_path.empty()) manifest.write(manifest_path);
  } catch (const ContractViolation& e) {
    return fail(err, kUsage, e.what());
  } catch (const NumericError& e) {
    return fail(err, kNumericFailure, e.what());
  } catch (const DataError& e) {
    return fail(err, kDataFailure, e.what());
  } catch (const fs::filesystem_error& e) {
    return fail(err, kDataFailure, e.what());
  }
  return kOk;
}

}  // namespace qreform
