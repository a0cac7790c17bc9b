#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "veracity/config.hpp"
#include "veracity/coordination.hpp"
#include "veracity/corpus.hpp"
#include "veracity/crossplatform.hpp"
#include "veracity/harness.hpp"
#include "veracity/intent.hpp"
#include "veracity/synthetic.hpp"

namespace fs = std::filesystem;
using namespace veracity;

namespace {

struct Globals {
  std::string config_path;
  std::uint64_t seed = 42;
  std::string out = "out";
};

PipelineConfig load_globals_config(const Globals& g) {
  return g.config_path.empty() ? PipelineConfig{} : load_config(g.config_path);
}

fs::path out_dir(const Globals& g) {
  fs::path dir(g.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory '" + g.out + "': " + ec.message());
  return dir;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << content;
}

std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("'" + path + "': " + e.what());
  }
}

GroundTruth load_truth(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  return GroundTruth::parse(in);
}

const Fold& pick_fold(const FoldPlan& plan, std::size_t fold) {
  if (fold >= plan.folds.size()) throw UsageError("--fold must be below " + std::to_string(plan.folds.size()));
  return plan.folds[fold];
}

Timestamp last_horizon(const PipelineConfig& cfg) { return cfg.horizons.back(); }

// gen -----------------------------------------------------------------------

void run_gen(const Globals& g, std::optional<std::size_t> docs) {
  auto cfg = load_globals_config(g);
  if (docs) cfg.synthetic.n_docs = *docs;
  cfg.synthetic.validate();
  auto syn = generate_synthetic(cfg.synthetic, g.seed);
  auto dir = out_dir(g);
  write_file(dir / "corpus.jsonl", serialize_corpus(syn.corpus));
  write_file(dir / "truth.jsonl", syn.truth.to_jsonl());
  std::cout << "wrote " << syn.corpus.documents().size() << " documents, " << syn.corpus.items().size()
            << " engagements to " << dir.string() << "\n";
}

// train / calibrate ---------------------------------------------------------------

void run_train(const Globals& g, const std::string& corpus_path, std::size_t fold) {
  auto cfg = load_globals_config(g);
  auto corpus = load_corpus(corpus_path);
  auto plan = split_folds(corpus, cfg.folds, g.seed);
  const auto& f = pick_fold(plan, fold);
  Pipeline p(cfg);
  p.train(corpus, f.train);
  auto dir = out_dir(g);
  write_file(dir / "model.json", dump(p.to_json()));
  write_file(dir / "folds.json", dump(plan.to_json()));
  std::cout << "trained " << cfg.models.size() << " models on " << f.train.size() << " documents\n";
}

std::string curves_csv(const Pipeline& p) {
  std::ostringstream os;
  os << "model,factor,bin,low,high,support,reliability\n";
  auto j = p.curves().to_json();
  for (const auto& c : j.at("curves")) {
    auto edges = c.at("edges").get<std::vector<double>>();
    auto values = c.at("values").get<std::vector<double>>();
    auto support = c.at("support").get<std::vector<std::size_t>>();
    for (std::size_t b = 0; b < values.size(); ++b) {
      char buf[256];
      std::snprintf(buf, sizeof buf, "%s,%s,%zu,%.6f,%.6f,%zu,%.6f\n", c.at("model_id").get<std::string>().c_str(),
                    c.at("factor_id").get<std::string>().c_str(), b, edges[b], edges[b + 1], support[b], values[b]);
      os << buf;
    }
  }
  return os.str();
}

void run_calibrate(const Globals& g, const std::string& corpus_path, const std::string& model_path, std::size_t fold) {
  auto corpus = load_corpus(corpus_path);
  auto p = Pipeline::from_json(read_json(model_path));
  auto plan = split_folds(corpus, p.config().folds, g.seed);
  p.calibrate(corpus, pick_fold(plan, fold).validation);
  auto dir = out_dir(g);
  write_file(dir / "model.json", dump(p.to_json()));
  write_file(dir / "curves.csv", curves_csv(p));
  std::cout << "calibrated on " << pick_fold(plan, fold).validation.size() << " documents\n";
}

// detect / replay ---------------------------------------------------------------

void run_detect(const Globals& g, const std::string& corpus_path, const std::string& model_path,
                const std::string& doc_id, std::optional<Timestamp> at, std::optional<double> after_hours,
                const std::string& format, std::size_t fold) {
  auto corpus = load_corpus(corpus_path);
  auto p = Pipeline::from_json(read_json(model_path));
  auto render_format = render_format_from_string(format);
  auto dir = out_dir(g);
  auto time_for = [&](const DocumentRecord& d) {
    if (at) return *at;
    if (after_hours) return d.publish_time + static_cast<Timestamp>(*after_hours * kHour);
    return d.publish_time + last_horizon(p.config());
  };

  if (!doc_id.empty()) {
    const auto* d = corpus.find_document(doc_id);
    if (d == nullptr) throw DataError("unknown document '" + doc_id + "'");
    auto det = p.detect(corpus.snapshot_at(doc_id, time_for(*d)), corpus);
    auto text = render(det.explanation, render_format);
    write_file(dir / (render_format == RenderFormat::Json ? "explanation.json" : "explanation.txt"), text);
    std::cout << text;
    return;
  }

  auto plan = split_folds(corpus, p.config().folds, g.seed);
  std::ostringstream lines;
  std::vector<Prediction> preds;
  for (const auto& id : pick_fold(plan, fold).test) {
    const auto& d = corpus.document(id);
    auto det = p.detect(corpus.snapshot_at(id, time_for(d)), corpus);
    lines << explanation_to_json(det.explanation).dump() << "\n";
    if (d.label != Label::Unknown) preds.push_back({id, det.verdict.prob});
  }
  write_file(dir / "verdicts.jsonl", lines.str());
  auto m = evaluate(preds, corpus_labels(corpus), p.config().threshold);
  write_file(dir / "detect_metrics.csv", metrics_csv_header() + "\n" + metrics_csv_row(m) + "\n");
  std::cout << "scored " << pick_fold(plan, fold).test.size() << " test documents, F1 " << m.f1 << "\n";
}

std::vector<Timestamp> parse_hours(const std::vector<double>& hours, Timestamp base) {
  std::vector<Timestamp> out;
  for (double h : hours) out.push_back(base + static_cast<Timestamp>(h * kHour));
  return out;
}

void run_replay(const Globals& g, const std::string& corpus_path, const std::string& model_path,
                const std::string& doc_id, const std::vector<double>& hours) {
  auto corpus = load_corpus(corpus_path);
  auto p = Pipeline::from_json(read_json(model_path));
  const auto* d = corpus.find_document(doc_id);
  if (d == nullptr) throw DataError("unknown document '" + doc_id + "'");
  auto steps = replay(corpus, doc_id, parse_hours(hours, d->publish_time), p);
  auto dir = out_dir(g);
  write_file(dir / "replay.json", dump(replay_to_json(steps)));
  for (const auto& s : steps) {
    std::cout << "t=" << s.t << " engagements=" << s.engagement_count << " prob=" << s.verdict.prob;
    for (const auto& [m, c] : s.verdict.contributions) std::cout << " " << m << "=" << c;
    std::cout << "\n";
  }
}

// coord-scan --------------------------------------------------------------------

std::optional<IntentModel> intent_from_truth(const Corpus& corpus, const GroundTruth& truth,
                                             const PipelineConfig& cfg) {
  std::map<ActorKey, Intent> label;
  for (const auto& a : corpus.actors()) label[a.key()] = Intent::Benign;
  for (const auto& c : truth.clusters) {
    for (const auto& id : c.actor_ids) label[{c.platform, id}] = c.intent;
  }
  auto traces = extract_traces(corpus, cfg.coordination.traces);
  auto features = intent_features(traces, corpus, cfg.coordination.window);
  std::vector<std::vector<double>> x;
  std::vector<Intent> y;
  bool has_mal = false;
  for (const auto& [key, f] : features) {
    x.push_back(f);
    y.push_back(label.at(key));
    has_mal = has_mal || label.at(key) == Intent::Malicious;
  }
  if (!has_mal) return std::nullopt;
  return IntentModel::train(x, y, cfg.intent);
}

nlohmann::json coord_scan(const Globals& g, const Corpus& corpus, const std::optional<GroundTruth>& truth,
                          const PipelineConfig& cfg, const fs::path& dir) {
  std::optional<IntentModel> intent;
  if (truth) intent = intent_from_truth(corpus, *truth, cfg);
  auto opt = cfg.coordination;
  opt.seed = cfg.coordination.seed ^ g.seed;
  auto rep = coordination_scan(corpus, opt, intent ? &*intent : nullptr);
  auto j = rep.to_json();
  if (truth) {
    std::map<ActorKey, std::size_t> planted;
    for (std::size_t c = 0; c < truth->clusters.size(); ++c) {
      for (const auto& id : truth->clusters[c].actor_ids) planted[{truth->clusters[c].platform, id}] = c + 1;
    }
    std::map<ActorKey, std::size_t> found;
    for (std::size_t c = 0; c < rep.communities.size(); ++c) {
      for (const auto& a : rep.communities[c].actors) found[a] = c + 1;
    }
    std::vector<std::size_t> a, b;
    for (const auto& t : rep.graph.nodes) {
      a.push_back(planted.contains(t) ? planted.at(t) : 0);
      b.push_back(found.contains(t) ? found.at(t) : 0);
    }
    if (!a.empty()) j["ari_vs_planted"] = adjusted_rand_index(a, b);
  }
  write_file(dir / "coordination.json", dump(j));
  write_file(dir / "similarity.csv", rep.graph.to_csv());
  if (intent) write_file(dir / "intent_model.json", dump(intent->to_json()));
  return j;
}

void run_coord(const Globals& g, const std::string& corpus_path, const std::string& truth_path) {
  auto cfg = load_globals_config(g);
  auto corpus = load_corpus(corpus_path);
  std::optional<GroundTruth> truth;
  if (!truth_path.empty()) truth = load_truth(truth_path);
  auto j = coord_scan(g, corpus, truth, cfg, out_dir(g));
  std::cout << j.at("communities").size() << " communities\n";
}

// link ---------------------------------------------------------------------------

nlohmann::json link_all(const Corpus& corpus, const std::vector<std::string>& fixtures, const PipelineConfig& cfg,
                        const fs::path& dir) {
  auto clusters = link_entities(corpus.actors(), actor_urls(corpus), cfg.linking);
  auto ident = identity_clusters_to_json(clusters);
  write_file(dir / "identities.json", dump(ident));

  std::vector<FileFetcher> files;
  for (const auto& f : fixtures) files.push_back(FileFetcher::load(f));
  CorpusFetcher from_corpus(corpus);
  std::vector<const Fetcher*> fetchers{&from_corpus};
  for (const auto& f : files) fetchers.push_back(&f);
  std::ostringstream packages;
  std::size_t warnings = 0;
  for (const auto& d : corpus.documents()) {
    auto pkg = merge_document_package(d, fetchers);
    warnings += pkg.warnings.size();
    packages << package_to_json(pkg).dump() << "\n";
  }
  write_file(dir / "packages.jsonl", packages.str());
  std::size_t linked = 0;
  for (const auto& c : clusters) linked += c.members.size() > 1 ? 1 : 0;
  return {{"identity_clusters", linked}, {"packages", corpus.documents().size()}, {"warnings", warnings}};
}

void run_link(const Globals& g, const std::string& corpus_path, const std::vector<std::string>& fixtures) {
  auto cfg = load_globals_config(g);
  auto corpus = load_corpus(corpus_path);
  auto j = link_all(corpus, fixtures, cfg, out_dir(g));
  std::cout << j.at("identity_clusters") << " multi-account identities, " << j.at("packages") << " packages\n";
}

// eval / report ------------------------------------------------------------------

nlohmann::json eval_all(const Globals& g, const Corpus& corpus, const PipelineConfig& cfg, bool serial,
                        const fs::path& dir) {
  auto cv = cross_validate(corpus, cfg, g.seed, !serial);
  write_file(dir / "folds.json", dump(cv.plan.to_json()));
  write_file(dir / "cv_metrics.csv", cv.metrics_csv());

  nlohmann::json summary = nlohmann::json::object();
  std::map<std::pair<std::string, Timestamp>, std::vector<double>> f1s;
  for (const auto& fr : cv.folds) {
    for (const auto& [key, m] : fr.metrics) f1s[key].push_back(m.f1);
  }
  for (const auto& [key, v] : f1s) {
    double mean = 0.0;
    for (double x : v) mean += x / static_cast<double>(v.size());
    summary[key.first][std::to_string(key.second / kHour) + "h"] = mean;
  }

  nlohmann::json binned = nlohmann::json::array();
  for (const auto& model_id : cfg.models) {
    std::vector<FactorId> factors;
    if (model_id == "affectflow") factors = AffectFlowModel().required_factors();
    if (model_id == "pc") factors = PublisherCredibilityModel().required_factors();
    if (model_id == "uc") factors = UserCredibilityModel().required_factors();
    for (auto f : factors) {
      auto points = cv.pooled(model_id, f);
      if (points.empty()) continue;
      auto rows = binned_f1(points, cfg.calibration.bins, cfg.calibration.min_support, cfg.threshold);
      auto name = "binned_" + model_id + "_" + std::string(to_string(f)) + ".csv";
      write_file(dir / name, binned_f1_csv(rows, f));
      binned.push_back({{"model", model_id}, {"factor", to_string(f)}, {"file", name}, {"rows", rows.size()}});
    }
  }
  return {{"mean_f1", summary}, {"binned", binned}, {"folds", cv.plan.folds.size()}};
}

void run_eval(const Globals& g, const std::string& corpus_path, bool serial) {
  auto cfg = load_globals_config(g);
  auto corpus = load_corpus(corpus_path);
  auto dir = out_dir(g);
  auto j = eval_all(g, corpus, cfg, serial, dir);
  write_file(dir / "eval.json", dump(j));
  std::cout << j.at("mean_f1").dump(2) << "\n";
}

void run_report(const Globals& g, const std::string& corpus_path, const std::string& truth_path,
                const std::vector<std::string>& fixtures, bool serial) {
  auto cfg = load_globals_config(g);
  auto corpus = load_corpus(corpus_path);
  std::optional<GroundTruth> truth;
  if (!truth_path.empty()) truth = load_truth(truth_path);
  auto dir = out_dir(g);

  nlohmann::json report = {{"format", "veracity-report"}, {"version", 1}, {"seed", g.seed}};
  report["evaluation"] = eval_all(g, corpus, cfg, serial, dir);

  // Replay the most engaged labelled test document of fold 0.
  auto plan = split_folds(corpus, cfg.folds, g.seed);
  Pipeline p(cfg);
  p.train(corpus, plan.folds[0].train);
  p.calibrate(corpus, plan.folds[0].validation);
  write_file(dir / "model.json", dump(p.to_json()));
  write_file(dir / "curves.csv", curves_csv(p));
  std::string best;
  std::size_t best_n = 0;
  for (const auto& id : plan.folds[0].test) {
    auto n = corpus.items_for(id).size();
    if (corpus.document(id).label != Label::Unknown && (best.empty() || n > best_n)) {
      best = id;
      best_n = n;
    }
  }
  if (!best.empty()) {
    std::vector<double> hours;
    for (auto h : cfg.horizons) hours.push_back(static_cast<double>(h) / kHour);
    auto steps = replay(corpus, best, parse_hours(hours, corpus.document(best).publish_time), p);
    write_file(dir / "replay.json", dump(replay_to_json(steps)));
    write_file(dir / "explanation.txt", explanation_to_text(steps.back().explanation));
    report["replay"] = {{"doc_id", best}, {"file", "replay.json"}};
  }

  report["coordination"] = coord_scan(g, corpus, truth, cfg, dir).at("communities").size();
  report["linking"] = link_all(corpus, fixtures, cfg, dir);
  write_file(dir / "report.json", dump(report));
  std::cout << "report written to " << (dir / "report.json").string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"veracity: reliability-weighted false information detection toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config_path, "JSON config file");
  app.add_option("--seed", g.seed, "Seed for generation, folds and shuffles");
  app.add_option("--out", g.out, "Output directory");

  std::string corpus, model, doc, truth, format = "json";
  std::size_t fold = 0;
  std::optional<std::size_t> docs;
  std::optional<Timestamp> at;
  std::optional<double> after_hours;
  std::vector<double> hours{2, 24, 168};
  std::vector<std::string> fixtures;
  bool serial = false;

  auto* gen = app.add_subcommand("gen", "Generate a synthetic corpus and its ground-truth sidecar");
  gen->add_option("--docs", docs, "Number of documents");

  auto* train = app.add_subcommand("train", "Train base models on a fold's training split");
  train->add_option("--corpus", corpus, "Corpus JSONL")->required();
  train->add_option("--fold", fold, "Fold index");

  auto* calibrate = app.add_subcommand("calibrate", "Fit reliability curves on a fold's validation split");
  calibrate->add_option("--corpus", corpus, "Corpus JSONL")->required();
  calibrate->add_option("--model", model, "Model file from train")->required();
  calibrate->add_option("--fold", fold, "Fold index");

  auto* detect = app.add_subcommand("detect", "Score one document, or a fold's test split");
  detect->add_option("--corpus", corpus, "Corpus JSONL")->required();
  detect->add_option("--model", model, "Calibrated model file")->required();
  detect->add_option("--doc", doc, "Document id");
  detect->add_option("--at", at, "Absolute snapshot time");
  detect->add_option("--after-hours", after_hours, "Snapshot time relative to publish time");
  detect->add_option("--format", format, "json or text")->check(CLI::IsMember({"json", "text"}));
  detect->add_option("--fold", fold, "Fold index for batch scoring");

  auto* rep = app.add_subcommand("replay", "Replay one document over time");
  rep->add_option("--corpus", corpus, "Corpus JSONL")->required();
  rep->add_option("--model", model, "Calibrated model file")->required();
  rep->add_option("--doc", doc, "Document id")->required();
  rep->add_option("--hours", hours, "Offsets after publish time, ascending")->delimiter(',');

  auto* coord = app.add_subcommand("coord-scan", "Detect coordinated communities");
  coord->add_option("--corpus", corpus, "Corpus JSONL")->required();
  coord->add_option("--truth", truth, "Ground-truth sidecar for intent training and ARI");

  auto* link = app.add_subcommand("link", "Link identities across platforms and merge document packages");
  link->add_option("--corpus", corpus, "Corpus JSONL")->required();
  link->add_option("--fixtures", fixtures, "Fetcher fixture JSONL files");

  auto* eval = app.add_subcommand("eval", "k-fold evaluation with metrics and binned F1 CSVs");
  eval->add_option("--corpus", corpus, "Corpus JSONL")->required();
  eval->add_flag("--serial", serial, "Run folds sequentially");

  auto* report = app.add_subcommand("report", "Evaluation, replay, coordination and linking in one run");
  report->add_option("--corpus", corpus, "Corpus JSONL")->required();
  report->add_option("--truth", truth, "Ground-truth sidecar");
  report->add_option("--fixtures", fixtures, "Fetcher fixture JSONL files");
  report->add_flag("--serial", serial, "Run folds sequentially");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*gen) run_gen(g, docs);
    if (*train) run_train(g, corpus, fold);
    if (*calibrate) run_calibrate(g, corpus, model, fold);
    if (*detect) run_detect(g, corpus, model, doc, at, after_hours, format, fold);
    if (*rep) run_replay(g, corpus, model, doc, hours);
    if (*coord) run_coord(g, corpus, truth);
    if (*link) run_link(g, corpus, fixtures);
    if (*eval) run_eval(g, corpus, serial);
    if (*report) run_report(g, corpus, truth, fixtures, serial);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
