/* Copyright 2026 The ganwild Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// ganwild: command-line front end for the detection pipeline.

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "ganwild/accounts.hpp"
#include "ganwild/content.hpp"
#include "ganwild/dedup.hpp"
#include "ganwild/detector.hpp"
#include "ganwild/facegate.hpp"
#include "ganwild/ingest.hpp"
#include "ganwild/inversion.hpp"
#include "ganwild/pipeline.hpp"
#include "ganwild/projection.hpp"
#include "ganwild/service.hpp"
#include "ganwild/synth.hpp"

namespace {

using namespace ganwild;
using json = nlohmann::json;

struct Globals {
  std::string config_file;
  std::string workspace;
  std::string corpus;
  std::string model;
  std::string faces;
  std::optional<std::uint64_t> seed;
};

PipelineConfig make_config(const Globals& g) {
  PipelineConfig c = g.config_file.empty() ? PipelineConfig{} : PipelineConfig::load(g.config_file);
  if (!g.workspace.empty()) c.workspace = g.workspace;
  if (!g.corpus.empty()) c.corpus_id = g.corpus;
  if (!g.model.empty()) c.model_id = g.model;
  if (!g.faces.empty()) c.face_detector = g.faces;
  if (g.seed) c.seed = *g.seed;
  c.validate();
  return c;
}

void require_corpus(const PipelineConfig& c) {
  if (c.corpus_id.empty()) throw ConfigError("--corpus (or corpus_id in --config) is required");
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// "<role>=<train>:<val>:<test>"
std::pair<DatasetRole, SplitCounts> parse_split_arg(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) throw ConfigError(fmt::format("bad split '{}', want ROLE=TRAIN:VAL:TEST", text));
  SplitCounts counts;
  if (std::sscanf(text.c_str() + eq + 1, "%zu:%zu:%zu", &counts.n_train, &counts.n_val, &counts.n_test) != 3) {
    throw ConfigError(fmt::format("bad split counts in '{}'", text));
  }
  return {parse_role(text.substr(0, eq)), counts};
}

std::vector<std::string> read_id_list(const fs::path& path) {
  std::vector<std::string> ids;
  std::stringstream ss(read_file_text(path));
  for (std::string line; std::getline(ss, line);) {
    line = trim(line);
    // First field of a comma-, tab- or space-separated line.
    if (!line.empty() && line[0] != '#') ids.push_back(line.substr(0, line.find_first_of(", \t")));
  }
  return ids;
}

void print_json(const std::string& text) { fmt::print("{}\n", json::parse(text).dump(2)); }

fs::path eval_scores_path(const PipelineConfig& c, const std::string& model) {
  return c.workspace / "runs" / c.corpus_id / "eval" / (model + ".jsonl");
}

// ---- subcommands --------------------------------------------------------------

struct SynthArgs {
  std::string out;
  SynthCorpusOptions options;
};

void run_synth(const SynthArgs& a) {
  const auto summary = write_synthetic_corpus(a.out, a.options);
  fmt::print("wrote {} images under {}\n", summary.written, a.out);
}

struct IngestArgs {
  std::string dir;
  std::string role;
  ProcessingProfile profile;
};

void run_ingest(const Globals& g, const IngestArgs& a) {
  const PipelineConfig c = make_config(g);
  require_corpus(c);
  a.profile.validate();
  const CorpusStore store(c.workspace, c.corpus_id);
  const CorpusManifest base = store.open_or_create(c.seed, a.profile);
  const ImportResult r = import_corpus(a.dir, parse_role(a.role), base, store);
  store.save_manifest(r.manifest);
  for (const auto& w : r.warnings) fmt::print(stderr, "warning: {}: {}\n", w.path, w.message);
  fmt::print("added {} {} images, {} warnings, manifest now {} records\n", r.added, a.role, r.warnings.size(),
             r.manifest.records.size());
}

struct PrepareArgs {
  std::vector<std::string> splits;
  bool zoom = false;
  bool no_processed = false;
};

void run_prepare(const Globals& g, const PrepareArgs& a) {
  const PipelineConfig c = make_config(g);
  require_corpus(c);
  const CorpusStore store(c.workspace, c.corpus_id);
  CorpusManifest m = store.load_manifest();
  if (!a.splits.empty()) {
    SplitSpec spec;
    for (const auto& s : a.splits) spec.insert(parse_split_arg(s));
    m = assign_splits(m, spec, c.seed);
  }
  PrepareOptions opts;
  opts.processed = !a.no_processed;
  opts.zoomed = a.zoom;
  m = prepare_processed(m, opts, store);
  store.save_manifest(m);
  std::map<std::pair<DatasetRole, Split>, std::size_t> counts;
  for (const auto& r : m.records) ++counts[{r.role, r.split}];
  for (const auto& [key, n] : counts) fmt::print("{:<16} {:<6} {}\n", to_string(key.first), to_string(key.second), n);
}

void run_prefilter(const Globals& g, std::optional<double> min_eye) {
  PipelineConfig c = make_config(g);
  require_corpus(c);
  if (min_eye) c.min_eye_distance = *min_eye;
  Pipeline p(c);
  const auto detector = make_face_detector(c.face_detector_spec());
  const GateCounts n = count_decisions(p.gate(*detector));
  fmt::print("pass {}  no_face {}  too_small {}  errors {}  reduction {:.2f}%\n", n.pass, n.no_face, n.too_small,
             n.errors, n.reduction_percent());
}

struct TrainArgs {
  std::string variant = "c_rx_px_fx";
  std::string model_id;
  std::string train_config;
  std::optional<double> lr;
  std::optional<int> patience;
  std::optional<int> batch;
  std::optional<int> crop;
  std::optional<int> resize;
  std::optional<int> max_epochs;
  std::optional<double> stop_lr;
  std::string pretrained;
};

void run_train(const Globals& g, const TrainArgs& a) {
  const PipelineConfig c = make_config(g);
  require_corpus(c);
  const DetectorVariant variant = parse_variant(a.variant);
  TrainConfig t = a.train_config.empty() ? TrainConfig::for_variant(variant)
                                         : TrainConfig::from_json(read_file_text(a.train_config));
  if (a.lr) t.initial_lr = *a.lr;
  if (a.patience) t.plateau_patience_epochs = *a.patience;
  if (a.batch) t.batch_size = *a.batch;
  if (a.crop) t.crop_size = *a.crop;
  if (a.resize) t.resize_to = *a.resize;
  if (a.max_epochs) t.max_epochs = *a.max_epochs;
  if (a.stop_lr) t.stop_lr = *a.stop_lr;
  if (!a.pretrained.empty()) t.pretrained_weights = a.pretrained;
  if (g.seed) t.seed = *g.seed;
  const std::string model_id = a.model_id.empty() ? std::string(to_string(variant)) : a.model_id;
  const CorpusStore store(c.workspace, c.corpus_id);
  const ModelRegistry registry(c.workspace);
  const ModelHandle h = train(store.load_manifest(), store, t, variant, model_id, registry, [](const EpochLog& e) {
    fmt::print("epoch {:>3}  train {:.5f}  val {:.5f}  lr {:.1e}\n", e.epoch, e.train_loss, e.val_loss, e.lr);
    std::fflush(stdout);
  });
  fmt::print("saved model {} ({} epochs, final lr {:.1e}) to {}\n", h.model_id, h.train_log.size(), h.final_lr,
             registry.model_dir(h.model_id).string());
}

void run_score(const Globals& g, bool eval) {
  const PipelineConfig c = make_config(g);
  require_corpus(c);
  if (c.model_id.empty()) throw ConfigError("--model is required");
  const ResNetScorer scorer(ModelRegistry(c.workspace).load(c.model_id));
  if (!eval) {
    Pipeline p(c);
    const auto detector = make_face_detector(c.face_detector_spec());
    const auto scores = p.score_gated(p.gate(*detector), scorer);
    fmt::print("scored {} gated images with {}\n", scores.size(), c.model_id);
    return;
  }
  // Held-out evaluation: every TEST image of a role with ground truth.
  const CorpusStore store(c.workspace, c.corpus_id);
  const CorpusManifest m = store.load_manifest();
  const fs::path path = eval_scores_path(c, c.model_id);
  std::map<std::string, ScoreRecord> cache;
  if (fs::exists(path)) {
    for (auto& s : read_score_log(path)) cache.insert_or_assign(s.image_id, std::move(s));
  }
  std::vector<ImageRecord> todo;
  for (const auto& r : m.records) {
    if (r.split == Split::TEST && role_is_fake(r.role) && !cache.contains(r.id)) todo.push_back(r);
  }
  const ScoreRun run = score(todo, scorer, store);
  for (const auto& s : run.scores) cache.insert_or_assign(s.image_id, s);
  std::vector<ScoreRecord> out;
  for (auto& [id, s] : cache) out.push_back(s);
  fs::create_directories(path.parent_path());
  write_score_log(path, out);
  fmt::print("scored {} new test images ({} cached, {} undecodable) with {}\n", run.scores.size(),
             out.size() - run.scores.size(), run.skipped.size(), c.model_id);
}

void run_subset(const Globals& g, bool rebuild) {
  Pipeline p(make_config(g));
  const LabelingSubset s = rebuild ? p.rebuild_subset() : p.subset();
  if (!s.warning.empty()) fmt::print(stderr, "warning: {}\n", s.warning);
  fmt::print("population {}  sampled {}  eligible {}  subset {}\n", s.population, s.sampled, s.eligible, s.ids.size());
  if (s.score_max) fmt::print("score range [{:.6f}, {:.6f}]\n", *s.score_min, *s.score_max);
}

void run_serve(const Globals& g, const std::string& host, std::optional<int> port) {
  PipelineConfig c = make_config(g);
  if (!host.empty()) c.service_host = host;
  if (port) c.service_port = *port;
  Pipeline p(c);
  LabelService service(p, make_generator(c.generator), std::make_unique<MsePerceptualDistance>());
  const int bound = service.bind(c.service_host, c.service_port);
  fmt::print("serving {} on http://{}:{}\n", c.corpus_id, c.service_host, bound);
  std::fflush(stdout);
  service.serve();
}

void run_calibrate(const Globals& g) {
  Pipeline p(make_config(g));
  print_json(p.calibrate_and_estimate().to_json());
}

void run_classify(const Globals& g, std::optional<double> threshold) {
  PipelineConfig c = make_config(g);
  if (threshold) c.threshold = *threshold;
  Pipeline p(c);
  const RunReport r = p.run_detection();
  print_json(r.to_json());
}

void run_align(const Globals& g, std::optional<int> k) {
  PipelineConfig c = make_config(g);
  if (k) c.alignment_k = *k;
  Pipeline p(c);
  const auto detector = make_face_detector(c.face_detector_spec());
  print_json(alignment_reference_to_json(p.fit_alignment(*detector)));
}

void run_invert(const Globals& g, const std::string& ids_file, const std::string& generator, std::optional<int> steps) {
  PipelineConfig c = make_config(g);
  if (!generator.empty()) c.generator = generator;
  if (steps) c.inversion_steps = *steps;
  Pipeline p(c);
  const auto gen = make_generator(c.generator);
  const MsePerceptualDistance perceptual;
  const auto ids = read_id_list(ids_file);
  std::size_t ran = 0;
  for (const auto& job : p.invert_images(ids, *gen, perceptual)) {
    if (job.ran) {
      ++ran;
      if (auto r = p.inversion(job.image_id)) {
        fmt::print("{}  lpips {:.5f}  mse {:.6f}\n", job.image_id, r->lpips, r->mse);
      }
    } else {
      fmt::print("{}  skipped: {}\n", job.image_id, job.reason);
    }
  }
  fmt::print("inverted {} of {}\n", ran, ids.size());
}

// Hashes --ids when given, else the classified fakes, else every image with
// a detect role.
void run_dedup(const Globals& g, std::optional<int> eps, std::optional<int> min_samples, const std::string& ids_file) {
  PipelineConfig c = make_config(g);
  if (eps) c.dedup_eps = *eps;
  if (min_samples) c.dedup_min_samples = *min_samples;
  c.validate();
  Pipeline p(c);
  std::vector<std::string> ids;
  const fs::path classified = p.run_dir() / "classified_fake.txt";
  if (!ids_file.empty()) {
    ids = read_id_list(ids_file);
  } else if (fs::exists(classified)) {
    ids = read_id_list(classified);
  } else {
    for (const auto& r : p.detect_records()) ids.push_back(r.id);
  }
  if (ids.empty()) throw Error("nothing to hash");
  const auto clusters = p.dedup(ids);
  const ClusterReport r = cluster_report(clusters);
  fmt::print("{} clusters covering {} images\n", clusters.size(), r.clustered_images);
  for (const auto& [size, n] : r.size_histogram) fmt::print("  size {:>5}: {}\n", size, n);
}

struct AccountsArgs {
  std::string accounts;
  std::string statuses;
  std::string collected_at;
  std::optional<int> window_hours;
  std::optional<std::size_t> min_count;
  std::string histogram;
  std::size_t bins = 50;
  std::string group;
};

void run_accounts(const Globals& g, const AccountsArgs& a) {
  PipelineConfig c = g.config_file.empty() ? PipelineConfig{} : PipelineConfig::load(g.config_file);
  if (!a.accounts.empty()) c.accounts_path = a.accounts;
  if (!a.statuses.empty()) c.statuses_path = a.statuses;
  if (!a.collected_at.empty()) c.collected_at = parse_timestamp(a.collected_at);
  if (a.window_hours) c.bulk_window_hours = *a.window_hours;
  if (a.min_count) c.bulk_min_count = *a.min_count;
  c.validate();
  if (c.accounts_path.empty()) throw ConfigError("--accounts (or accounts in --config) is required");
  if (!a.histogram.empty()) {
    auto accounts = read_accounts(c.accounts_path);
    if (!a.group.empty()) {
      const AccountGroup grp = parse_account_group(a.group);
      std::erase_if(accounts, [&](const AccountRecord& r) { return r.group != grp; });
    }
    Timestamp collected = c.collected_at.value_or(Timestamp{});
    if (!c.collected_at) {
      for (const auto& r : accounts) collected = std::max(collected, r.created_at);
    }
    fmt::print("{}", histogram_csv(metric_values(accounts, parse_metric(a.histogram), collected), a.bins));
    return;
  }
  print_json(account_analytics_json(c));
}

struct TweetArgs {
  std::string tweets;
  std::string embeddings;
  int dim = 256;
  std::optional<double> threshold;
  std::optional<std::size_t> min_size;
  std::string statuses;
  bool no_group = false;
  std::size_t top_n = 10;
  std::string out = "tweet_clusters";
  bool project = false;
};

std::string group_dir_name(const std::string& key) {
  std::string s = key;
  std::replace(s.begin(), s.end(), '/', '_');
  return s;
}

void run_cluster_tweets(const Globals& g, const TweetArgs& a) {
  PipelineConfig c = g.config_file.empty() ? PipelineConfig{} : PipelineConfig::load(g.config_file);
  if (a.threshold) c.content_threshold = *a.threshold;
  if (a.min_size) c.content_min_cluster_size = *a.min_size;
  if (!a.statuses.empty()) c.statuses_path = a.statuses;
  const TweetIngest ingest = read_tweets(a.tweets);
  for (const auto& w : ingest.warnings) fmt::print(stderr, "warning: {}\n", w);

  std::unique_ptr<EmbeddingAdapter> embedder;
  if (a.embeddings.empty()) {
    embedder = std::make_unique<HashingEmbedder>(a.dim);
  } else {
    embedder = std::make_unique<PrecomputedEmbedder>(PrecomputedEmbedder::load(a.embeddings));
  }
  std::map<std::string, AccountStatus> status;
  if (!c.statuses_path.empty()) status = latest_status(read_status_checks(c.statuses_path));

  const fs::path out(a.out);
  fs::create_directories(out);
  const auto languages = language_breakdown(ingest.tweets, status);
  write_file_atomic(out / "languages.csv", languages_csv(languages));

  std::map<std::string, std::vector<TweetRecord>> groups;
  if (a.no_group) {
    groups["all"] = ingest.tweets;
  } else {
    groups = group_by_language_status(ingest.tweets, status);
  }
  for (const auto& [key, tweets] : groups) {
    ClusteringResult r = cluster_stream(tweets, *embedder, c.content_threshold, c.content_min_cluster_size);
    attach_terms(r, tweets, a.top_n);
    const fs::path dir = out / group_dir_name(key);
    fs::create_directories(dir);
    write_file_atomic(dir / "clusters.json",
                      content_clusters_to_json(r, c.content_threshold, c.content_min_cluster_size));
    write_file_atomic(dir / "terms.csv", cluster_terms_csv(r));
    fmt::print("{:<20} tweets {:>7}  clusters {:>4} (formed {})\n", key, tweets.size(), r.profiles.size(),
               r.clusters_formed);
    if (a.project) {
      std::map<std::string, const TweetRecord*> by_id;
      for (const auto& t : tweets) by_id[t.tweet_id] = &t;
      std::vector<std::string> ids;
      std::vector<std::vector<double>> vectors;
      for (const auto& as : r.assignments) {
        if (as.cluster_id == kNoiseCluster) continue;
        ids.push_back(as.tweet_id);
        vectors.push_back(embedder->embed(by_id.at(as.tweet_id)->text));
      }
      if (ids.size() >= 2) {
        const UmapProjector umap;
        write_file_atomic(dir / "projection.csv", projection_csv(project2d(ids, vectors, umap, c.seed)));
      }
    }
  }
}

void run_report(const Globals& g, const std::string& ablation) {
  const PipelineConfig c = make_config(g);
  require_corpus(c);
  if (ablation.empty()) {
    const fs::path path = c.workspace / "runs" / c.corpus_id / "report.json";
    if (!fs::exists(path)) throw Error(fmt::format("no report at {}; run classify first", path.string()));
    print_json(read_file_text(path));
    return;
  }
  const auto models = split_list(ablation);
  std::map<std::string, std::vector<ScoreRecord>> scores;
  for (const auto& m : models) {
    const fs::path path = eval_scores_path(c, m);
    if (fs::exists(path)) scores[m] = read_score_log(path);
  }
  const CorpusStore store(c.workspace, c.corpus_id);
  const auto conditions = default_conditions();
  fmt::print("{}", ablation_report(models, conditions, store.load_manifest(), scores).to_text());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Detect generated profile images in large image corpora"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("-c,--config", g.config_file, "Pipeline config file (key = value lines)")->check(CLI::ExistingFile);
  app.add_option("-w,--workspace", g.workspace, "Workspace root");
  app.add_option("--corpus", g.corpus, "Corpus id");
  app.add_option("--model", g.model, "Model id");
  app.add_option("--faces", g.faces, "Face detector spec, e.g. sidecar:<dir>");
  app.add_option("--seed", g.seed, "Seed");

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "Write a procedural face corpus with landmark sidecars");
  c_synth->add_option("--out", synth.out, "Output directory")->required();
  c_synth->add_option("--real", synth.options.real);
  c_synth->add_option("--fake", synth.options.fake);
  c_synth->add_option("--wild", synth.options.wild);
  c_synth->add_option("--size", synth.options.size);
  c_synth->add_option("--quality", synth.options.jpeg_quality);
  c_synth->callback([&] {
    if (g.seed) synth.options.seed = *g.seed;
    run_synth(synth);
  });

  IngestArgs ingest;
  auto* c_ingest = app.add_subcommand("ingest", "Import a directory of images under a role");
  c_ingest->add_option("--dir", ingest.dir)->required()->check(CLI::ExistingDirectory);
  c_ingest->add_option("--role", ingest.role)->required();
  c_ingest->add_option("--target-size", ingest.profile.target_size, "Platform resize target for new corpora");
  c_ingest->add_option("--jpeg-quality", ingest.profile.jpeg_quality, "Platform JPEG quality for new corpora");
  c_ingest->callback([&] { run_ingest(g, ingest); });

  PrepareArgs prepare;
  auto* c_prepare = app.add_subcommand("prepare", "Assign splits and simulate platform processing");
  c_prepare->add_option("--split", prepare.splits, "ROLE=TRAIN:VAL:TEST, repeatable");
  c_prepare->add_flag("--zoom", prepare.zoom, "Also write zoom-then-process test copies");
  c_prepare->add_flag("--no-processed", prepare.no_processed, "Only assign splits");
  c_prepare->callback([&] { run_prepare(g, prepare); });

  std::optional<double> min_eye;
  auto* c_prefilter = app.add_subcommand("prefilter", "Gate images on face presence and eye distance");
  c_prefilter->add_option("--min-eye-distance", min_eye);
  c_prefilter->callback([&] { run_prefilter(g, min_eye); });

  TrainArgs targs;
  auto* c_train = app.add_subcommand("train", "Train a detector variant on the corpus TRAIN split");
  c_train->add_option("--variant", targs.variant)->check(CLI::IsMember({"c_rf", "c_rx_fx", "c_rx_px_fx"}, CLI::ignore_case));
  c_train->add_option("--model-id", targs.model_id, "Defaults to the variant name");
  c_train->add_option("--train-config", targs.train_config, "JSON training config")->check(CLI::ExistingFile);
  c_train->add_option("--lr", targs.lr);
  c_train->add_option("--patience", targs.patience);
  c_train->add_option("--batch", targs.batch);
  c_train->add_option("--crop", targs.crop);
  c_train->add_option("--resize", targs.resize);
  c_train->add_option("--max-epochs", targs.max_epochs);
  c_train->add_option("--stop-lr", targs.stop_lr);
  c_train->add_option("--pretrained", targs.pretrained, "Backbone weights to start from");
  c_train->callback([&] { run_train(g, targs); });

  bool eval = false;
  auto* c_score = app.add_subcommand("score", "Score gated images, or TEST splits with --eval");
  c_score->add_flag("--eval", eval);
  c_score->callback([&] { run_score(g, eval); });

  bool rebuild = false;
  auto* c_subset = app.add_subcommand("subset", "Draw the labeling subset");
  c_subset->add_flag("--rebuild", rebuild);
  c_subset->callback([&] { run_subset(g, rebuild); });

  std::string host;
  std::optional<int> port;
  auto* c_serve = app.add_subcommand("serve", "Serve the labeling API");
  c_serve->add_option("--host", host);
  c_serve->add_option("--port", port);
  c_serve->callback([&] { run_serve(g, host, port); });

  auto* c_calibrate = app.add_subcommand("calibrate", "Choose a threshold from labels and estimate error rates");
  c_calibrate->callback([&] { run_calibrate(g); });

  std::optional<double> threshold;
  auto* c_classify = app.add_subcommand("classify", "Gate, score and classify; writes report.json");
  c_classify->add_option("--threshold", threshold);
  c_classify->callback([&] { run_classify(g, threshold); });

  std::optional<int> k;
  auto* c_align = app.add_subcommand("align", "Fit the landmark alignment reference");
  c_align->add_option("--k", k);
  c_align->callback([&] { run_align(g, k); });

  std::string ids_file, generator;
  std::optional<int> steps;
  auto* c_invert = app.add_subcommand("invert", "Invert aligned images through a generator");
  c_invert->add_option("--ids", ids_file, "File with one image id per line")->required()->check(CLI::ExistingFile);
  c_invert->add_option("--generator", generator, "Generator spec, e.g. toy:0");
  c_invert->add_option("--steps", steps);
  c_invert->callback([&] { run_invert(g, ids_file, generator, steps); });

  std::optional<int> eps, min_samples;
  std::string dedup_ids;
  auto* c_dedup = app.add_subcommand("dedup", "Cluster near-duplicate images by perceptual hash");
  c_dedup->add_option("--eps", eps);
  c_dedup->add_option("--min-samples", min_samples);
  c_dedup->add_option("--ids", dedup_ids, "File with one image id per line")->check(CLI::ExistingFile);
  c_dedup->callback([&] { run_dedup(g, eps, min_samples, dedup_ids); });

  AccountsArgs acc;
  auto* c_accounts = app.add_subcommand("accounts", "Account metadata analytics");
  c_accounts->add_option("--accounts", acc.accounts, "Accounts JSONL");
  c_accounts->add_option("--statuses", acc.statuses, "Status checks CSV");
  c_accounts->add_option("--collected-at", acc.collected_at);
  c_accounts->add_option("--window-hours", acc.window_hours);
  c_accounts->add_option("--min-count", acc.min_count);
  c_accounts->add_option("--histogram", acc.histogram, "Print a histogram CSV of one metric instead");
  c_accounts->add_option("--bins", acc.bins);
  c_accounts->add_option("--group", acc.group, "real or fake, for --histogram");
  c_accounts->callback([&] { run_accounts(g, acc); });

  TweetArgs tw;
  auto* c_tweets = app.add_subcommand("cluster-tweets", "Incremental tweet clustering with c-TF-IDF terms");
  c_tweets->add_option("--tweets", tw.tweets, "Tweets JSONL")->required()->check(CLI::ExistingFile);
  c_tweets->add_option("--embeddings", tw.embeddings, "JSONL {text, vector}; default is a hashing embedder");
  c_tweets->add_option("--dim", tw.dim, "Hashing embedder dimension");
  c_tweets->add_option("--threshold", tw.threshold);
  c_tweets->add_option("--min-size", tw.min_size);
  c_tweets->add_option("--statuses", tw.statuses);
  c_tweets->add_flag("--no-group", tw.no_group, "Cluster all tweets together");
  c_tweets->add_option("--top-n", tw.top_n);
  c_tweets->add_option("--out", tw.out);
  c_tweets->add_flag("--project", tw.project, "Write a 2-D projection of clustered tweets");
  c_tweets->callback([&] { run_cluster_tweets(g, tw); });

  std::string ablation;
  auto* c_report = app.add_subcommand("report", "Print the run report, or an ablation table");
  c_report->add_option("--ablation", ablation, "Comma-separated model ids scored with score --eval");
  c_report->callback([&] { run_report(g, ablation); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const ganwild::Error& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 2;
  }
  return 0;
}
