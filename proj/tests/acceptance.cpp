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

// Acceptance suite: one PASS / FAIL / SKIP line per primary criterion.
// Exit status is 1 when any check fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "ganwild/accounts.hpp"
#include "ganwild/assist.hpp"
#include "ganwild/augment.hpp"
#include "ganwild/calibrate.hpp"
#include "ganwild/content.hpp"
#include "ganwild/dedup.hpp"
#include "ganwild/detector.hpp"
#include "ganwild/facegate.hpp"
#include "ganwild/image.hpp"
#include "ganwild/inversion.hpp"
#include "ganwild/pipeline.hpp"
#include "ganwild/synth.hpp"
#include "oracles.hpp"
#include "testing.hpp"

namespace ganwild {
namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  enum Kind { PASS, FAIL, SKIP } kind = FAIL;
  std::string detail;
};

Outcome verdict(bool ok, std::string detail) { return {ok ? Outcome::PASS : Outcome::FAIL, std::move(detail)}; }

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// ---- calibration ------------------------------------------------------------

std::vector<LabeledScore> random_scores(Rng& rng, std::size_t n) {
  std::vector<LabeledScore> out;
  const bool coarse = rng.bernoulli(0.5);
  const double prevalence = rng.uniform(0.05, 0.95);
  for (std::size_t i = 0; i < n; ++i) {
    const bool fake = rng.bernoulli(prevalence);
    const double base = fake ? rng.uniform(0.2, 1.0) : rng.uniform(0.0, 0.8);
    Label label = fake ? Label::FAKE : Label::REAL;
    if (rng.bernoulli(0.03)) label = Label::UNSURE;
    out.push_back({"i" + std::to_string(i), coarse ? std::round(base * 20.0) / 20.0 : base, label});
  }
  out[0].label = Label::REAL;
  out[n - 1].label = Label::FAKE;
  return out;
}

Outcome threshold_oracle() {
  const auto t0 = Clock::now();
  Rng rng(101);
  int mismatches = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto s = random_scores(rng, static_cast<std::size_t>(rng.uniform_int(2, 500)));
    mismatches += !(choose_threshold(s) == oracle::choose_threshold(s));
  }
  const double secs = seconds_since(t0);
  return verdict(mismatches == 0 && secs < 10.0, fmt::format("200 sets, {} mismatches, {:.2f} s", mismatches, secs));
}

Outcome auc_properties() {
  Rng rng(102);
  int bad = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<LabeledScore> sep;
    const int nf = static_cast<int>(rng.uniform_int(1, 60)), nr = static_cast<int>(rng.uniform_int(1, 60));
    for (int i = 0; i < nf; ++i) sep.push_back({"f" + std::to_string(i), rng.uniform(0.51, 1.0), Label::FAKE});
    for (int i = 0; i < nr; ++i) sep.push_back({"r" + std::to_string(i), rng.uniform(0.0, 0.5), Label::REAL});
    bad += auc(sep) != 1.0;
    for (auto& x : sep) x.label = x.label == Label::FAKE ? Label::REAL : Label::FAKE;
    bad += auc(sep) != 0.0;

    const auto s = random_scores(rng, static_cast<std::size_t>(rng.uniform_int(2, 400)));
    const double a = auc(s);
    bad += a != oracle::auc(s);
    auto t = s;
    for (auto& x : t) x.score = std::exp(4.0 * x.score) - 7.0;
    bad += auc(t) != a;
    auto u = s;
    for (auto& x : u) x.score = std::atan(x.score * 3.0);
    bad += auc(u) != a;
  }
  return verdict(bad == 0, fmt::format("100 sets: separation, swap, 2 monotone maps, pairwise oracle; {} violations", bad));
}

Outcome error_rates_check() {
  Rng rng(103);
  int bad = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto s = random_scores(rng, static_cast<std::size_t>(rng.uniform_int(2, 300)));
    const double t = rng.uniform(-0.1, 1.1);
    const Confusion c = oracle::count_confusion(s, t);
    const ErrorEstimate e = error_rates(s, t);
    const bool fnr_ok = c.fn + c.tp == 0 ? (e.fnr == 0.0 && e.fnr_degenerate)
                                          : (e.fnr == static_cast<double>(c.fn) / static_cast<double>(c.fn + c.tp) &&
                                             !e.fnr_degenerate);
    const bool fdr_ok = c.fp + c.tp == 0 ? (e.fdr == 0.0 && e.fdr_degenerate)
                                          : (e.fdr == static_cast<double>(c.fp) / static_cast<double>(c.fp + c.tp) &&
                                             !e.fdr_degenerate);
    bad += !(fnr_ok && fdr_ok && e.confusion == c);
  }
  // Forced degenerate denominators.
  const std::vector<LabeledScore> reals{{"a", 0.2, Label::REAL}, {"b", 0.9, Label::REAL}};
  const auto e1 = error_rates(reals, 0.5);
  bad += !(e1.fnr == 0.0 && e1.fnr_degenerate && !e1.fdr_degenerate && e1.fdr == 1.0);
  const std::vector<LabeledScore> low{{"a", 0.2, Label::FAKE}, {"b", 0.1, Label::REAL}};
  const auto e2 = error_rates(low, 0.5);
  bad += !(e2.fdr == 0.0 && e2.fdr_degenerate && e2.fnr == 1.0);
  return verdict(bad == 0, fmt::format("100 configurations + 2 degenerate cases, {} mismatches", bad));
}

// ---- alignment assistance -----------------------------------------------------

AlignmentReference random_reference(Rng& rng, bool with_zero_sigma) {
  AlignmentReference ref;
  for (std::size_t i = 0; i < kNumLandmarkCoords; ++i) {
    ref.mu[i] = rng.uniform(0.2, 0.8);
    ref.sigma[i] = with_zero_sigma && rng.bernoulli(0.25) ? 0.0 : rng.uniform(1e-4, 0.05);
  }
  ref.k = 7;
  return ref;
}

FaceGeometry at(const std::array<double, kNumLandmarkCoords>& c) { return FaceGeometry::from_coordinates(c, {}); }

Outcome alignment_predicate() {
  Rng rng(104);
  long checks = 0, bad = 0;
  for (int r = 0; r < 1000; ++r) {
    const auto ref = random_reference(rng, r % 4 == 0);
    for (int k = 1; k <= 10; ++k) {
      ++checks;
      bad += !is_aligned(at(ref.mu), ref, k);
    }
    for (std::size_t i = 0; i < kNumLandmarkCoords; ++i) {
      const double k = static_cast<double>(rng.uniform_int(1, 10));
      if (ref.sigma[i] == 0.0) {
        auto c = ref.mu;
        c[i] = std::nextafter(c[i], 1.0);
        checks += 2;
        bad += is_aligned(at(c), ref, k);
        bad += !is_aligned(at(ref.mu), ref, k);
        continue;
      }
      for (double sign : {-1.0, 1.0}) {
        auto c = ref.mu;
        c[i] = ref.mu[i] + sign * (k - 0.5) * ref.sigma[i];
        bad += !is_aligned(at(c), ref, k);
        c[i] = ref.mu[i] + sign * (k + 0.5) * ref.sigma[i];
        bad += is_aligned(at(c), ref, k);
        checks += 2;
      }
    }
  }
  return verdict(bad == 0, fmt::format("1000 references, {} predicate checks, {} wrong", checks, bad));
}

Outcome eye_distance_translation() {
  Rng rng(105);
  double worst = 0.0;
  int at_reference_nonzero = 0, triangle = 0;
  for (int r = 0; r < 1000; ++r) {
    const auto ref = random_reference(rng, false);
    at_reference_nonzero += gan_eye_distance(at(ref.mu), ref) != 0.0;
    const double dx = rng.uniform(-0.1, 0.1), dy = rng.uniform(-0.1, 0.1);
    const double g0 = gan_eye_distance(at(ref.mu), ref);
    auto shifted = ref.mu;
    for (std::size_t i = 0; i < kNumLandmarkCoords; i += 2) shifted[i] += dx, shifted[i + 1] += dy;
    const double g1 = gan_eye_distance(at(shifted), ref);
    worst = std::max(worst, std::abs(std::abs(g1 - g0) - std::hypot(dx, dy)));
    // Away from the reference a shift moves the distance by at most |delta|.
    const FaceGeometry g = testing::random_geometry(rng);
    auto moved = g.coordinates();
    for (std::size_t i = 0; i < kNumLandmarkCoords; i += 2) moved[i] += dx, moved[i + 1] += dy;
    triangle += std::abs(gan_eye_distance(at(moved), ref) - gan_eye_distance(g, ref)) > std::hypot(dx, dy) + 1e-12;
  }
  return verdict(worst <= 1e-12 && at_reference_nonzero == 0 && triangle == 0,
                 fmt::format("1000 shifts, max error {:.2e}, nonzero at reference {}, triangle violations {}", worst,
                             at_reference_nonzero, triangle));
}

// ---- pre-filter ---------------------------------------------------------------

// Primary face by definition: largest box area, then confidence, then the
// smallest (x, y) corner.
std::optional<FaceGeometry> primary_oracle(std::vector<FaceGeometry> faces) {
  if (faces.empty()) return std::nullopt;
  std::sort(faces.begin(), faces.end(), [](const FaceGeometry& a, const FaceGeometry& b) {
    return std::make_tuple(-a.bbox.area(), -a.confidence, a.bbox.x, a.bbox.y) <
           std::make_tuple(-b.bbox.area(), -b.confidence, b.bbox.x, b.bbox.y);
  });
  return faces.front();
}

Outcome prefilter_check(const fs::path& work) {
  const fs::path ws = work / "prefilter";
  testing::FixtureOptions opts;
  opts.synth.real = 0;
  opts.synth.fake = 0;
  opts.synth.wild = 500;
  opts.synth.size = 64;
  opts.synth.seed = 106;
  opts.synth.wild_no_face = 0.2;
  opts.synth.wild_small_face = 0.3;
  const auto fx = testing::make_fixture(ws, "pf", opts);
  // Decoy faces in a third of the sidecars exercise primary-face selection.
  Rng rng(107);
  for (const auto& r : fx.manifest.records) {
    const fs::path side = ws / "faces" / (r.id + ".json");
    if (!fs::exists(side) || !rng.bernoulli(1.0 / 3.0)) continue;
    auto faces = faces_from_json(read_file_text(side));
    const int extra = static_cast<int>(rng.uniform_int(1, 3));
    for (int i = 0; i < extra; ++i) faces.push_back(testing::random_geometry(rng));
    write_sidecar(ws / "faces", r.id, faces, 64, 64);
  }
  const CorpusStore store(ws, "pf");
  const SidecarFaceDetector detector(ws / "faces");

  long mismatches = 0, nested_violations = 0;
  std::set<std::string> previous_pass;
  bool first = true;
  std::vector<std::size_t> pass_counts;
  for (int step = 0; step < 10; ++step) {
    const double min_ed = 0.02 + 0.02 * step;
    const auto report = gate_corpus(fx.manifest, store, detector, min_ed);
    std::set<std::string> pass;
    for (const auto& d : report.decisions) {
      const fs::path side = ws / "faces" / (d.image_id + ".json");
      const auto primary = primary_oracle(fs::exists(side) ? faces_from_json(read_file_text(side))
                                                           : std::vector<FaceGeometry>{});
      GateReason want = GateReason::NO_FACE;
      if (primary) want = primary->eye_distance() >= min_ed ? GateReason::PASS : GateReason::FACE_TOO_SMALL;
      mismatches += d.reason != want || d.passed != (want == GateReason::PASS) ||
                    (primary && d.geometry && !(*d.geometry == *primary));
      if (d.passed) pass.insert(d.image_id);
    }
    if (!first) {
      for (const auto& id : pass) nested_violations += !previous_pass.contains(id);
    }
    pass_counts.push_back(pass.size());
    previous_pass = std::move(pass);
    first = false;
  }
  const bool strictly_varies = pass_counts.front() > pass_counts.back();
  return verdict(mismatches == 0 && nested_violations == 0 && strictly_varies,
                 fmt::format("500 images x 10 thresholds, {} mismatches, {} monotonicity violations, pass {} -> {}",
                             mismatches, nested_violations, pass_counts.front(), pass_counts.back()));
}

// ---- detector -------------------------------------------------------------------

Outcome detector_desk_scale(const fs::path& work) {
  const auto t0 = Clock::now();
  const fs::path ws = work / "detector";
  testing::FixtureOptions opts;
  opts.synth.real = 200;
  opts.synth.fake = 200;
  opts.synth.wild = 0;
  opts.synth.size = 64;
  opts.synth.seed = 108;
  opts.splits = {{DatasetRole::REAL, {120, 40, 40}}, {DatasetRole::FAKE, {120, 40, 40}}};
  const auto fx = testing::make_fixture(ws, "desk", opts);
  const CorpusStore store(ws, "desk");

  TrainConfig cfg = TrainConfig::for_variant(DetectorVariant::C_RF);
  cfg.initial_lr = 1e-3;
  cfg.plateau_patience_epochs = 2;
  cfg.batch_size = 16;
  cfg.crop_size = 56;
  cfg.resize_to = 64;
  cfg.seed = 108;
  cfg.max_epochs = 80;
  const ModelRegistry registry(ws);
  const ModelHandle h = train(fx.manifest, store, cfg, DetectorVariant::C_RF, "desk", registry);

  const ResNetScorer scorer(registry.load("desk"));
  std::vector<ImageRecord> test;
  for (auto role : {DatasetRole::REAL, DatasetRole::FAKE}) {
    for (const auto* r : fx.manifest.select(role, Split::TEST)) test.push_back(*r);
  }
  const ScoreRun run = score(test, scorer, store);
  std::vector<LabeledScore> labeled;
  for (const auto& s : run.scores) {
    const auto* r = fx.manifest.find(s.image_id);
    labeled.push_back({s.image_id, s.score, r->role == DatasetRole::FAKE ? Label::FAKE : Label::REAL});
  }
  const double a = auc(labeled);
  const double minutes = seconds_since(t0) / 60.0;

  // Schedule: every change is exactly one factor-10 step.
  int bad_steps = 0;
  std::vector<double> lrs;
  for (const auto& e : h.train_log) lrs.push_back(e.lr);
  lrs.push_back(h.final_lr);
  for (std::size_t i = 1; i < lrs.size(); ++i) {
    const double ratio = lrs[i - 1] / lrs[i];
    bad_steps += !(std::abs(ratio - 1.0) < 1e-9 || std::abs(ratio - 10.0) < 1e-9);
  }
  const bool schedule_ok = bad_steps == 0 && h.stopped_by_schedule && h.final_lr < 1e-6;

  // Augmentation firing rates at p = 0.1 over 10,000 draws.
  AugmentationConfig aug;
  Rng rng(109);
  int blur = 0, jpeg = 0, resize = 0;
  for (int i = 0; i < 10000; ++i) {
    const auto d = draw_augmentation(aug, rng);
    blur += d.blur, jpeg += d.jpeg, resize += d.resize;
  }
  const auto [lo, hi] = oracle::binomial_bounds(10000, 0.1, 0.01);
  const auto inside = [&](int n) { return n >= lo && n <= hi; };
  const bool aug_ok = inside(blur) && inside(jpeg) && inside(resize);

  return verdict(a >= 0.95 && minutes < 15.0 && schedule_ok && aug_ok && run.skipped.empty(),
                 fmt::format("test AUC {:.4f} on {} images, {:.1f} min, {} epochs, final lr {:.0e}, "
                             "bad steps {}, augment fires {}/{}/{} in [{}, {}]",
                             a, labeled.size(), minutes, h.train_log.size(), h.final_lr, bad_steps, blur, jpeg,
                             resize, lo, hi));
}

// ---- inversion ------------------------------------------------------------------

Outcome inversion_oracle() {
  const auto t0 = Clock::now();
  const ToyGenerator gen(0);
  const MsePerceptualDistance mse;
  Rng rng(110);
  int in_ok = 0, out_ok = 0;
  double worst_in = 0.0, least_out = 1e9;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> z(static_cast<std::size_t>(gen.latent_dim()));
    for (auto& v : z) v = rng.normal();
    InversionConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(trial);
    const auto in = invert("in", gen.generate_image(z), gen, mse, cfg);
    const auto out = invert("out", render_synthetic(SynthKind::PHOTO, 64, 1000 + trial).image, gen, mse, cfg);
    in_ok += in.mse < 1e-3;
    out_ok += out.mse > 10.0 * 1e-3;
    worst_in = std::max(worst_in, in.mse);
    least_out = std::min(least_out, out.mse);
  }
  const double secs = seconds_since(t0);
  return verdict(in_ok == 20 && out_ok >= 18 && secs < 300.0,
                 fmt::format("in-range {}/20 below 1e-3 (worst {:.2e}), out-of-range {}/20 above 1e-2 (least {:.2e}), "
                             "{:.1f} s",
                             in_ok, worst_in, out_ok, least_out, secs));
}

// ---- dedup ------------------------------------------------------------------------

Outcome dedup_oracle() {
  Rng rng(111);
  int wrong = 0;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<PerceptualHash> hashes;
    const int groups = static_cast<int>(rng.uniform_int(1, 20));
    for (int g = 0; g < groups && hashes.size() < 250; ++g) {
      const std::uint64_t base = rng.next_u64();
      const int size = static_cast<int>(rng.uniform_int(1, 12));
      for (int i = 0; i < size; ++i) {
        std::uint64_t h = base;
        for (int b = static_cast<int>(rng.uniform_int(0, 5)); b > 0; --b) h ^= std::uint64_t{1} << rng.uniform_int(0, 63);
        hashes.push_back({fmt::format("g{}_{}", g, i), h});
      }
    }
    while (hashes.size() < static_cast<std::size_t>(rng.uniform_int(hashes.size(), 300))) {
      hashes.push_back({fmt::format("n{}", hashes.size()), rng.next_u64()});
    }
    if (trial % 2) {
      for (auto& h : hashes) h.bits &= 0xfff;  // dense: many border points
    }
    rng.shuffle(hashes);
    const int eps = static_cast<int>(rng.uniform_int(1, 6));
    const int min_samples = static_cast<int>(rng.uniform_int(2, 4));

    auto sorted = hashes;
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
      return a.bits != b.bits ? a.bits < b.bits : a.image_id < b.image_id;
    });
    std::vector<std::uint64_t> pts;
    std::vector<std::string> ids;
    for (const auto& h : sorted) pts.push_back(h.bits), ids.push_back(h.image_id);
    const auto want = oracle::partition<std::string>(oracle::dbscan(pts, eps, min_samples), ids);
    std::set<std::set<std::string>> got;
    for (const auto& c : cluster(hashes, eps, min_samples)) got.insert({c.member_ids.begin(), c.member_ids.end()});
    wrong += got != want;
  }

  // Recompressed pairs.
  std::vector<PerceptualHash> pairs;
  const int n = 100;
  for (int i = 0; i < n; ++i) {
    const auto kind = i % 3 == 0 ? SynthKind::GENERATED : (i % 3 == 1 ? SynthKind::PHOTO : SynthKind::NO_FACE);
    const auto original = encode_jpeg(render_synthetic(kind, 128, 2000 + i).image, 90);
    const auto again = encode_jpeg(decode_image(original), 70);
    pairs.push_back(phash(fmt::format("{:03}a", i), original));
    pairs.push_back(phash(fmt::format("{:03}b", i), again));
  }
  std::map<std::string, int> cluster_of;
  for (const auto& c : cluster(pairs, 3, 2)) {
    for (const auto& id : c.member_ids) cluster_of[id] = c.cluster_id;
  }
  int together = 0;
  for (int i = 0; i < n; ++i) {
    const auto a = cluster_of.find(fmt::format("{:03}a", i)), b = cluster_of.find(fmt::format("{:03}b", i));
    together += a != cluster_of.end() && b != cluster_of.end() && a->second == b->second;
  }
  return verdict(wrong == 0 && together >= 95,
                 fmt::format("50 corpora, {} partition mismatches; {}/{} JPEG pairs clustered together", wrong,
                             together, n));
}

// ---- content ------------------------------------------------------------------------

TweetRecord tweet(std::string id, std::string text, int second) {
  TweetRecord t;
  t.tweet_id = std::move(id);
  t.account_id = "a";
  t.text = std::move(text);
  t.language = "en";
  t.created_at = parse_timestamp("2022-06-01T00:00:00Z") + std::chrono::seconds(second);
  return t;
}

Outcome content_clustering() {
  Rng rng(112);
  int failures = 0;
  // Planted corpora: three directions plus unrelated noise.
  for (int trial = 0; trial < 10; ++trial) {
    const int dim = 32;
    std::map<std::string, std::vector<double>> vecs;
    std::vector<TweetRecord> tweets;
    std::map<std::string, int> planted;
    std::vector<int> which;
    for (int g = 0; g < 3; ++g) {
      for (int i = 0; i < 60; ++i) which.push_back(g);
    }
    for (int i = 0; i < 40; ++i) which.push_back(-1);
    rng.shuffle(which);
    for (std::size_t k = 0; k < which.size(); ++k) {
      std::vector<double> v(dim);
      for (int d = 0; d < dim; ++d) v[d] = which[k] >= 0 ? (d == which[k] ? 1.0 : 0.0) + rng.normal(0, 0.04) : rng.normal();
      const std::string text = fmt::format("t{}_{}", trial, k);
      vecs[text] = v;
      const std::string id = fmt::format("{:06}", k);
      tweets.push_back(tweet(id, text, static_cast<int>(k)));
      if (which[k] >= 0) planted[id] = which[k];
    }
    const auto r = cluster_stream(tweets, PrecomputedEmbedder(vecs), 0.6, 50);
    std::set<std::set<std::string>> got, want;
    std::map<int, std::set<std::string>> g1, g2;
    for (const auto& a : r.assignments) {
      if (a.cluster_id != kNoiseCluster) g1[a.cluster_id].insert(a.tweet_id);
    }
    for (const auto& [id, g] : planted) g2[g].insert(id);
    for (auto& [k, v] : g1) got.insert(v);
    for (auto& [k, v] : g2) want.insert(v);
    failures += got != want || r.profiles.size() != 3;
  }

  // Orthogonal groups of exactly min-size.
  {
    std::map<std::string, std::vector<double>> vecs;
    std::vector<TweetRecord> tweets;
    for (int i = 0; i < 200; ++i) {
      std::vector<double> v(4, 0.0);
      v[static_cast<std::size_t>(i % 4)] = 1.0;
      vecs[fmt::format("o{}", i)] = v;
      tweets.push_back(tweet(fmt::format("{:06}", i), fmt::format("o{}", i), i));
    }
    const auto r = cluster_stream(tweets, PrecomputedEmbedder(vecs), 0.6, 50);
    failures += r.profiles.size() != 4;
    for (const auto& p : r.profiles) failures += p.size != 50;
  }
  // Threshold edge: cosine 0.59 founds a new cluster, 0.61 joins.
  for (double cosine : {0.59, 0.61}) {
    std::map<std::string, std::vector<double>> vecs{{"x", {1.0, 0.0}}, {"y", {cosine, std::sqrt(1 - cosine * cosine)}}};
    std::vector<TweetRecord> tweets{tweet("1", "x", 0), tweet("2", "y", 1)};
    const auto r = cluster_stream(tweets, PrecomputedEmbedder(vecs), 0.6, 1);
    failures += (r.clusters_formed == 1) != (cosine > 0.6);
  }
  // 49 identical tweets stay noise; 50 form a cluster.
  for (int n : {49, 50}) {
    std::vector<TweetRecord> tweets;
    for (int i = 0; i < n; ++i) tweets.push_back(tweet(fmt::format("{:06}", i), "free crypto giveaway click here", i));
    const auto r = cluster_stream(tweets, HashingEmbedder(), 0.6, 50);
    for (const auto& a : r.assignments) failures += (a.cluster_id == kNoiseCluster) != (n == 49);
  }
  // c-TF-IDF against hand-computed weights.
  const std::vector<TweetRecord> tweets{tweet("1", "apple apple banana", 0), tweet("2", "banana cherry", 1)};
  const std::vector<ClusterAssignment> assignments{{"1", 0, 1.0}, {"2", 1, 1.0}};
  const auto w = ctfidf(assignments, tweets, 10);
  const double expected[] = {2.0 / 3.0 * std::log(2.25), 1.0 / 3.0 * std::log(2.25), 0.5 * std::log(3.5),
                             0.5 * std::log(2.25)};
  const double got[] = {w.at(0)[0].second, w.at(0)[1].second, w.at(1)[0].second, w.at(1)[1].second};
  double worst = 0.0;
  for (int i = 0; i < 4; ++i) worst = std::max(worst, std::abs(got[i] - expected[i]));
  failures += worst > 1e-12;
  return verdict(failures == 0,
                 fmt::format("10 planted corpora, forced size/threshold cases, c-TF-IDF error {:.1e}; {} failures",
                             worst, failures));
}

// ---- accounts ---------------------------------------------------------------------

Outcome account_analytics() {
  Rng rng(113);
  int failures = 0;
  const Timestamp epoch = parse_timestamp("2012-01-01T00:00:00Z");

  // Spike: 30% of accounts share one follower count.
  std::vector<AccountRecord> accounts;
  for (int i = 0; i < 2000; ++i) {
    AccountRecord a;
    a.id = std::to_string(i);
    a.followers_count = i < 600 ? 137 : static_cast<std::uint64_t>(rng.uniform_int(1000, 10000000));
    a.created_at = epoch + std::chrono::seconds(rng.uniform_int(0, 10LL * 365 * 86400));
    accounts.push_back(a);
  }
  const Timestamp collected = parse_timestamp("2023-01-01T00:00:00Z");
  const auto spikes = exact_value_spikes(accounts, Metric::FOLLOWERS, 0.05, collected);
  failures += !(spikes.size() == 1 && spikes[0].value == 137.0 && spikes[0].count == 600 && spikes[0].share == 0.3);

  // Burst: 500 creations inside one UTC day.
  const Timestamp burst_day = parse_timestamp("2019-04-17T00:00:00Z");
  for (int i = 0; i < 500; ++i) {
    AccountRecord a;
    a.id = "b" + std::to_string(i);
    a.created_at = burst_day + std::chrono::seconds(rng.uniform_int(0, 86399));
    accounts.push_back(a);
  }
  const auto windows = bulk_creation_windows(accounts, std::chrono::hours(24), 100);
  failures += !(windows.size() == 1 && windows[0].start == burst_day &&
                windows[0].end == burst_day + std::chrono::hours(24) && windows[0].count >= 500 &&
                windows[0].count < 520);

  // Shares sum to one.
  double worst_share = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::string csv = "account_id,checked_at,status\n";
    const int n = static_cast<int>(rng.uniform_int(1, 300));
    static const char* kNames[] = {"ACTIVE", "DEACTIVATED", "SUSPENDED"};
    for (int i = 0; i < n; ++i) {
      csv += fmt::format("{},2023-0{}-01T00:00:00Z,{}\n", rng.uniform_int(0, n), rng.uniform_int(1, 9),
                         kNames[rng.uniform_int(0, 2)]);
    }
    std::vector<StatusCheck> checks;
    try {
      checks = parse_status_csv(csv);
    } catch (const Error&) {
      continue;  // a random log may repeat an (account, time) pair with two statuses
    }
    const auto s = status_shares(checks);
    double sum = 0.0;
    for (const auto& [k, v] : s.shares) sum += v;
    worst_share = std::max(worst_share, std::abs(sum - 1.0));
  }
  failures += worst_share > 1e-9;

  // Summaries against the sort-based oracle.
  int summary_bad = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> v(static_cast<std::size_t>(rng.uniform_int(1, 500)));
    for (auto& x : v) x = std::floor(std::exp(rng.uniform(0, 12)));
    const auto got = summarize(v);
    const auto want = oracle::summarize(v);
    summary_bad += got.count != want.count || got.median != want.median || got.min != want.min ||
                   got.max != want.max || std::abs(got.q1 - want.q1) > 1e-9 * (1 + want.q1) ||
                   std::abs(got.q3 - want.q3) > 1e-9 * (1 + want.q3) ||
                   std::abs(got.mean - want.mean) > 1e-9 * (1 + want.mean);
  }
  failures += summary_bad;
  return verdict(failures == 0, fmt::format("spike {}, burst windows {}, share error {:.1e}, summary mismatches {}",
                                            spikes.empty() ? std::string("none") : fmt::format("{}", spikes[0].value),
                                            windows.size(), worst_share, summary_bad));
}

// ---- pipeline -------------------------------------------------------------------------

class CountingDetector final : public FaceDetector {
 public:
  explicit CountingDetector(fs::path dir) : inner_(std::move(dir)) {}
  std::vector<FaceGeometry> detect(const ImageRecord& r, const cv::Mat& img) const override {
    ++calls;
    return inner_.detect(r, img);
  }
  std::string name() const override { return inner_.name(); }
  mutable int calls = 0;

 private:
  SidecarFaceDetector inner_;
};

std::string without_line(const std::string& text, std::string_view key) {
  std::string out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto end = text.find('\n', pos);
    const std::string line = text.substr(pos, end == std::string::npos ? std::string::npos : end - pos + 1);
    if (line.find(key) == std::string::npos) out += line;
    if (end == std::string::npos) break;
    pos = end + 1;
  }
  return out;
}

Outcome pipeline_replay(const fs::path& work) {
  int failures = 0;
  std::string notes;

  // Replay: derive everything, keep only the label log, derive again.
  {
    const fs::path ws = work / "replay";
    testing::FixtureOptions opts;
    opts.synth.real = 0;
    opts.synth.fake = 0;
    opts.synth.wild = 300;
    opts.synth.size = 64;
    opts.synth.seed = 114;
    opts.synth.wild_generated = 0.3;
    opts.synth.wild_no_face = 0.3;
    testing::make_fixture(ws, "rp", opts);
    const auto truth = testing::read_wild_truth(ws / "wild_truth.csv");
    PipelineConfig c;
    c.workspace = ws;
    c.corpus_id = "rp";
    c.model_id = "trace";
    c.subset_fraction = 0.5;
    c.subset_top_k = 1000;
    c.seed = 114;
    const char* outputs[] = {"calibration.json", "calibration_roc.csv", "calibration_pr.csv", "classified_fake.txt",
                             "subset.json", "gates.jsonl"};
    auto derive = [&]() {
      Pipeline p(c);
      const SidecarFaceDetector detector(ws / "faces");
      const testing::TraceScorer scorer;
      p.run_detection(detector, scorer);
      p.calibrate_and_estimate();
      p.run_detection(detector, scorer);
      std::map<std::string, std::string> files;
      for (const char* name : outputs) files[name] = read_file_text(p.run_dir() / name);
      return files;
    };
    {
      Pipeline p(c);
      const SidecarFaceDetector detector(ws / "faces");
      p.run_detection(detector, testing::TraceScorer());
      int minute = 0;
      for (const auto& id : p.subset().ids) {
        LabelEvent e;
        e.image_id = id;
        e.annotator_id = minute % 3 ? "ann1" : "ann2";
        e.label = truth.at(id) == SynthKind::GENERATED ? Label::FAKE : Label::REAL;
        e.labeled_at = parse_timestamp("2023-02-01T00:00:00Z") + std::chrono::minutes(minute++);
        p.submit_label(e);
      }
    }
    const auto first = derive();
    const fs::path run = ws / "runs" / "rp";
    for (const auto& entry : fs::directory_iterator(run)) {
      if (entry.path().filename() != "labels.jsonl") fs::remove_all(entry.path());
    }
    const auto second = derive();
    int differing = 0;
    for (const auto& [name, text] : first) differing += second.at(name) != text;
    failures += differing;
    notes += fmt::format("replay: {}/{} artifacts differ", differing, first.size());
  }

  // Rerun idempotency at 1,000 images.
  {
    const fs::path ws = work / "idem";
    testing::FixtureOptions opts;
    opts.synth.real = 0;
    opts.synth.fake = 0;
    opts.synth.wild = 1000;
    opts.synth.size = 64;
    opts.synth.seed = 115;
    testing::make_fixture(ws, "id", opts);
    PipelineConfig c;
    c.workspace = ws;
    c.corpus_id = "id";
    c.model_id = "trace";
    c.threshold = 0.5;
    const auto t0 = Clock::now();
    Pipeline p(c);
    CountingDetector d1(ws / "faces");
    const testing::TraceScorer s1;
    p.run_detection(d1, s1);
    const std::string gates = read_file_text(p.run_dir() / "gates.jsonl");
    const std::string scores = read_file_text(p.run_dir() / "scores" / "trace.jsonl");
    const std::string fakes = read_file_text(p.run_dir() / "classified_fake.txt");
    const std::string report = without_line(read_file_text(p.run_dir() / "report.json"), "generated_at");
    const double first_secs = seconds_since(t0);
    const auto t1 = Clock::now();
    Pipeline again(c);
    CountingDetector d2(ws / "faces");
    const testing::TraceScorer s2;
    again.run_detection(d2, s2);
    const double rerun_secs = seconds_since(t1);
    const bool same = read_file_text(p.run_dir() / "gates.jsonl") == gates &&
                      read_file_text(p.run_dir() / "scores" / "trace.jsonl") == scores &&
                      read_file_text(p.run_dir() / "classified_fake.txt") == fakes &&
                      without_line(read_file_text(p.run_dir() / "report.json"), "generated_at") == report;
    const bool ok = same && d2.calls == 0 && s2.calls() == 0 && first_secs + rerun_secs < 120.0;
    failures += !ok;
    notes += fmt::format("; 1000 images: first run {:.1f} s ({} detections), rerun {:.2f} s with {} detections and "
                         "{} scorings, outputs {}",
                         first_secs, d1.calls, rerun_secs, d2.calls, s2.calls(), same ? "identical" : "changed");
  }
  return verdict(failures == 0, notes);
}

// ---- optional large-corpus checks ----------------------------------------------------

Outcome large_corpus() {
  const char* ws_env = std::getenv("GANWILD_LARGE_WORKSPACE");
  const char* corpus_env = std::getenv("GANWILD_LARGE_CORPUS");
  const char* model_env = std::getenv("GANWILD_LARGE_MODEL");
  if (!ws_env || !corpus_env || !model_env) {
    return {Outcome::SKIP,
            "set GANWILD_LARGE_WORKSPACE, GANWILD_LARGE_CORPUS and GANWILD_LARGE_MODEL to a prepared "
            "workspace with real face corpora"};
  }
  PipelineConfig c;
  c.workspace = ws_env;
  c.corpus_id = corpus_env;
  c.model_id = model_env;
  Pipeline p(c);
  const auto& m = p.manifest();
  int failures = 0;
  std::string notes;

  // Condition (a): processed real vs processed fake, TEST split.
  const ResNetScorer scorer(ModelRegistry(c.workspace).load(c.model_id));
  std::vector<ImageRecord> test;
  for (auto role : {DatasetRole::REAL_PROC, DatasetRole::FAKE_PROC}) {
    for (const auto* r : m.select(role, Split::TEST)) test.push_back(*r);
  }
  const auto run = score(test, scorer, p.store());
  std::vector<LabeledScore> labeled;
  for (const auto& s : run.scores) {
    labeled.push_back({s.image_id, s.score, m.find(s.image_id)->role == DatasetRole::FAKE_PROC ? Label::FAKE : Label::REAL});
  }
  const double a = auc(labeled);
  failures += a < 0.99;
  notes += fmt::format("condition (a) AUC {:.4f}", a);

  // Every validation fake aligned at k = 7 against the training reference.
  const auto detector = make_face_detector(c.face_detector_spec());
  const auto ref = p.fit_alignment(*detector);
  std::size_t aligned = 0, total = 0;
  for (const auto* r : m.select(DatasetRole::FAKE_PROC, Split::VAL)) {
    const auto primary = select_primary_face(detector->detect(*r, p.store().load_image(*r)));
    ++total;
    aligned += primary && is_aligned(*primary, ref, 7.0);
  }
  failures += total == 0 || aligned != total;
  notes += fmt::format("; {}/{} validation fakes aligned", aligned, total);

  // Perceptual distance of stored inversions as a fake score over labels.
  const LabelView view(p.label_events());
  std::vector<LabeledScore> by_distance;
  for (const auto& [id, e] : view.per_image()) {
    if (e.label == Label::UNSURE) continue;
    if (const auto inv = p.inversion(id)) by_distance.push_back({id, -inv->lpips, e.label});
  }
  std::size_t fakes = 0;
  for (const auto& s : by_distance) fakes += s.label == Label::FAKE;
  if (fakes == 0 || fakes == by_distance.size()) {
    failures += 1;
    notes += "; no labeled inversions for the distance AUC";
  } else {
    const double d = auc(by_distance);
    failures += std::abs(d - 0.97) > 0.03;
    notes += fmt::format("; distance AUC {:.4f}", d);
  }
  return verdict(failures == 0, notes);
}

}  // namespace
}  // namespace ganwild

int main(int argc, char** argv) {
  using namespace ganwild;
  CLI::App app{"Acceptance checks"};
  std::vector<std::string> only;
  std::string workdir;
  app.add_option("--only", only, "Run only checks whose name contains one of these strings");
  app.add_option("--workdir", workdir, "Scratch directory (default: a fresh temporary directory)");
  CLI11_PARSE(app, argc, argv);

  std::optional<testing::TempDir> scratch;
  fs::path work;
  if (workdir.empty()) {
    scratch.emplace();
    work = scratch->path();
  } else {
    work = workdir;
    fs::create_directories(work);
  }

  const std::vector<std::pair<std::string, std::function<Outcome()>>> checks = {
      {"threshold-oracle", threshold_oracle},
      {"auc-properties", auc_properties},
      {"error-rates", error_rates_check},
      {"alignment-predicate", alignment_predicate},
      {"eye-distance-translation", eye_distance_translation},
      {"prefilter", [&] { return prefilter_check(work); }},
      {"detector-desk-scale", [&] { return detector_desk_scale(work); }},
      {"inversion-toy-oracle", inversion_oracle},
      {"dedup-oracle", dedup_oracle},
      {"content-clustering", content_clustering},
      {"account-analytics", account_analytics},
      {"pipeline-replay", [&] { return pipeline_replay(work); }},
      {"large-corpus", large_corpus},
  };

  int failed = 0;
  for (const auto& [name, check] : checks) {
    if (!only.empty() && std::none_of(only.begin(), only.end(), [&](const std::string& s) {
          return name.find(s) != std::string::npos;
        })) {
      continue;
    }
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {Outcome::FAIL, fmt::format("exception: {}", e.what())};
    }
    static const char* kWords[] = {"PASS", "FAIL", "SKIP"};
    fmt::print("{} {:<26} {}\n", kWords[o.kind], name, o.detail);
    std::fflush(stdout);
    failed += o.kind == Outcome::FAIL;
  }
  return failed == 0 ? 0 : 1;
}
