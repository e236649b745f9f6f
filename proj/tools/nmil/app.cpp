/* Copyright 2026 The NMIL Authors. All Rights Reserved.

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

#include "app.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>

#include <fmt/format.h>

#include "config.hpp"
#include "nmil/common/error.hpp"
#include "nmil/common/log.hpp"
#include "nmil/common/parallel.hpp"
#include "nmil/common/rng.hpp"
#include "nmil/data/standardize.hpp"
#include "nmil/eval/inference.hpp"
#include "nmil/eval/metrics.hpp"
#include "nmil/mil/grid.hpp"
#include "nmil/mil/train.hpp"
#include "nmil/roi/io.hpp"
#include "nmil/roi/tiles.hpp"

namespace nmil::app {
namespace {

namespace fs = std::filesystem;

struct Context {
  json config;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  fs::path out;
  bool dry_run = false;
  std::ostream* os = nullptr;
};

Context make_context(const json& config, bool dry_run, std::ostream& os) {
  Context c;
  c.config = config;
  c.seed = get<std::uint64_t>(config, "seed");
  c.jobs = std::max<std::size_t>(1, get<std::size_t>(config, "jobs"));
  c.out = get<std::string>(config, "out");
  c.dry_run = dry_run;
  c.os = &os;
  return c;
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError(path.string() + ": cannot open for writing");
  f << text;
  if (!f) throw DataError(path.string() + ": write failed");
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw DataError(path.string() + ": cannot open file");
  try {
    return json::parse(f);
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": invalid JSON (" + e.what() + ")");
  }
}

// Report skeleton shared by every command. Thread count and output location
// do not affect results, so they are left out and reports compare bytewise.
json report_base(const Context& c) {
  json cfg = c.config;
  cfg.erase("jobs");
  cfg.erase("out");
  return {{"task", c.config.at("task")}, {"seed", c.seed}, {"config", cfg}};
}

json spread_json(const eval::Spread& s) {
  return {{"best", s.best}, {"mean", s.mean}, {"std", s.std}};
}

std::string roc_csv(const std::vector<eval::RocPoint>& roc) {
  std::string s = "fpr,tpr,threshold\n";
  for (const auto& p : roc) s += fmt::format("{:.17g},{:.17g},{:.17g}\n", p.fpr, p.tpr, p.threshold);
  return s;
}

json standardizer_json(const data::Standardizer& s) {
  return {{"mean", s.mean}, {"stddev", s.stddev}};
}

data::Standardizer standardizer_from(const json& j) {
  data::Standardizer s;
  s.mean = get<std::vector<double>>(j, "mean");
  s.stddev = get<std::vector<double>>(j, "stddev");
  if (s.mean.size() != s.stddev.size()) throw DataError("standardizer mean/stddev widths differ");
  return s;
}

mil::TrainConfig train_config(const Context& c) {
  mil::TrainConfig base;
  base.seed = c.seed;
  return mil::train_config_from_json(c.config.at("train"), base);
}

std::size_t clinical_width(const data::Dataset& ds) {
  return ds.train.empty() ? 0 : ds.train.front().clinical.size();
}

// Score for the bag-mean baseline: larger when the bag looks more like class 1.
double bag_mean_score(const data::NestedBag& b, bool class1_lower) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& r : b.regions) {
    for (double v : r.instances.storage()) sum += v;
    n += r.instances.size();
  }
  const double m = sum / static_cast<double>(n);
  return class1_lower ? -m : m;
}

// ---------------------------------------------------------------- synth-bench

struct SweepCell {
  double fraction;
  std::vector<double> rho;
};

int synth_bench(const Context& c) {
  const json& cfg = c.config;
  const auto dists = get<std::vector<std::vector<double>>>(cfg, "distributions");
  const json& sweep = cfg.at("sweep");
  const bool sweep_on = get<bool>(sweep, "enabled");
  std::vector<SweepCell> cells;
  if (sweep_on) {
    for (const auto& rho : get<std::vector<std::vector<double>>>(sweep, "rho_ranges")) {
      if (rho.size() != 2) throw ConfigError("sweep.rho_ranges entries must be [lo, hi]");
      for (double f : get<std::vector<double>>(sweep, "fractions")) cells.push_back({f, rho});
    }
  }
  const std::size_t sweep_seeds = get<std::size_t>(sweep, "seeds");
  const mil::TrainConfig tc = train_config(c);
  const mil::Aggregator agg = mil::parse_aggregator(get<std::string>(cfg, "aggregator"));
  const bool standardize = get<bool>(cfg, "standardize");

  auto spec_for = [&](const std::vector<double>& class1, std::uint64_t data_seed) {
    json s = cfg.at("synth");
    s["class1"] = class1;
    return synth_from_json(s, data_seed);
  };
  auto dataset = [&](const data::SynthSpec& spec) {
    data::Dataset ds = data::gen_synth_bags(spec);
    if (standardize) data::Standardizer::fit(ds.train).apply(ds);
    return ds;
  };

  for (const auto& d : dists) {
    if (d.size() != 2) throw ConfigError("distributions entries must be [mean, std]");
    spec_for(d, 0);
  }
  if (c.dry_run) {
    std::ostream& os = *c.os;
    os << "synth-bench plan (seed " << c.seed << ")\n";
    for (const auto& d : dists) {
      os << fmt::format("  class1 P({},{}): {} runs of {}\n", d[0], d[1], tc.runs,
                        mil::aggregator_name(agg));
    }
    for (const auto& cell : cells) {
      os << fmt::format("  sweep fraction {} rho [{},{}]: {} seeds\n", cell.fraction, cell.rho[0],
                        cell.rho[1], sweep_seeds);
    }
    os << "  outputs: " << (c.out / "synth_bench.json").string() << ", "
       << (c.out / "synth_bench.csv").string() << "\n";
    return 0;
  }

  json table = json::array();
  std::string csv = "class1_mean,class1_std,best,mean,std,bag_mean_baseline";
  for (std::size_t r = 0; r < tc.runs; ++r) csv += fmt::format(",run{}", r);
  csv += "\n";
  for (std::size_t i = 0; i < dists.size(); ++i) {
    const auto& d = dists[i];
    const data::SynthSpec spec = spec_for(d, derive_seed(c.seed, 100 + i));
    const data::Dataset ds = dataset(spec);
    logger()->info("synth-bench P({},{}): training {} runs", d[0], d[1], tc.runs);
    const auto runs = mil::train_runs(ds, tc.model_spec(agg, mil::Fusion::kImage, ds.dim, 0), tc, c.jobs);
    std::vector<double> aucs;
    json run_rows = json::array();
    for (std::size_t r = 0; r < runs.size(); ++r) {
      const double a = mil::evaluate_auc(runs[r].model, ds.test);
      aucs.push_back(a);
      run_rows.push_back({{"seed", tc.seed + r},
                          {"test_auc", a},
                          {"best_val_auc", runs[r].best_val_auc},
                          {"best_epoch", runs[r].best_epoch},
                          {"epochs", runs[r].history.size()}});
    }
    std::vector<double> baseline;
    const bool lower = spec.class1.mean < spec.class0.mean;
    for (const auto& b : ds.test) baseline.push_back(bag_mean_score(b, lower));
    const double base_auc = eval::auc(baseline, mil::bag_labels(ds.test));
    const eval::Spread s = eval::spread(aucs);
    table.push_back({{"class1", d}, {"runs", run_rows}, {"test", spread_json(s)},
                     {"bag_mean_baseline_auc", base_auc}});
    csv += fmt::format("{},{},{:.6f},{:.6f},{:.6f},{:.6f}", d[0], d[1], s.best, s.mean, s.std, base_auc);
    for (double a : aucs) csv += fmt::format(",{:.6f}", a);
    csv += "\n";
  }

  json sweep_rows = json::array();
  std::string sweep_csv = "fraction,rho_lo,rho_hi,mean_test_auc,std_test_auc\n";
  if (sweep_on) {
    const auto class1 = get<std::vector<double>>(sweep, "class1");
    std::vector<double> aucs(cells.size() * sweep_seeds, 0.0);
    logger()->info("synth-bench sweep: {} cells x {} seeds", cells.size(), sweep_seeds);
    parallel_for(aucs.size(), c.jobs, [&](std::size_t k) {
      const SweepCell& cell = cells[k / sweep_seeds];
      const std::size_t s = k % sweep_seeds;
      json sj = cfg.at("synth");
      sj["class1"] = class1;
      sj["positive_bag_fraction"] = cell.fraction;
      sj["rho"] = cell.rho;
      const data::SynthSpec spec = synth_from_json(sj, derive_seed(c.seed, 1000 + k));
      const data::Dataset ds = dataset(spec);
      mil::TrainConfig one = tc;
      one.seed = tc.seed + s;
      const auto r = mil::train_mil(ds, one.model_spec(agg, mil::Fusion::kImage, ds.dim, 0), one);
      aucs[k] = mil::evaluate_auc(r.model, ds.test);
    });
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const std::vector<double> cell_aucs(aucs.begin() + static_cast<std::ptrdiff_t>(i * sweep_seeds),
                                          aucs.begin() + static_cast<std::ptrdiff_t>((i + 1) * sweep_seeds));
      const eval::Spread s = eval::spread(cell_aucs);
      sweep_rows.push_back({{"fraction", cells[i].fraction}, {"rho", cells[i].rho},
                            {"test_aucs", cell_aucs}, {"mean", s.mean}, {"std", s.std}});
      sweep_csv += fmt::format("{},{},{},{:.6f},{:.6f}\n", cells[i].fraction, cells[i].rho[0],
                               cells[i].rho[1], s.mean, s.std);
    }
  }

  json report = report_base(c);
  report["aggregator"] = mil::aggregator_name(agg);
  report["table"] = table;
  report["sweep"] = sweep_rows;
  write_json(c.out / "synth_bench.json", report);
  write_text(c.out / "synth_bench.csv", csv);
  if (sweep_on) write_text(c.out / "sweep.csv", sweep_csv);
  *c.os << csv;
  if (sweep_on) *c.os << sweep_csv;
  return 0;
}

// ------------------------------------------------------------------ pipeline

struct Prepared {
  data::Dataset ds;
  data::Standardizer standardizer;
  bool standardized = false;
};

Prepared prepare(const Context& c) {
  Prepared p;
  p.ds = load_dataset(c.config.at("data"), c.seed);
  if (get<bool>(c.config, "standardize")) {
    p.standardizer = data::Standardizer::fit(p.ds.train);
    p.standardizer.apply(p.ds);
    p.standardized = true;
  }
  return p;
}

enc::PretrainResult run_pretraining(const Context& c, const data::Dataset& ds) {
  const json& pj = c.config.at("pretrain");
  const enc::PretrainMode mode = enc::parse_mode(get<std::string>(pj, "mode"));
  const enc::EncoderShape shape = encoder_shape_from_json(c.config.at("encoder"), ds.dim);
  const enc::PretrainConfig pc = pretrain_config_from_json(pj, c.seed);
  logger()->info("pretraining mode {}", enc::mode_name(mode));
  return enc::pretrain(ds, mode, pc, enc::init_encoder(shape, c.seed));
}

std::string loss_csv(const std::vector<double>& losses) {
  std::string s = "epoch,loss\n";
  for (std::size_t i = 0; i < losses.size(); ++i) s += fmt::format("{},{:.17g}\n", i + 1, losses[i]);
  return s;
}

int pipeline(const Context& c) {
  const json& cfg = c.config;
  const mil::Aggregator agg = mil::parse_aggregator(get<std::string>(cfg, "aggregator"));
  const mil::Fusion fusion = mil::parse_fusion(get<std::string>(cfg, "fusion"));
  const enc::PretrainMode mode = enc::parse_mode(get<std::string>(cfg.at("pretrain"), "mode"));
  const mil::TrainConfig tc = train_config(c);
  const std::size_t mc_runs = get<std::size_t>(cfg.at("mc"), "runs");
  const double mc_rate = get<double>(cfg.at("mc"), "rate");
  if (c.dry_run) {
    *c.os << fmt::format("pipeline plan (seed {}): data {} -> pretrain {}{} -> embed -> {} x {} "
                         "(fusion {}) -> evaluate with {}-pass MC dropout {}\n",
                         c.seed, get<std::string>(cfg.at("data"), "source"), enc::mode_name(mode),
                         mode == enc::PretrainMode::kI ? " (skipped)" : "", tc.runs,
                         mil::aggregator_name(agg), mil::fusion_name(fusion), mc_runs, mc_rate);
    return 0;
  }
  Prepared p = prepare(c);
  const enc::PretrainResult pre = run_pretraining(c, p.ds);
  const data::Dataset emb = enc::embed_dataset(pre.stack, p.ds, c.jobs);
  const std::size_t clinical = clinical_width(emb);
  const mil::ModelSpec spec = tc.model_spec(agg, fusion, emb.dim, clinical);
  spec.validate();
  if (fusion != mil::Fusion::kImage) {
    for (const auto* split : {&emb.train, &emb.val, &emb.test}) {
      for (const auto& b : *split) {
        if (b.clinical.empty()) {
          throw ConfigError("fusion=" + std::string(mil::fusion_name(fusion)) + " but bag '" +
                            b.bag_id + "' has an empty clinical vector");
        }
      }
    }
  }
  logger()->info("training {} runs of {}", tc.runs, mil::aggregator_name(agg));
  const auto runs = mil::train_runs(emb, spec, tc, c.jobs);

  const std::vector<int> labels = mil::bag_labels(emb.test);
  std::vector<double> aucs, mc_aucs;
  std::vector<std::uint64_t> seeds;
  json run_rows = json::array();
  std::vector<std::vector<double>> scores(runs.size());
  for (std::size_t r = 0; r < runs.size(); ++r) {
    scores[r] = mil::predict_scores(runs[r].model, emb.test);
    const double a = eval::auc(scores[r], labels);
    const double m = eval::auc(
        eval::mc_dropout_scores(runs[r].model, emb.test, mc_runs, mc_rate, tc.seed + r), labels);
    aucs.push_back(a);
    mc_aucs.push_back(m);
    seeds.push_back(tc.seed + r);
    run_rows.push_back({{"seed", tc.seed + r}, {"test_auc", a}, {"mc_auc", m},
                        {"best_val_auc", runs[r].best_val_auc}, {"best_epoch", runs[r].best_epoch},
                        {"epochs", runs[r].history.size()}});
    write_text(c.out / fmt::format("history_run{}.csv", r), mil::history_csv(runs[r].history));
  }
  const eval::RunSummary summary = eval::summarize_runs(aucs, mc_aucs, seeds);
  const std::size_t best =
      static_cast<std::size_t>(std::max_element(aucs.begin(), aucs.end()) - aucs.begin());

  json report = report_base(c);
  report["aggregator"] = mil::aggregator_name(agg);
  report["fusion"] = mil::fusion_name(fusion);
  report["pretrain_mode"] = enc::mode_name(mode);
  report["roi"] = cfg.at("roi");
  report["runs"] = run_rows;
  report["best"] = summary.runs.best;
  report["mean"] = summary.runs.mean;
  report["std"] = summary.runs.std;
  report["mc"] = spread_json(summary.mc);
  write_json(c.out / "report.json", report);
  write_text(c.out / "roc.csv", roc_csv(eval::roc_curve(scores[best], labels)));
  json model = mil::to_json(runs[best].model);
  model["train_config"] = mil::to_json(tc);
  write_json(c.out / "model.json", model);
  write_json(c.out / "encoder.json", enc::to_json(pre.stack));
  if (p.standardized) write_json(c.out / "standardizer.json", standardizer_json(p.standardizer));
  if (!pre.epoch_loss.empty()) write_text(c.out / "pretrain_loss.csv", loss_csv(pre.epoch_loss));
  if (mil::has_attention(agg) && fusion != mil::Fusion::kClinical && !emb.test.empty()) {
    write_text(c.out / "attention.csv",
               eval::attention_csv(eval::export_attention(runs[best].model, emb.test.front())));
  }
  *c.os << fmt::format("{} {} mode {}: test AUC best {:.4f} mean {:.4f} std {:.4f}, MC mean {:.4f}\n",
                       mil::aggregator_name(agg), mil::fusion_name(fusion), enc::mode_name(mode),
                       summary.runs.best, summary.runs.mean, summary.runs.std, summary.mc.mean);
  return 0;
}

// ------------------------------------------------------------------ pretrain

int pretrain_cmd(const Context& c) {
  const enc::PretrainMode mode = enc::parse_mode(get<std::string>(c.config.at("pretrain"), "mode"));
  if (c.dry_run) {
    *c.os << fmt::format("pretrain plan (seed {}): mode {} on {} data\n", c.seed, enc::mode_name(mode),
                         get<std::string>(c.config.at("data"), "source"));
    return 0;
  }
  Prepared p = prepare(c);
  const enc::PretrainResult pre = run_pretraining(c, p.ds);
  json report = report_base(c);
  report["pretrain_mode"] = enc::mode_name(mode);
  report["epoch_loss"] = pre.epoch_loss;
  write_json(c.out / "report.json", report);
  write_json(c.out / "encoder.json", enc::to_json(pre.stack));
  if (p.standardized) write_json(c.out / "standardizer.json", standardizer_json(p.standardizer));
  write_text(c.out / "pretrain_loss.csv", loss_csv(pre.epoch_loss));
  *c.os << fmt::format("pretrained mode {} for {} epochs\n", enc::mode_name(mode), pre.epoch_loss.size());
  return 0;
}

// --------------------------------------------------------------- roi-extract

int roi_extract(const Context& c) {
  const json& cfg = c.config;
  const std::string mask_path = get<std::string>(cfg, "mask");
  std::string sidecar = get<std::string>(cfg, "sidecar");
  if (mask_path.empty()) throw ConfigError("roi-extract needs a mask PNG (--mask)");
  if (sidecar.empty()) sidecar = fs::path(mask_path).replace_extension(".json").string();
  const roi::RoiKind kind = roi::parse_roi(get<std::string>(cfg, "kind"));
  const roi::ScalePlan plan = roi::parse_plan(get<std::string>(cfg, "plan"));
  const double threshold = get<double>(cfg, "threshold");
  const double microns = get<double>(cfg, "microns");
  if (!(microns > 0.0)) throw ConfigError("microns must be positive");
  const std::string stem = std::string(roi::roi_name(kind));
  const fs::path png = c.out / ("roi_" + stem + ".png");
  const fs::path csv = c.out / ("tiles_" + stem + "_" + std::string(roi::plan_name(plan)) + ".csv");
  if (c.dry_run) {
    *c.os << fmt::format("roi-extract plan: {} ({}) -> {} ROI, {} tiles at threshold {}\n  outputs: {}, {}\n",
                         mask_path, sidecar, stem, roi::plan_name(plan), threshold, png.string(),
                         csv.string());
    return 0;
  }
  const roi::SegMask mask = roi::load_segmask(mask_path, sidecar);
  const roi::RoiMask r = roi::derive_roi(mask, kind, {microns});
  const roi::TileManifest tiles = roi::extract_tiles(r, plan, threshold);
  fs::create_directories(c.out);
  roi::write_gray_png(png, roi::roi_image(r));
  write_text(csv, roi::manifest_csv(tiles));
  json report = report_base(c);
  report["roi"] = stem;
  report["roi_pixels"] = r.count();
  report["tiles"] = tiles.entries.size();
  report["width"] = r.width;
  report["height"] = r.height;
  write_json(c.out / ("report_" + stem + ".json"), report);
  if (r.count() == 0 || tiles.entries.empty()) {
    logger()->warn("{} ROI of {} yields {} pixels and {} tiles", stem, mask_path, r.count(),
                   tiles.entries.size());
  }
  *c.os << fmt::format("{}: {} ROI pixels of {}x{}, {} tiles ({})\n", stem, r.count(), r.width,
                       r.height, tiles.entries.size(), roi::plan_name(plan));
  return 0;
}

// --------------------------------------------------------------- grid-search

int grid_search_cmd(const Context& c) {
  const json& cfg = c.config;
  const mil::Grid grid = mil::grid_from_json(cfg.at("grid"));
  const mil::TrainConfig tc = train_config(c);
  const mil::Aggregator agg = mil::parse_aggregator(get<std::string>(cfg, "aggregator"));
  const mil::Fusion fusion = mil::parse_fusion(get<std::string>(cfg, "fusion"));
  if (c.dry_run) {
    *c.os << fmt::format("grid-search plan (seed {}): {} combinations x {} runs of {}\n", c.seed,
                         grid.size(), tc.runs, mil::aggregator_name(agg));
    return 0;
  }
  Prepared p = prepare(c);
  const auto ranked = mil::grid_search(p.ds, agg, fusion, p.ds.dim, clinical_width(p.ds), grid, tc, c.jobs);
  json report = report_base(c);
  report["aggregator"] = mil::aggregator_name(agg);
  report["combinations"] = grid.size();
  report["ranked"] = mil::to_json(ranked);
  write_json(c.out / "grid.json", report);
  const auto& top = ranked.front();
  *c.os << fmt::format("{} combinations; best mean validation AUC {:.4f} (std {:.4f})\n", ranked.size(),
                       top.val.mean, top.val.std);
  return 0;
}

// ---------------------------------------------------------------------- eval

int eval_cmd(const Context& c) {
  const json& cfg = c.config;
  const std::string dir = get<std::string>(cfg, "artifacts");
  if (dir.empty()) throw ConfigError("eval needs the pipeline output directory (--artifacts)");
  const std::string split = get<std::string>(cfg, "split");
  if (split != "train" && split != "val" && split != "test") {
    throw ConfigError("split must be train, val or test");
  }
  const std::size_t mc_runs = get<std::size_t>(cfg.at("mc"), "runs");
  const double mc_rate = get<double>(cfg.at("mc"), "rate");
  if (c.dry_run) {
    *c.os << fmt::format("eval plan: model in {} on the {} split with {}-pass MC dropout {}\n", dir,
                         split, mc_runs, mc_rate);
    return 0;
  }
  const json mj = read_json(fs::path(dir) / "model.json");
  const mil::MilModel model = mil::model_from_json(mj);
  data::Dataset ds = load_dataset(cfg.at("data"), c.seed);
  if (fs::exists(fs::path(dir) / "standardizer.json")) {
    standardizer_from(read_json(fs::path(dir) / "standardizer.json")).apply(ds);
  }
  std::string mode = "I";
  if (fs::exists(fs::path(dir) / "encoder.json")) {
    const enc::EncoderStack stack = enc::encoder_from_json(read_json(fs::path(dir) / "encoder.json"));
    mode = std::string(enc::mode_name(stack.mode));
    ds = enc::embed_dataset(stack, ds, c.jobs);
  }
  const auto& bags = split == "train" ? ds.train : split == "val" ? ds.val : ds.test;
  const std::vector<int> labels = mil::bag_labels(bags);
  const std::vector<double> scores = mil::predict_scores(model, bags);
  const double a = eval::auc(scores, labels);
  const double m = eval::auc(eval::mc_dropout_scores(model, bags, mc_runs, mc_rate, c.seed), labels);
  const eval::RunSummary s = eval::summarize_runs(std::vector<double>{a}, std::vector<double>{m},
                                                  std::vector<std::uint64_t>{c.seed});
  json report = report_base(c);
  report["aggregator"] = mil::aggregator_name(model.spec.aggregator);
  report["pretrain_mode"] = mode;
  report["roi"] = "n/a";
  report["split"] = split;
  report["runs"] = json::array({{{"seed", c.seed}, {"auc", a}, {"mc_auc", m}}});
  report["best"] = s.runs.best;
  report["mean"] = s.runs.mean;
  report["std"] = s.runs.std;
  report["mc"] = spread_json(s.mc);
  write_json(c.out / "report.json", report);
  write_text(c.out / "roc.csv", roc_csv(eval::roc_curve(scores, labels)));
  std::string sc = "bag_id,label,score\n";
  for (std::size_t i = 0; i < bags.size(); ++i) {
    sc += fmt::format("{},{},{:.17g}\n", bags[i].bag_id, labels[i], scores[i]);
  }
  write_text(c.out / "scores.csv", sc);
  *c.os << fmt::format("{} split: AUC {:.4f}, MC AUC {:.4f}\n", split, a, m);
  return 0;
}

}  // namespace

int run_command(const std::string& name, const json& config, bool dry_run, std::ostream& os) {
  const Context c = make_context(config, dry_run, os);
  if (name == "synth-bench") return synth_bench(c);
  if (name == "pipeline") return pipeline(c);
  if (name == "pretrain") return pretrain_cmd(c);
  if (name == "roi-extract") return roi_extract(c);
  if (name == "grid-search") return grid_search_cmd(c);
  if (name == "eval") return eval_cmd(c);
  throw ConfigError("unknown command '" + name + "'");
}

}  // namespace nmil::app
