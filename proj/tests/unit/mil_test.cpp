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

#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "nmil/autodiff/gradcheck.hpp"
#include "nmil/common/error.hpp"
#include "nmil/data/standardize.hpp"
#include "nmil/data/synth.hpp"
#include "nmil/eval/inference.hpp"
#include "nmil/loss/losses.hpp"
#include "nmil/mil/grid.hpp"
#include "nmil/mil/model.hpp"
#include "nmil/mil/train.hpp"
#include "oracle/attention_oracle.hpp"

namespace nmil::mil {
namespace {

ModelSpec small_spec(Aggregator agg, std::size_t dim = 3) {
  ModelSpec s;
  s.aggregator = agg;
  s.feature_dim = dim;
  s.psi_hidden = {5};
  s.n_att = 4;
  s.head_hidden = {4};
  return s;
}

data::Region random_region(std::mt19937_64& rng, std::size_t n, std::size_t dim,
                           const std::string& id) {
  std::normal_distribution<double> g(0.0, 1.0);
  data::Region r;
  r.region_id = id;
  r.instances = ad::Tensor({n, dim});
  for (double& v : r.instances.storage()) v = g(rng);
  for (std::size_t i = 0; i < n; ++i) r.instance_ids.push_back(id + "_" + std::to_string(i));
  return r;
}

data::NestedBag random_bag(std::mt19937_64& rng, std::size_t regions, std::size_t dim) {
  data::NestedBag b;
  b.bag_id = "b";
  std::uniform_int_distribution<std::size_t> size(1, 6);
  for (std::size_t k = 0; k < regions; ++k) {
    b.regions.push_back(random_region(rng, size(rng), dim, "r" + std::to_string(k)));
  }
  return b;
}

data::NestedBag merged(const data::NestedBag& b) {
  data::NestedBag m = b;
  m.regions = {b.regions.front()};
  for (std::size_t k = 1; k < b.regions.size(); ++k) {
    const data::Region& r = b.regions[k];
    data::Region& out = m.regions.front();
    ad::Tensor t({out.size() + r.size(), out.dim()});
    std::copy(out.instances.storage().begin(), out.instances.storage().end(), t.storage().begin());
    std::copy(r.instances.storage().begin(), r.instances.storage().end(),
              t.storage().begin() + static_cast<std::ptrdiff_t>(out.instances.size()));
    out.instances = t;
    out.instance_ids.insert(out.instance_ids.end(), r.instance_ids.begin(), r.instance_ids.end());
  }
  return m;
}

oracle::Matrix rows_of(const ad::Tensor& t) {
  oracle::Matrix m;
  for (std::size_t i = 0; i < t.rows(); ++i) m.emplace_back(t.row(i).begin(), t.row(i).end());
  return m;
}

data::Dataset easy_dataset(std::uint64_t seed) {
  data::SynthSpec spec;
  spec.n_bags = 60;
  spec.split = {30, 15, 15};
  spec.min_bag_size = 30;
  spec.max_bag_size = 60;
  spec.seed = seed;
  data::Dataset ds = data::gen_synth_bags(spec);
  data::Standardizer::fit(ds.train).apply(ds);
  return ds;
}

TrainConfig fast_train() {
  TrainConfig c;
  c.psi_hidden = {16};
  c.n_att = 8;
  c.n_b = 32;
  c.max_epochs = 40;
  c.patience = 10;
  c.batch_size = 10;
  c.seed = 3;
  return c;
}

TEST(Names, ParseAggregatorAndFusion) {
  EXPECT_EQ(parse_aggregator("NMIA"), Aggregator::kNmia);
  EXPECT_EQ(parse_fusion("both"), Fusion::kBoth);
  EXPECT_THROW(parse_aggregator("transmil"), ConfigError);
  EXPECT_THROW(parse_fusion("late"), ConfigError);
}

TEST(GatedAttention, SingleInstanceGetsAllWeight) {
  std::mt19937_64 rng(1);
  const MilModel m = init_model(small_spec(Aggregator::kAbMil), 1);
  const ad::Tensor h = random_region(rng, 1, 3, "r").instances;
  const AttentionValue a = gated_attention(h, m.params, m.attention);
  ASSERT_EQ(a.weights.size(), 1u);
  EXPECT_EQ(a.weights[0], 1.0);
  for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(a.embedding[j], h[j], 1e-15);
}

TEST(GatedAttention, IdenticalInstancesAreUniform) {
  const MilModel m = init_model(small_spec(Aggregator::kAbMil), 2);
  const ad::Tensor h = ad::Tensor::matrix(4, 3, {1, 2, 3, 1, 2, 3, 1, 2, 3, 1, 2, 3});
  const AttentionValue a = gated_attention(h, m.params, m.attention);
  for (double w : a.weights) EXPECT_NEAR(w, 0.25, 1e-15);
}

TEST(GatedAttention, FixtureMatchesOracle) {
  GatedAttention att{"A", 3, 2};
  ad::TensorMap p;
  p[att.v()] = ad::Tensor::matrix(3, 2, {0.3, -0.2, 0.1, 0.4, -0.6, 0.5});
  p[att.u()] = ad::Tensor::matrix(3, 2, {0.2, 0.1, -0.3, 0.7, 0.05, -0.4});
  p[att.w()] = ad::Tensor::matrix(3, 1, {0.8, -1.1, 0.6});
  const ad::Tensor h = ad::Tensor::matrix(2, 2, {0.5, -1.0, 2.0, 0.25});
  const AttentionValue a = gated_attention(h, p, att);
  EXPECT_NEAR(a.weights[0], 0.531553751012475, 1e-14);
  EXPECT_NEAR(a.weights[1], 0.4684462489875249, 1e-14);
  EXPECT_NEAR(a.embedding[0], 1.2026693734812874, 1e-14);
  EXPECT_NEAR(a.embedding[1], -0.4144421887655938, 1e-14);
}

TEST(GatedAttention, MatchesLoopOracleOnRandomInputs) {
  std::mt19937_64 rng(3);
  const MilModel m = init_model(small_spec(Aggregator::kAbMil, 5), 4);
  for (int t = 0; t < 50; ++t) {
    const ad::Tensor h = random_region(rng, 1 + t % 9, 5, "r").instances;
    const AttentionValue a = gated_attention(h, m.params, m.attention);
    std::vector<double> w(m.params.at("A.w").storage().begin(), m.params.at("A.w").storage().end());
    const oracle::AttentionResult o = oracle::gated_attention(
        rows_of(h), rows_of(m.params.at("A.V")), rows_of(m.params.at("A.U")), w);
    for (std::size_t l = 0; l < a.weights.size(); ++l) EXPECT_NEAR(a.weights[l], o.weights[l], 1e-13);
    for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(a.embedding[j], o.embedding[j], 1e-13);
  }
}

TEST(GatedAttention, DuplicatingEveryInstanceKeepsEmbedding) {
  std::mt19937_64 rng(4);
  const MilModel m = init_model(small_spec(Aggregator::kAbMil), 5);
  const ad::Tensor h = random_region(rng, 3, 3, "r").instances;
  ad::Tensor twice({6, 3});
  for (std::size_t i = 0; i < 6; ++i) {
    std::copy(h.row(i % 3).begin(), h.row(i % 3).end(), twice.row(i).begin());
  }
  const AttentionValue a = gated_attention(h, m.params, m.attention);
  const AttentionValue b = gated_attention(twice, m.params, m.attention);
  for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(a.embedding[j], b.embedding[j], 1e-14);
  EXPECT_NEAR(b.weights[0], a.weights[0] / 2.0, 1e-15);
}

TEST(Pooling, MeanMaxAndVote) {
  const ad::Tensor h = ad::Tensor::matrix(3, 2, {1, -4, 3, 0, -1, 2});
  EXPECT_EQ(pool(h, PoolMode::kMean).storage(), (std::vector<double>{1.0, -2.0 / 3.0}));
  EXPECT_EQ(pool(h, PoolMode::kMax).storage(), (std::vector<double>{3.0, 2.0}));
  EXPECT_EQ(majority_vote({0.9}), 1.0);
  EXPECT_EQ(majority_vote({0.1}), 0.0);
  EXPECT_DOUBLE_EQ(majority_vote({0.6, 0.6, 0.4}), 2.0 / 3.0);
  EXPECT_THROW(majority_vote({}), DataError);
}

TEST(Model, SpecValidation) {
  ModelSpec s = small_spec(Aggregator::kVote);
  s.fusion = Fusion::kBoth;
  s.clinical_dim = 2;
  EXPECT_THROW(s.validate(), ConfigError);
  s = small_spec(Aggregator::kAbMil);
  s.fusion = Fusion::kClinical;
  EXPECT_THROW(s.validate(), ConfigError);
}

TEST(Model, FusionWidths) {
  ModelSpec s = small_spec(Aggregator::kAbMil, 8);
  s.clinical_dim = 8;
  s.fusion = Fusion::kBoth;
  EXPECT_EQ(init_model(s, 1).psi.in(), 16u);
  s.fusion = Fusion::kClinical;
  EXPECT_EQ(init_model(s, 1).psi.in(), 8u);
  s.fusion = Fusion::kImage;
  EXPECT_EQ(init_model(s, 1).psi.in(), 8u);
}

TEST(Model, ClinicalFusionNeedsClinicalVector) {
  std::mt19937_64 rng(5);
  ModelSpec s = small_spec(Aggregator::kMean);
  s.clinical_dim = 2;
  s.fusion = Fusion::kBoth;
  const MilModel m = init_model(s, 1);
  data::NestedBag b = random_bag(rng, 2, 3);
  EXPECT_THROW(predict(m, b), ConfigError);
  b.clinical = {0.5, 1.0};
  const double both = predict(m, b).score;
  EXPECT_GT(both, 0.0);
  EXPECT_LT(both, 1.0);
  b.clinical = {0.5};
  EXPECT_THROW(predict(m, b), DataError);
}

TEST(Model, RejectsWrongFeatureWidth) {
  std::mt19937_64 rng(6);
  const MilModel m = init_model(small_spec(Aggregator::kAbMil), 1);
  EXPECT_THROW(predict(m, random_bag(rng, 1, 4)), DataError);
}

TEST(Model, NmiaWithOneRegionEqualsAbMil) {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 50; ++t) {
    const MilModel abmil = init_model(small_spec(Aggregator::kAbMil), t);
    const MilModel nmia = init_model(small_spec(Aggregator::kNmia), t);
    const data::NestedBag b = random_bag(rng, 1, 3);
    const BagPrediction pa = predict(abmil, b), pn = predict(nmia, b);
    EXPECT_NEAR(pa.score, pn.score, 1e-9);
    EXPECT_EQ(pn.bag_attention, std::vector<double>{1.0});
  }
}

TEST(Model, PredictionsArePermutationInvariant) {
  std::mt19937_64 rng(8);
  for (Aggregator agg : {Aggregator::kMean, Aggregator::kMax, Aggregator::kAbMil,
                         Aggregator::kNmia, Aggregator::kVote}) {
    const MilModel m = init_model(small_spec(agg), 9);
    for (int t = 0; t < 20; ++t) {
      data::NestedBag b = random_bag(rng, 3, 3);
      const double before = predict(m, b).score;
      // Shuffle instances within each region and the region order.
      for (data::Region& r : b.regions) {
        std::vector<std::size_t> idx(r.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::shuffle(idx.begin(), idx.end(), rng);
        ad::Tensor x({r.size(), r.dim()});
        for (std::size_t i = 0; i < r.size(); ++i) {
          std::copy(r.instances.row(idx[i]).begin(), r.instances.row(idx[i]).end(), x.row(i).begin());
        }
        r.instances = x;
      }
      std::shuffle(b.regions.begin(), b.regions.end(), rng);
      EXPECT_NEAR(predict(m, b).score, before, 1e-9) << aggregator_name(agg);
    }
  }
}

TEST(Model, AttentionSumsToOne) {
  std::mt19937_64 rng(9);
  const MilModel m = init_model(small_spec(Aggregator::kNmia), 2);
  for (int t = 0; t < 30; ++t) {
    const BagPrediction p = predict(m, random_bag(rng, 1 + t % 5, 3));
    for (const auto& a : p.region_attention) {
      double s = 0.0;
      for (double w : a) s += w;
      EXPECT_NEAR(s, 1.0, 1e-12);
    }
    double s = 0.0;
    for (double w : p.bag_attention) s += w;
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(Model, TwoRegionNmiaMatchesOracle) {
  std::mt19937_64 rng(10);
  const MilModel m = init_model(small_spec(Aggregator::kNmia), 3);
  const data::NestedBag b = random_bag(rng, 2, 3);
  auto weights = [&](const std::string& p) {
    return std::vector<double>(m.params.at(p + ".w").storage().begin(),
                               m.params.at(p + ".w").storage().end());
  };
  oracle::Matrix z;
  for (const auto& r : b.regions) {
    z.push_back(oracle::gated_attention(rows_of(r.instances), rows_of(m.params.at("A.V")),
                                        rows_of(m.params.at("A.U")), weights("A"))
                    .embedding);
  }
  const oracle::AttentionResult top = oracle::gated_attention(
      z, rows_of(m.params.at("B.V")), rows_of(m.params.at("B.U")), weights("B"));
  const BagPrediction p = predict(m, b);
  for (std::size_t k = 0; k < 2; ++k) EXPECT_NEAR(p.bag_attention[k], top.weights[k], 1e-13);
  const ad::Tensor psi = ad::mlp_apply(m.psi, m.params, ad::Tensor({1, 3}, top.embedding));
  EXPECT_NEAR(p.score, 1.0 / (1.0 + std::exp(-psi[0])), 1e-13);
}

TEST(Model, AbMilTreatsRegionsAsOneBag) {
  std::mt19937_64 rng(11);
  const MilModel m = init_model(small_spec(Aggregator::kAbMil), 4);
  const data::NestedBag b = random_bag(rng, 3, 3);
  EXPECT_NEAR(predict(m, b).score, predict(m, merged(b)).score, 1e-12);
}

TEST(Model, BagPipelineGradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(12);
  for (Aggregator agg : {Aggregator::kMean, Aggregator::kMax, Aggregator::kAbMil,
                         Aggregator::kNmia, Aggregator::kVote}) {
    for (int t = 0; t < 5; ++t) {
      ModelSpec spec = small_spec(agg);
      if (agg != Aggregator::kVote) {
        spec.fusion = Fusion::kBoth;
        spec.clinical_dim = 2;
      }
      const MilModel m = init_model(spec, 20 + t);
      ad::Tape tape;
      ad::ParamBinder params(tape);
      ad::TensorMap inputs = m.params;
      std::vector<ad::Var> probs;
      std::vector<int> labels;
      for (int i = 0; i < 3; ++i) {
        data::NestedBag b = random_bag(rng, 2, 3);
        b.clinical = {0.3 * i, -0.5};
        const std::string tag = "b" + std::to_string(i);
        const BagVars v = bag_on_tape(params, m, tag, 2);
        probs.push_back(agg == Aggregator::kVote ? v.instance_probs : v.prob);
        bind_bag(inputs, m, tag, b);
        const std::size_t n = agg == Aggregator::kVote ? b.instance_count() : 1;
        labels.insert(labels.end(), n, i % 2);
      }
      loss::focal_tversky(tape, tape.concat(probs, ad::Axis::k0), labels, {0.9, 2.0});
      const auto r = ad::finite_diff_check(tape, inputs, 1e-4);
      EXPECT_TRUE(r.passed()) << aggregator_name(agg) << " " << r.worst_input << " "
                              << r.max_relative_error;
    }
  }
}

TEST(Model, JsonRoundTrip) {
  std::mt19937_64 rng(13);
  ModelSpec spec = small_spec(Aggregator::kNmia);
  spec.fusion = Fusion::kBoth;
  spec.clinical_dim = 2;
  const MilModel m = init_model(spec, 5);
  const MilModel back = model_from_json(nlohmann::json::parse(to_json(m).dump()));
  EXPECT_EQ(back.params, m.params);
  EXPECT_EQ(back.spec.aggregator, Aggregator::kNmia);
  data::NestedBag b = random_bag(rng, 2, 3);
  b.clinical = {1.0, 0.0};
  EXPECT_EQ(predict(back, b).score, predict(m, b).score);
  nlohmann::json broken = to_json(m);
  broken["params"].erase("B.V");
  EXPECT_THROW(model_from_json(broken), DataError);
}

TEST(Train, FrozenModelStopsAfterPatience) {
  TrainConfig c = fast_train();
  c.learning_rate = 0.0;
  c.patience = 30;
  c.max_epochs = 200;
  const data::Dataset ds = easy_dataset(2);
  const TrainResult r = train_mil(ds, c.model_spec(Aggregator::kAbMil, Fusion::kImage, 1, 0), c);
  EXPECT_EQ(r.history.size(), 31u);
  EXPECT_EQ(r.best_epoch, 1u);
  EXPECT_TRUE(r.early_stopped);
}

TEST(Train, LearnsMinorOverlap) {
  // Symmetric Tversky weights keep the small problem away from the
  // all-positive plateau.
  TrainConfig c = fast_train();
  c.alpha = 0.5;
  c.gamma = 1.0;
  c.learning_rate = 0.1;
  c.dropout = 0.0;
  c.max_epochs = 400;
  c.patience = 400;
  const data::Dataset ds = easy_dataset(4);
  const TrainResult r = train_mil(ds, c.model_spec(Aggregator::kAbMil, Fusion::kImage, 1, 0), c);
  EXPECT_GE(r.best_val_auc, 0.95);
  EXPECT_GE(evaluate_auc(r.model, ds.test), 0.8);
  for (const auto& h : r.history) EXPECT_TRUE(std::isfinite(h.train_loss));
}

TEST(Train, ReproducibleAndSeedSensitive) {
  TrainConfig c = fast_train();
  c.max_epochs = 4;
  const data::Dataset ds = easy_dataset(5);
  const ModelSpec spec = c.model_spec(Aggregator::kNmia, Fusion::kImage, 1, 0);
  const TrainResult a = train_mil(ds, spec, c);
  const TrainResult b = train_mil(ds, spec, c);
  EXPECT_EQ(a.model.params, b.model.params);
  EXPECT_EQ(history_csv(a.history), history_csv(b.history));
  const auto runs = train_runs(ds, spec, c, 2);
  ASSERT_EQ(runs.size(), c.runs);
  EXPECT_EQ(runs[0].model.params, a.model.params);
  EXPECT_NE(runs[1].model.params, a.model.params);
}

TEST(Train, NeedsBothClassesInValidation) {
  data::Dataset ds = easy_dataset(6);
  for (auto& b : ds.val) b.label = 0;
  const TrainConfig c = fast_train();
  EXPECT_THROW(train_mil(ds, c.model_spec(Aggregator::kMean, Fusion::kImage, 1, 0), c), DataError);
}

TEST(Train, ConfigValidation) {
  TrainConfig c = fast_train();
  c.dropout = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = fast_train();
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Train, HistoryCsv) {
  const std::vector<EpochRecord> h{{1, 0.5, 0.75}, {2, 0.25, 1.0}};
  EXPECT_EQ(history_csv(h), "epoch,train_loss,val_auc\n1,0.5,0.75\n2,0.25,1\n");
}

TEST(McDropout, ZeroRateIsDeterministicPrediction) {
  std::mt19937_64 rng(14);
  const MilModel m = init_model(small_spec(Aggregator::kAbMil), 6);
  const data::NestedBag b = random_bag(rng, 2, 3);
  EXPECT_EQ(eval::mc_dropout_predict(m, b, 7, 0.0, 1), predict(m, b).score);
  EXPECT_EQ(eval::mc_dropout_predict(m, b, 5, 0.05, 9), eval::mc_dropout_predict(m, b, 5, 0.05, 9));
  EXPECT_NE(eval::mc_dropout_predict(m, b, 5, 0.5, 9), predict(m, b).score);
  EXPECT_THROW(eval::mc_dropout_predict(m, b, 5, 1.0, 1), ConfigError);
  EXPECT_THROW(eval::mc_dropout_predict(m, b, 5, -0.1, 1), ConfigError);
}

TEST(McDropout, MeanIsConsistentWithIndependentPasses) {
  std::mt19937_64 rng(15);
  ModelSpec spec = small_spec(Aggregator::kAbMil);
  spec.psi_hidden = {32};
  const MilModel m = init_model(spec, 7);
  const data::NestedBag b = random_bag(rng, 1, 3);
  const double mean = eval::mc_dropout_predict(m, b, 1000, 0.05, 3);
  // Recompute 1000 passes with an unrelated generator.
  Rng other = make_rng(12345, 0);
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double s = predict(m, b, ad::Dropout{0.05, &other, 1}).score;
    sum += s;
    sq += s * s;
  }
  const double avg = sum / 1000.0;
  const double sd = std::sqrt(sq / 1000.0 - avg * avg);
  EXPECT_GT(sd, 0.0);
  EXPECT_NEAR(mean, avg, 3.0 * sd / std::sqrt(1000.0) * std::sqrt(2.0));
}

TEST(AttentionExport, SingleInstanceAndRejections) {
  data::NestedBag b;
  b.bag_id = "solo";
  std::mt19937_64 rng(16);
  b.regions.push_back(random_region(rng, 1, 3, "r0"));
  const auto e = eval::export_attention(init_model(small_spec(Aggregator::kAbMil), 1), b);
  ASSERT_EQ(e.rows.size(), 1u);
  EXPECT_EQ(e.rows[0].attention, 1.0);
  EXPECT_EQ(eval::attention_csv(e), "region_id,instance_id,attention\nr0,r0_0,1\n");
  for (Aggregator agg : {Aggregator::kMean, Aggregator::kMax, Aggregator::kVote}) {
    EXPECT_THROW(eval::export_attention(init_model(small_spec(agg), 1), b), ConfigError);
  }
}

TEST(AttentionExport, UniformInstancesGiveUniformRaster) {
  data::NestedBag b;
  b.bag_id = "flat";
  data::Region r;
  r.region_id = "r0";
  r.instances = ad::Tensor::matrix(4, 3, {1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1});
  r.instance_ids = {"a", "b", "c", "d"};
  b.regions.push_back(r);
  const std::vector<eval::TileCoord> tiles{{0, 0, 256}, {256, 0, 256}, {0, 256, 256}, {256, 256, 256}};
  const auto e = eval::export_attention(init_model(small_spec(Aggregator::kAbMil), 2), b, &tiles, 64);
  ASSERT_TRUE(e.heatmap.has_value());
  EXPECT_EQ(e.heatmap->width, 8u);
  EXPECT_EQ(e.heatmap->pixels, std::vector<std::uint8_t>(64, 255));
  std::vector<eval::TileCoord> short_tiles(3, {0, 0, 1});
  EXPECT_THROW(eval::export_attention(init_model(small_spec(Aggregator::kAbMil), 2), b, &short_tiles),
               DataError);
}

TEST(AttentionExport, NestedWeightsMatchOracleAndSumToOne) {
  std::mt19937_64 rng(17);
  const MilModel m = init_model(small_spec(Aggregator::kNmia), 8);
  const data::NestedBag b = random_bag(rng, 3, 3);
  const auto e = eval::export_attention(m, b);
  const BagPrediction p = predict(m, b);
  double total = 0.0;
  std::size_t row = 0;
  for (std::size_t k = 0; k < b.regions.size(); ++k) {
    const auto o = oracle::gated_attention(
        rows_of(b.regions[k].instances), rows_of(m.params.at("A.V")), rows_of(m.params.at("A.U")),
        std::vector<double>(m.params.at("A.w").storage().begin(), m.params.at("A.w").storage().end()));
    for (std::size_t i = 0; i < b.regions[k].size(); ++i, ++row) {
      EXPECT_NEAR(e.rows[row].instance_weight, o.weights[i], 1e-13);
      EXPECT_EQ(e.rows[row].region_weight, p.bag_attention[k]);
      total += e.rows[row].attention;
    }
  }
  EXPECT_NEAR(total, 1.0, 1e-9);
}

Grid singleton_grid() {
  Grid g;
  g.learning_rate = {1e-1};
  g.optimizer = {ad::OptimizerKind::kSgd};
  g.n_b = {16};
  g.dropout = {0.1};
  g.alpha = {0.6};
  g.gamma = {1.0};
  g.n_psi = {128};
  g.n_att = {128};
  return g;
}

TEST(Grid, FullGridSize) {
  EXPECT_EQ(Grid::full().size(), 4u * 2 * 5 * 5 * 4 * 3 * 4 * 4);
  EXPECT_EQ(Grid::full().size(), 38400u);
  const auto configs = singleton_grid().expand(TrainConfig{});
  ASSERT_EQ(configs.size(), 1u);
  EXPECT_EQ(configs[0].psi_hidden, (std::vector<std::size_t>{128, 64}));
}

TEST(Grid, RejectsEmptyAndInadmissibleLists) {
  const data::Dataset ds = easy_dataset(7);
  Grid g = singleton_grid();
  g.alpha.clear();
  EXPECT_THROW(grid_search(ds, Aggregator::kMean, Fusion::kImage, 1, 0, g, fast_train(), 1),
               ConfigError);
  g = singleton_grid();
  g.learning_rate = {0.05};
  EXPECT_THROW(g.validate(), ConfigError);
  EXPECT_THROW(grid_from_json(nlohmann::json{{"momentum", {0.9}}}), ConfigError);
  const Grid back = grid_from_json(to_json(Grid::full()));
  EXPECT_EQ(back.size(), 38400u);
  EXPECT_EQ(back.n_b.back(), data::kWholeBag);
}

TEST(Grid, TwoPointSearchIsRankedWithRunSpread) {
  const data::Dataset ds = easy_dataset(8);
  Grid g = singleton_grid();
  g.learning_rate = {1e-1, 1e-4};
  TrainConfig base = fast_train();
  base.max_epochs = 15;
  base.runs = 5;
  const auto ranked = grid_search(ds, Aggregator::kMean, Fusion::kImage, 1, 0, g, base, 2);
  ASSERT_EQ(ranked.size(), 2u);
  for (const GridEntry& e : ranked) {
    ASSERT_EQ(e.val_aucs.size(), 5u);
    EXPECT_EQ(e.val.mean, eval::spread(e.val_aucs).mean);
    EXPECT_GE(e.val.std, 0.0);
  }
  EXPECT_GE(ranked[0].val.mean, ranked[1].val.mean);
  const auto j = to_json(ranked);
  EXPECT_EQ(j[0]["rank"], 1);
  EXPECT_EQ(j.size(), 2u);
}

TEST(Train, ConfigJsonRoundTripAndOverrides) {
  TrainConfig c = fast_train();
  c.n_b = data::kWholeBag;
  c.optimizer = ad::OptimizerKind::kAdam;
  const TrainConfig back = train_config_from_json(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
  EXPECT_EQ(to_json(c)["n_b"], "L");
  const TrainConfig over = train_config_from_json({{"learning_rate", 0.5}}, c);
  EXPECT_EQ(over.learning_rate, 0.5);
  EXPECT_EQ(over.n_att, c.n_att);
  EXPECT_THROW(train_config_from_json({{"lr", 0.5}}), ConfigError);
  EXPECT_THROW(train_config_from_json({{"dropout", "high"}}), ConfigError);
  EXPECT_THROW(train_config_from_json({{"dropout", 1.5}}), ConfigError);
}

}  // namespace
}  // namespace nmil::mil
