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

#include "nmil/mil/grid.hpp"

#include <algorithm>
#include <string>

#include "nmil/common/error.hpp"
#include "nmil/common/parallel.hpp"

namespace nmil::mil {
namespace {

template <typename T>
void check_list(const std::vector<T>& values, const std::vector<T>& allowed, const char* name) {
  if (values.empty()) throw ConfigError(std::string("grid list '") + name + "' is empty");
  for (const T& v : values) {
    if (std::find(allowed.begin(), allowed.end(), v) == allowed.end()) {
      throw ConfigError(std::string("grid value for '") + name + "' is outside the admissible list");
    }
  }
}

template <typename T>
std::vector<T> list(const nlohmann::json& j, const char* key, const std::vector<T>& fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<std::vector<T>>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("grid key '") + key + "' must be a list");
  }
}

}  // namespace

Grid Grid::full() {
  Grid g;
  g.learning_rate = {1e-1, 1e-2, 1e-3, 1e-4};
  g.optimizer = {ad::OptimizerKind::kSgd, ad::OptimizerKind::kAdam};
  g.n_b = {4, 16, 64, 256, data::kWholeBag};
  g.dropout = {0.1, 0.2, 0.3, 0.4, 0.5};
  g.alpha = {0.0, 0.3, 0.6, 0.9};
  g.gamma = {0.5, 1.0, 2.0};
  g.n_psi = {128, 512, 1024, 4096};
  g.n_att = {128, 512, 1024, 4096};
  return g;
}

std::size_t Grid::size() const noexcept {
  return learning_rate.size() * optimizer.size() * n_b.size() * dropout.size() *
         alpha.size() * gamma.size() * n_psi.size() * n_att.size();
}

void Grid::validate() const {
  const Grid t = full();
  check_list(learning_rate, t.learning_rate, "learning_rate");
  check_list(optimizer, t.optimizer, "optimizer");
  check_list(n_b, t.n_b, "n_b");
  check_list(dropout, t.dropout, "dropout");
  check_list(alpha, t.alpha, "alpha");
  check_list(gamma, t.gamma, "gamma");
  check_list(n_psi, t.n_psi, "n_psi");
  check_list(n_att, t.n_att, "n_att");
}

std::vector<TrainConfig> Grid::expand(const TrainConfig& base) const {
  validate();
  std::vector<TrainConfig> out;
  out.reserve(size());
  for (double lr : learning_rate)
    for (ad::OptimizerKind opt : optimizer)
      for (std::size_t nb : n_b)
        for (double dr : dropout)
          for (double a : alpha)
            for (double g : gamma)
              for (std::size_t np : n_psi)
                for (std::size_t na : n_att) {
                  TrainConfig c = base;
                  c.learning_rate = lr;
                  c.optimizer = opt;
                  c.n_b = nb;
                  c.dropout = dr;
                  c.alpha = a;
                  c.gamma = g;
                  c.psi_hidden = {np, np / 2};
                  c.n_att = na;
                  out.push_back(c);
                }
  return out;
}

Grid grid_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("grid must be a JSON object");
  const Grid t = Grid::full();
  Grid g;
  g.learning_rate = list(j, "learning_rate", t.learning_rate);
  g.optimizer.clear();
  for (const std::string& name : list<std::string>(j, "optimizer", {"sgd", "adam"})) {
    g.optimizer.push_back(parse_optimizer(name));
  }
  if (j.contains("n_b")) {
    if (!j["n_b"].is_array()) throw ConfigError("grid key 'n_b' must be a list");
    for (const auto& v : j["n_b"]) {
      if (v.is_string() && v.get<std::string>() == "L") g.n_b.push_back(data::kWholeBag);
      else if (v.is_number_unsigned()) g.n_b.push_back(v.get<std::size_t>());
      else throw ConfigError("grid n_b entries must be integers or \"L\"");
    }
  } else {
    g.n_b = t.n_b;
  }
  g.dropout = list(j, "dropout", t.dropout);
  g.alpha = list(j, "alpha", t.alpha);
  g.gamma = list(j, "gamma", t.gamma);
  g.n_psi = list(j, "n_psi", t.n_psi);
  g.n_att = list(j, "n_att", t.n_att);
  for (const auto& [key, value] : j.items()) {
    static const char* known[] = {"learning_rate", "optimizer", "n_b", "dropout",
                                  "alpha", "gamma", "n_psi", "n_att"};
    if (std::none_of(std::begin(known), std::end(known), [&](const char* k) { return key == k; })) {
      throw ConfigError("unknown grid key '" + key + "'");
    }
  }
  g.validate();
  return g;
}

nlohmann::json to_json(const Grid& g) {
  nlohmann::json opt = nlohmann::json::array(), nb = nlohmann::json::array();
  for (auto o : g.optimizer) opt.push_back(optimizer_name(o));
  for (auto n : g.n_b) nb.push_back(n == data::kWholeBag ? nlohmann::json("L") : nlohmann::json(n));
  return {{"learning_rate", g.learning_rate}, {"optimizer", opt}, {"n_b", nb},
          {"dropout", g.dropout}, {"alpha", g.alpha}, {"gamma", g.gamma},
          {"n_psi", g.n_psi}, {"n_att", g.n_att}};
}

std::vector<GridEntry> grid_search(const data::Dataset& ds, Aggregator aggregator,
                                   Fusion fusion, std::size_t feature_dim,
                                   std::size_t clinical_dim, const Grid& grid,
                                   const TrainConfig& base, std::size_t jobs) {
  if (grid.size() == 0) throw ConfigError("grid search over an empty grid");
  base.validate();
  const std::vector<TrainConfig> configs = grid.expand(base);
  const std::size_t runs = base.runs;
  std::vector<double> aucs(configs.size() * runs, 0.0);
  parallel_for(aucs.size(), jobs, [&](std::size_t k) {
    TrainConfig c = configs[k / runs];
    c.seed = base.seed + k % runs;
    const ModelSpec spec = c.model_spec(aggregator, fusion, feature_dim, clinical_dim);
    aucs[k] = train_mil(ds, spec, c).best_val_auc;
  });
  std::vector<GridEntry> entries;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    GridEntry e;
    e.config = configs[i];
    e.val_aucs.assign(aucs.begin() + static_cast<std::ptrdiff_t>(i * runs),
                      aucs.begin() + static_cast<std::ptrdiff_t>((i + 1) * runs));
    e.val = eval::spread(e.val_aucs);
    entries.push_back(std::move(e));
  }
  std::stable_sort(entries.begin(), entries.end(),
                   [](const GridEntry& a, const GridEntry& b) { return a.val.mean > b.val.mean; });
  return entries;
}

nlohmann::json to_json(const std::vector<GridEntry>& ranked) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    const GridEntry& e = ranked[i];
    rows.push_back({{"rank", i + 1},
                    {"config", to_json(e.config)},
                    {"val_aucs", e.val_aucs},
                    {"mean", e.val.mean},
                    {"std", e.val.std},
                    {"best", e.val.best}});
  }
  return rows;
}

}  // namespace nmil::mil
