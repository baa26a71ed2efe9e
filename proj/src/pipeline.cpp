// Copyright 2026 The courtlens Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "courtlens/pipeline.hpp"

#include "courtlens/dimred.hpp"
#include "courtlens/explain.hpp"
#include "courtlens/json_io.hpp"
#include "courtlens/linalg.hpp"
#include "courtlens/model.hpp"
#include "courtlens/stats.hpp"
#include "courtlens/svg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace courtlens {

using nlohmann::json;
namespace fs = std::filesystem;

std::string tool_version() { return COURTLENS_VERSION; }

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{
      "name", "description", "input", "target", "features", "task", "model", "alpha", "epsilon", "power", "link",
      "max_depth", "min_leaf", "hidden", "dropout", "epochs", "batch_size", "learning_rate", "poly_degree",
      "poly_compare", "scale", "impute", "test_fraction", "reduce", "reduce_k", "reduce_neighbors", "explain",
      "explain_row", "explain_class", "background_rows", "shapley_permutations", "importance_repeats", "pdp_points",
      "pdp_features", "lime_samples", "anova_value", "anova_group", "anova_alpha", "plots", "out_dir", "seed"};
  return keys;
}

template <typename T>
T get_or(const json& doc, const std::string& key, T fallback) {
  if (!doc.contains(key) || doc.at(key).is_null()) return fallback;
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::config, "key '" + key + "' has the wrong type");
  }
}

void check_member(const std::string& key, const std::string& value, const std::vector<std::string>& allowed) {
  if (std::find(allowed.begin(), allowed.end(), value) == allowed.end()) {
    std::string list;
    for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
    throw Error(ErrorCode::config, key + " '" + value + "' is not one of: " + list);
  }
}

const std::vector<std::string> kModels{"ols", "ridge", "lasso", "huber", "tweedie", "tree", "mlp"};
const std::vector<std::string> kReducers{"none", "pca", "mds", "isomap", "tsne", "lda"};
const std::vector<std::string> kExplainers{"weights", "shapley", "permutation", "pdp", "feature_effect", "lime"};

bool is_linear(const std::string& model) { return model != "tree" && model != "mlp"; }

}  // namespace

PipelineConfig parse_config(const json& doc, const fs::path& base_dir) {
  if (!doc.is_object()) throw Error(ErrorCode::config, "config must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    if (!known_keys().count(key)) throw Error(ErrorCode::config, "unknown config key '" + key + "'");
    if (value.is_object()) throw Error(ErrorCode::config, "config is flat; key '" + key + "' holds an object");
  }
  PipelineConfig c;
  c.raw = doc;
  const auto input = get_or<std::string>(doc, "input", "");
  if (input.empty()) throw Error(ErrorCode::config, "config needs an 'input' CSV path");
  c.input = fs::path(input).is_absolute() ? fs::path(input) : base_dir / input;
  c.target = get_or<std::string>(doc, "target", "");
  if (c.target.empty()) throw Error(ErrorCode::config, "config needs a 'target' column");
  c.features = get_or<std::vector<std::string>>(doc, "features", {});
  if (std::find(c.features.begin(), c.features.end(), c.target) != c.features.end())
    throw Error(ErrorCode::config, "target '" + c.target + "' is also listed as a feature");
  c.task = get_or<std::string>(doc, "task", "");
  if (!c.task.empty()) check_member("task", c.task, {"regression", "classification"});

  c.model = get_or<std::string>(doc, "model", "ols");
  check_member("model", c.model, kModels);
  c.alpha = get_or<double>(doc, "alpha", -1.0);
  c.epsilon = get_or<double>(doc, "epsilon", 1.35);
  c.power = get_or<double>(doc, "power", 1.5);
  c.link = get_or<std::string>(doc, "link", "");
  if (!c.link.empty()) check_member("link", c.link, {"identity", "log"});
  c.max_depth = get_or<int>(doc, "max_depth", 4);
  c.min_leaf = get_or<Index>(doc, "min_leaf", 1);
  c.hidden = get_or<std::vector<Index>>(doc, "hidden", {});
  c.dropout = get_or<std::vector<double>>(doc, "dropout", {});
  c.epochs = get_or<int>(doc, "epochs", -1);
  c.batch_size = get_or<Index>(doc, "batch_size", -1);
  c.learning_rate = get_or<double>(doc, "learning_rate", -1.0);

  c.poly_degree = get_or<int>(doc, "poly_degree", 1);
  if (c.poly_degree != 1 && c.poly_degree != 2) throw Error(ErrorCode::config, "poly_degree must be 1 or 2");
  c.poly_compare = get_or<std::vector<int>>(doc, "poly_compare", {});
  for (int d : c.poly_compare)
    if (d != 1 && d != 2) throw Error(ErrorCode::config, "poly_compare degrees must be 1 or 2");

  c.scale = get_or<bool>(doc, "scale", true);
  c.impute = parse_impute_strategy(get_or<std::string>(doc, "impute", "drop_rows"));
  c.test_fraction = get_or<double>(doc, "test_fraction", 0.2);
  if (!(c.test_fraction > 0.0 && c.test_fraction < 1.0)) throw Error(ErrorCode::config, "test_fraction must lie in (0, 1)");

  c.reduce = get_or<std::string>(doc, "reduce", "none");
  check_member("reduce", c.reduce, kReducers);
  c.reduce_k = get_or<Index>(doc, "reduce_k", 2);
  c.reduce_neighbors = get_or<Index>(doc, "reduce_neighbors", 8);

  c.explain = get_or<std::vector<std::string>>(doc, "explain", {});
  for (const auto& e : c.explain) check_member("explain", e, kExplainers);
  c.explain_row = get_or<Index>(doc, "explain_row", 0);
  c.explain_class = get_or<Index>(doc, "explain_class", 0);
  c.background_rows = get_or<Index>(doc, "background_rows", 50);
  c.shapley_permutations = get_or<int>(doc, "shapley_permutations", 200);
  c.importance_repeats = get_or<int>(doc, "importance_repeats", 5);
  c.pdp_points = get_or<int>(doc, "pdp_points", 20);
  c.pdp_features = get_or<Index>(doc, "pdp_features", 3);
  c.lime_samples = get_or<int>(doc, "lime_samples", 500);

  c.anova_value = get_or<std::string>(doc, "anova_value", "");
  c.anova_group = get_or<std::string>(doc, "anova_group", "");
  if (c.anova_value.empty() != c.anova_group.empty())
    throw Error(ErrorCode::config, "anova_value and anova_group must be given together");
  c.anova_alpha = get_or<double>(doc, "anova_alpha", 0.05);

  c.plots = get_or<std::vector<std::string>>(doc, "plots", {});
  for (const auto& p : c.plots) check_member("plots", p, plot_kinds());
  c.out_dir = get_or<std::string>(doc, "out_dir", "out");
  c.seed = get_or<std::uint64_t>(doc, "seed", 0);
  return c;
}

PipelineConfig load_config(const fs::path& path) {
  return parse_config(read_json(path), path.has_parent_path() ? path.parent_path() : fs::path("."));
}

void apply_overrides(PipelineConfig& cfg, std::optional<std::uint64_t> seed, std::optional<fs::path> out_dir) {
  if (seed) {
    cfg.seed = *seed;
    cfg.raw["seed"] = *seed;
  }
  if (out_dir) cfg.out_dir = *out_dir;
}

StageError::StageError(std::string stage, const Error& cause)
    : Error(cause.code(), "[" + stage + "] " + cause.detail()), stage_(std::move(stage)) {}

// ---------------------------------------------------------------------------
// Shared helpers
// ---------------------------------------------------------------------------

namespace {

// Independent stream per purpose, all derived from the config seed.
std::uint64_t derived_seed(std::uint64_t seed, std::string_view purpose) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char ch : purpose) h = (h ^ static_cast<unsigned char>(ch)) * 0x100000001b3ULL;
  return Rng(seed ^ h).next_u64();
}

fs::path file(const PipelineConfig& cfg, const std::string& name) { return cfg.out_dir / name; }

Table select_columns(const Table& t, const std::vector<std::string>& names) {
  std::vector<Index> idx;
  std::vector<ColumnSpec> spec;
  for (const auto& n : names) {
    idx.push_back(t.index_of(n));
    spec.push_back(t.columns()[static_cast<std::size_t>(idx.back())]);
  }
  std::vector<std::vector<Cell>> rows;
  rows.reserve(static_cast<std::size_t>(t.n_rows()));
  for (Index i = 0; i < t.n_rows(); ++i) {
    std::vector<Cell> r;
    for (Index j : idx) r.push_back(t.at(i, j));
    rows.push_back(std::move(r));
  }
  return Table(std::move(spec), std::move(rows));
}

std::vector<std::string> first_appearance(const std::vector<std::string>& labels) {
  std::vector<std::string> out;
  for (const auto& l : labels)
    if (std::find(out.begin(), out.end(), l) == out.end()) out.push_back(l);
  return out;
}

json attribution_json(const Attribution& a) {
  json j{{"method", a.method}, {"feature_names", a.feature_names}, {"values", to_json_array(a.values)},
         {"baseline", a.baseline}};
  if (a.uncertainty) j["uncertainty"] = to_json_array(*a.uncertainty);
  if (a.lower) j["lower"] = to_json_array(*a.lower);
  if (a.upper) j["upper"] = to_json_array(*a.upper);
  return j;
}

json summary_json(const TableSummary& s) {
  json cols = json::array();
  for (const auto& c : s.columns)
    cols.push_back({{"name", c.name}, {"count", c.count}, {"mean", c.mean}, {"std", c.std}, {"min", c.min}, {"max", c.max}});
  return {{"n_rows", s.n_rows}, {"columns", cols}, {"correlation", to_json_rows(s.correlation)}};
}

struct Design {
  Matrix X;
  Vector y;
  std::vector<std::string> names;
};

// Features, target encoding and polynomial expansion as recorded by ingest.
Design design(const Table& t, const json& ingest, int degree) {
  const auto features = ingest.at("features").get<std::vector<std::string>>();
  const auto target = ingest.at("target").get<std::string>();
  Design d;
  d.X = expand_polynomial(t.to_matrix(features), degree);
  d.names = polynomial_names(features, degree);
  if (ingest.at("task") == "classification") {
    const auto classes = ingest.at("classes").get<std::vector<std::string>>();
    const auto labels = t.labels(target);
    d.y.resize(static_cast<Index>(labels.size()));
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const auto it = std::find(classes.begin(), classes.end(), labels[i]);
      if (it == classes.end()) throw Error(ErrorCode::schema, "label '" + labels[i] + "' was not seen at ingest");
      d.y(static_cast<Index>(i)) = static_cast<double>(it - classes.begin());
    }
  } else {
    d.y = t.column(target);
  }
  return d;
}

// ---------------------------------------------------------------------------
// Model fitting
// ---------------------------------------------------------------------------

FittedModel fit_model(const PipelineConfig& cfg, const Design& train, const Design& test, bool classification,
                      Index n_classes) {
  json params{{"model", cfg.model}};
  const std::uint64_t seed = derived_seed(cfg.seed, "fit");
  if (is_linear(cfg.model)) {
    if (classification) throw Error(ErrorCode::config, "model '" + cfg.model + "' needs a numeric target");
    LinearModel lm;
    if (cfg.model == "ols") {
      lm.fit = fit_ols(train.X, train.y);
    } else if (cfg.model == "ridge") {
      const double alpha = cfg.alpha >= 0.0 ? cfg.alpha : 1.0;
      params["alpha"] = alpha;
      lm.fit = fit_ridge(train.X, train.y, alpha);
    } else if (cfg.model == "lasso") {
      const double alpha = cfg.alpha >= 0.0 ? cfg.alpha : 0.01;
      params["alpha"] = alpha;
      lm.fit = fit_lasso(train.X, train.y, alpha);
    } else if (cfg.model == "huber") {
      const double alpha = cfg.alpha >= 0.0 ? cfg.alpha : 1e-4;
      params["alpha"] = alpha;
      params["epsilon"] = cfg.epsilon;
      lm.fit = fit_huber(train.X, train.y, cfg.epsilon, alpha);
    } else {
      const double alpha = cfg.alpha >= 0.0 ? cfg.alpha : 0.0;
      lm.glm.power = cfg.power;
      lm.glm.link = cfg.link.empty() ? (cfg.power > 0.0 ? Link::log : Link::identity)
                                     : (cfg.link == "log" ? Link::log : Link::identity);
      params["alpha"] = alpha;
      params["power"] = cfg.power;
      params["link"] = lm.glm.link == Link::log ? "log" : "identity";
      lm.fit = fit_tweedie(train.X, train.y, lm.glm, alpha);
    }
    lm.fit.feature_names = train.names;
    return FittedModel(cfg.model, lm, train.names, params);
  }
  const TreeTask task = classification ? TreeTask::classification : TreeTask::regression;
  if (cfg.model == "tree") {
    params["max_depth"] = cfg.max_depth;
    params["min_leaf"] = cfg.min_leaf;
    return FittedModel("tree", fit_tree(train.X, train.y, task, cfg.max_depth, cfg.min_leaf), train.names, params);
  }

  const Index d = train.X.cols();
  MlpSpec spec;
  if (classification) {
    spec = role_classifier_spec(seed);
    spec.layer_sizes = {d, 40, 30, n_classes};
  } else {
    spec = regression_mlp_spec(d, seed);
  }
  if (!cfg.hidden.empty()) {
    spec.layer_sizes = {d};
    for (Index h : cfg.hidden) spec.layer_sizes.push_back(h);
    spec.layer_sizes.push_back(classification ? n_classes : 1);
    spec.dropout_rates.assign(cfg.hidden.size(), 0.0);
  }
  if (!cfg.dropout.empty()) spec.dropout_rates = cfg.dropout;
  if (spec.dropout_rates.size() + 2 != spec.layer_sizes.size())
    throw Error(ErrorCode::config, "dropout needs one rate per hidden layer");
  if (cfg.epochs > 0) spec.epochs = cfg.epochs;
  if (cfg.batch_size > 0) spec.batch_size = cfg.batch_size;
  if (cfg.learning_rate > 0.0) spec.learning_rate = cfg.learning_rate;
  params["layer_sizes"] = spec.layer_sizes;
  params["dropout"] = spec.dropout_rates;
  params["epochs"] = spec.epochs;
  params["batch_size"] = spec.batch_size;
  params["learning_rate"] = spec.learning_rate;
  auto trained = mlp_train(train.X, train.y, spec, Validation{test.X, test.y});
  FittedModel m("mlp", std::move(trained.network), train.names, params);
  m.train_report = std::move(trained.report);
  return m;
}

json metrics_json(const FittedModel& m, const Design& train, const Design& test, bool classification) {
  json j;
  if (classification) {
    j["train_accuracy"] = accuracy(train.y, m.predict_label(train.X));
    j["test_accuracy"] = accuracy(test.y, m.predict_label(test.X));
    j["accuracy"] = j["test_accuracy"];
  } else {
    const Vector p_train = m.predict_label(train.X);
    const Vector p_test = m.predict_label(test.X);
    j["train_r2"] = r2_score(train.y, p_train);
    j["test_r2"] = r2_score(test.y, p_test);
    j["r2"] = j["test_r2"];
    j["test_rmse"] = std::sqrt((test.y - p_test).squaredNorm() / static_cast<double>(test.y.size()));
  }
  return j;
}

json model_summary(const FittedModel& m) {
  json s{{"kind", m.kind()}, {"n_features", m.n_features()}};
  if (const LinearFit* f = m.linear_fit()) {
    json w = json::object();
    for (Index j = 0; j < f->weights.size(); ++j) w[m.feature_names()[static_cast<std::size_t>(j)]] = f->weights(j);
    s["weights"] = w;
    s["intercept"] = f->intercept;
    if (f->weight_stderr) s["weight_stderr"] = to_json_array(*f->weight_stderr);
    s["converged"] = f->converged;
    s["iterations"] = f->iterations;
    s["jitter_applied"] = f->jitter_applied;
    if (m.kind() == "huber") s["scale"] = f->scale;
    if (m.kind() == "tweedie") s["dispersion"] = f->dispersion;
  } else if (const auto* t = std::get_if<TreeModel>(&m.body())) {
    s["depth"] = t->depth();
    s["n_leaves"] = t->n_leaves();
    s["feature_importance"] = to_json_array(tree_feature_importance(*t));
  } else if (m.train_report) {
    s["final_train_loss"] = m.train_report->train_loss.back();
    if (!m.train_report->validation_loss.empty()) s["final_validation_loss"] = m.train_report->validation_loss.back();
  }
  return s;
}

struct Splits {
  json ingest;
  Table train;
  Table test;
};

Splits load_splits(const PipelineConfig& cfg) {
  return {read_json(file(cfg, "ingest.json")), load_csv(file(cfg, "train.csv")), load_csv(file(cfg, "test.csv"))};
}

std::string file_stem(const std::string& s) {
  std::string out;
  for (char c : s) out += std::isalnum(static_cast<unsigned char>(c)) ? c : '_';
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Stages
// ---------------------------------------------------------------------------

void stage_ingest(const PipelineConfig& cfg) {
  const Table raw = load_csv(cfg.input);
  if (!raw.find(cfg.target)) throw Error(ErrorCode::schema, "target column '" + cfg.target + "' not found");
  std::vector<std::string> features = cfg.features;
  if (features.empty())
    for (const auto& n : raw.numeric_names())
      if (n != cfg.target) features.push_back(n);
  for (const auto& f : features) {
    const Index j = raw.index_of(f);
    if (raw.columns()[static_cast<std::size_t>(j)].kind != ColumnKind::numeric)
      throw Error(ErrorCode::schema, "feature '" + f + "' is not numeric");
  }
  if (features.empty()) throw Error(ErrorCode::schema, "no feature columns");

  std::vector<std::string> used = features;
  for (const auto& extra : {cfg.target, cfg.anova_value, cfg.anova_group})
    if (!extra.empty() && std::find(used.begin(), used.end(), extra) == used.end()) used.push_back(extra);
  const Table clean = drop_or_impute(select_columns(raw, used), cfg.impute);
  if (clean.n_rows() < 4) throw Error(ErrorCode::insufficient_data, "fewer than 4 usable rows");

  const auto& target_spec = clean.columns()[static_cast<std::size_t>(clean.index_of(cfg.target))];
  const std::string task = !cfg.task.empty() ? cfg.task
                           : target_spec.kind == ColumnKind::categorical ? "classification"
                                                                         : "regression";

  auto [train, test] = train_test_split(clean, {cfg.test_fraction, derived_seed(cfg.seed, "split")});
  if (train.n_rows() < 2 || test.n_rows() < 2) throw Error(ErrorCode::insufficient_data, "split leaves fewer than 2 rows on a side");
  json scaling = json::object();
  json constant = json::array();
  if (cfg.scale) {
    ScaledTable st = min_max_scale(train, features);
    test = apply_scaling(test, st.params);
    train = std::move(st.table);
    for (const auto& [name, range] : st.params.range) scaling[name] = {range.first, range.second};
    constant = st.constant_columns;
  }
  write_csv(clean, file(cfg, "clean.csv"));
  write_csv(train, file(cfg, "train.csv"));
  write_csv(test, file(cfg, "test.csv"));

  json j{{"input_rows", raw.n_rows()},
         {"clean_rows", clean.n_rows()},
         {"n_train", train.n_rows()},
         {"n_test", test.n_rows()},
         {"features", features},
         {"target", cfg.target},
         {"task", task},
         {"impute", cfg.raw.value("impute", "drop_rows")},
         {"scaling", scaling},
         {"constant_columns", constant},
         {"summary", summary_json(describe(select_columns(clean, features)))}};
  if (task == "classification") j["classes"] = first_appearance(clean.labels(cfg.target));
  write_json(j, file(cfg, "ingest.json"));
}

void stage_reduce(const PipelineConfig& cfg) {
  if (cfg.reduce == "none") {
    write_json({{"method", "none"}}, file(cfg, "reduce.json"));
    return;
  }
  const json ingest = read_json(file(cfg, "ingest.json"));
  const Table train = load_csv(file(cfg, "train.csv"));
  const Design d = design(train, ingest, 1);
  const Index n = d.X.rows(), p = d.X.cols();
  const Index k = cfg.reduce_k;
  if (k < 1 || k > p) throw Error(ErrorCode::config, "reduce_k must lie in [1, feature count]");

  const Projection full = pca_fit(d.X, std::min(p, n - 1));
  json j{{"method", cfg.reduce}, {"k", k}, {"explained_variance_ratio", to_json_array(full.explained_variance_ratio)}};
  Matrix coords;
  if (cfg.reduce == "pca") {
    coords = pca_transform(pca_fit(d.X, k), d.X);
  } else if (cfg.reduce == "mds") {
    const Embedding e = mds(pairwise_distances(d.X), k);
    coords = e.coords;
    if (e.stress) j["stress"] = *e.stress;
  } else if (cfg.reduce == "isomap") {
    const Embedding e = isomap(d.X, k, cfg.reduce_neighbors);
    coords = e.coords;
    if (e.stress) j["stress"] = *e.stress;
  } else if (cfg.reduce == "tsne") {
    TsneConfig tc = tsne_defaults(n, derived_seed(cfg.seed, "tsne"));
    tc.out_dim = k;
    const Embedding e = tsne(d.X, tc);
    coords = e.coords;
    j["kl_initial"] = e.objective_trace.front();
    j["kl_final"] = e.objective_trace.back();
  } else {
    if (ingest.at("task") != "classification") throw Error(ErrorCode::config, "lda needs a categorical target");
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = static_cast<int>(d.y(i));
    const LdaModel lda = lda_fit(d.X, labels, k);
    coords = lda_transform(lda, d.X);
    j["eigenvalues"] = to_json_array(lda.eigenvalues);
  }
  j["embedding"] = to_json_rows(coords);
  if (ingest.at("task") == "classification") j["labels"] = train.labels(cfg.target);
  write_json(j, file(cfg, "reduce.json"));
}

void stage_fit(const PipelineConfig& cfg) {
  const Splits s = load_splits(cfg);
  const bool classification = s.ingest.at("task") == "classification";
  const Index n_classes = classification ? static_cast<Index>(s.ingest.at("classes").size()) : 0;

  const Design train = design(s.train, s.ingest, cfg.poly_degree);
  const Design test = design(s.test, s.ingest, cfg.poly_degree);
  const FittedModel m = fit_model(cfg, train, test, classification, n_classes);

  json j{{"model", cfg.model},
         {"task", s.ingest.at("task")},
         {"degree", cfg.poly_degree},
         {"feature_names", train.names},
         {"metrics", metrics_json(m, train, test, classification)},
         {"summary", model_summary(m)}};
  if (m.train_report) {
    const TrainReport& r = *m.train_report;
    j["training"] = {{"train_loss", r.train_loss},
                     {"validation_loss", r.validation_loss},
                     {"train_accuracy", r.train_accuracy},
                     {"validation_accuracy", r.validation_accuracy}};
  }
  if (!cfg.poly_compare.empty()) {
    if (classification) throw Error(ErrorCode::config, "poly_compare needs a numeric target");
    json cmp = json::array();
    for (int degree : cfg.poly_compare) {
      const Design tr = design(s.train, s.ingest, degree);
      const Design te = design(s.test, s.ingest, degree);
      const FittedModel md = fit_model(cfg, tr, te, false, 0);
      json row = metrics_json(md, tr, te, false);
      row["degree"] = degree;
      row["n_features"] = tr.X.cols();
      cmp.push_back(row);
    }
    j["poly_compare"] = cmp;
  }
  write_json(to_json(m), file(cfg, "model.json"));
  write_json(j, file(cfg, "fit.json"));
}

void stage_explain(const PipelineConfig& cfg) {
  const Splits s = load_splits(cfg);
  const json fit_doc = read_json(file(cfg, "fit.json"));
  const FittedModel model = model_from_json(read_json(file(cfg, "model.json")));
  const int degree = fit_doc.at("degree").get<int>();
  const Design train = design(s.train, s.ingest, degree);
  const Design test = design(s.test, s.ingest, degree);
  const bool classification = model.is_classifier();
  const Index output = classification ? cfg.explain_class : 0;
  const PredictFn f = predictor(model, output);

  if (cfg.explain_row < 0 || cfg.explain_row >= test.X.rows())
    throw Error(ErrorCode::config, "explain_row is outside the test split");
  const Vector x = test.X.row(cfg.explain_row).transpose();
  const Matrix background = train.X.topRows(std::min(cfg.background_rows, train.X.rows()));
  Vector y_test = test.y;
  if (classification) y_test = (test.y.array() == static_cast<double>(output)).cast<double>();

  const auto wants = [&](const std::string& e) { return std::find(cfg.explain.begin(), cfg.explain.end(), e) != cfg.explain.end(); };
  json j{{"explain_row", cfg.explain_row}, {"output", output}, {"prediction", f(x.transpose())(0)}};
  if (classification) j["output_class"] = s.ingest.at("classes").at(static_cast<std::size_t>(output));
  const LinearFit* lin = model.linear_fit();

  if (wants("weights")) {
    if (lin) j["weights"] = attribution_json(standardized_coefficients(*lin, train.X, train.y));
    else j["weights"] = {{"unavailable", "weights need a linear model"}};
  }
  if (wants("shapley")) {
    const std::uint64_t seed = derived_seed(cfg.seed, "shapley");
    const Attribution a = x.size() <= kMaxExactShapleyFeatures
                              ? shapley_exact(f, x, background, train.names)
                              : shapley_sample(f, x, background, cfg.shapley_permutations, seed, train.names);
    j["shapley"] = attribution_json(a);
    j["shapley"]["efficiency_gap"] = a.baseline + a.values.sum() - j["prediction"].get<double>();
  }

  const std::uint64_t perm_seed = derived_seed(cfg.seed, "permutation");
  const PermImportance shift = permutation_importance(f, test.X, y_test, ImportanceLoss::squared_prediction_shift,
                                                      cfg.importance_repeats, perm_seed, train.names);
  if (wants("permutation")) {
    const PermImportance err = permutation_importance(f, test.X, y_test, ImportanceLoss::error_increase,
                                                      cfg.importance_repeats, perm_seed, train.names);
    j["permutation"] = {{"feature_names", shift.feature_names},
                        {"repeats", shift.repeats},
                        {"seed", shift.seed},
                        {"default_loss", "squared_prediction_shift"},
                        {"squared_prediction_shift", {{"mean", to_json_array(shift.mean)}, {"std", to_json_array(shift.std)}}},
                        {"error_increase", {{"mean", to_json_array(err.mean)}, {"std", to_json_array(err.std)}}}};
  }

  // Curves for the most important features, ties broken by column order.
  std::vector<Index> order(static_cast<std::size_t>(x.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return shift.mean(a) > shift.mean(b); });
  order.resize(static_cast<std::size_t>(std::min<Index>(cfg.pdp_features, x.size())));

  if (wants("pdp")) {
    json curves = json::array();
    for (Index jf : order) {
      const PdpCurve c = pdp(f, train.X, jf, QuantileGrid{cfg.pdp_points}, train.names[static_cast<std::size_t>(jf)]);
      curves.push_back({{"feature", c.feature}, {"grid", c.grid}, {"values", c.values}, {"n_background", c.n_background}});
    }
    j["pdp"] = curves;
  }
  if (wants("feature_effect")) {
    if (lin) {
      json curves = json::array();
      for (Index jf : order) {
        const FeatureEffect e = feature_effect(*lin, train.X, jf, QuantileGrid{cfg.pdp_points});
        curves.push_back({{"feature", e.feature},
                          {"grid", e.grid},
                          {"effect", e.effect},
                          {"observed_x", e.observed_x},
                          {"observed_effect", e.observed_effect}});
      }
      j["feature_effect"] = curves;
    } else {
      j["feature_effect"] = {{"unavailable", "feature effects need a linear model"}};
    }
  }
  if (wants("lime")) {
    const SurrogateFit sf =
        lime_local(f, x, feature_stats(train.X), cfg.lime_samples, 0.0, derived_seed(cfg.seed, "lime"));
    j["lime"] = {{"feature_names", train.names},
                 {"weights", to_json_array(sf.weights)},
                 {"intercept", sf.intercept},
                 {"kernel_width", sf.kernel_width},
                 {"n_samples", sf.n_samples},
                 {"fidelity", sf.fidelity},
                 {"fidelity_defined", sf.fidelity_defined}};
  }
  write_json(j, file(cfg, "explain.json"));
}

void stage_anova(const PipelineConfig& cfg) {
  if (cfg.anova_value.empty()) {
    write_json({{"skipped", true}}, file(cfg, "anova.json"));
    return;
  }
  const Table clean = load_csv(file(cfg, "clean.csv"));
  const Vector values = clean.column(cfg.anova_value);
  const auto labels = clean.labels(cfg.anova_group);
  const auto names = first_appearance(labels);
  std::vector<Vector> groups;
  json box = json::array();
  for (const auto& g : names) {
    std::vector<double> v;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == g) v.push_back(values(static_cast<Index>(i)));
    groups.push_back(Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size())));
    box.push_back(v);
  }
  const AnovaResult a = one_way_anova(groups);
  const TukeyResult t = tukey_hsd(groups, cfg.anova_alpha, names);
  json cmp = json::array();
  for (const auto& c : t.comparisons)
    cmp.push_back({{"group_a", c.group_a},
                   {"group_b", c.group_b},
                   {"mean_difference", c.mean_difference},
                   {"q_statistic", c.q_statistic},
                   {"p_adjusted", c.p_adjusted},
                   {"reject", c.reject}});
  json j{{"value", cfg.anova_value},
         {"group", cfg.anova_group},
         {"groups", names},
         {"group_sizes", a.group_sizes},
         {"group_means", a.group_means},
         {"anova",
          {{"sst", a.sst},
           {"ssb", a.ssb},
           {"ssw", a.ssw},
           {"df_between", a.df_between},
           {"df_within", a.df_within},
           {"f_stat", a.f_stat},
           {"p_value", a.p_value}}},
         {"tukey", {{"alpha", t.alpha}, {"comparisons", cmp}, {"rejections", t.rejections()}}},
         {"box", {{"groups", names}, {"values", box}}}};
  write_json(j, file(cfg, "anova.json"));
}

void stage_report(const PipelineConfig& cfg) {
  const json ingest = read_json(file(cfg, "ingest.json"));
  const json reduce = read_json(file(cfg, "reduce.json"));
  const json fit = read_json(file(cfg, "fit.json"));
  const json explain = read_json(file(cfg, "explain.json"));
  const json anova = read_json(file(cfg, "anova.json"));

  // Render everything first so a plot failure leaves no report behind.
  std::vector<std::pair<std::string, std::string>> svgs;
  for (const auto& plot : cfg.plots) {
    if (plot == "weight_plot") {
      json doc;
      const json* src = nullptr;
      if (explain.contains("weights") && explain["weights"].contains("values")) src = &explain["weights"];
      else if (explain.contains("shapley")) src = &explain["shapley"];
      if (!src) throw Error(ErrorCode::config, "weight_plot needs the 'weights' or 'shapley' explanation");
      doc["feature_names"] = src->at("feature_names");
      doc["values"] = src->at("values");
      if (src->contains("lower")) {
        doc["lower"] = src->at("lower");
        doc["upper"] = src->at("upper");
      } else {
        const Vector v = vector_from_json(src->at("values"));
        const Vector u = src->contains("uncertainty") ? Vector(vector_from_json(src->at("uncertainty"))) : Vector::Zero(v.size());
        doc["lower"] = to_json_array(v - 1.96 * u);
        doc["upper"] = to_json_array(v + 1.96 * u);
      }
      doc["title"] = src->at("method");
      svgs.emplace_back("weight_plot.svg", render_svg(plot, doc));
    } else if (plot == "pdp") {
      if (!explain.contains("pdp")) throw Error(ErrorCode::config, "pdp plot needs the 'pdp' explanation");
      for (const auto& c : explain["pdp"]) {
        const std::string feature = c.at("feature").get<std::string>();
        json doc{{"grid", c.at("grid")}, {"values", c.at("values")}, {"title", "partial dependence: " + feature},
                 {"xlabel", feature}, {"ylabel", "mean prediction"}};
        svgs.emplace_back("pdp_" + file_stem(feature) + ".svg", render_svg(plot, doc));
      }
    } else if (plot == "scree") {
      if (!reduce.contains("explained_variance_ratio")) throw Error(ErrorCode::config, "scree plot needs a reduce method");
      svgs.emplace_back("scree.svg", render_svg(plot, {{"values", reduce["explained_variance_ratio"]}, {"title", "PCA scree"}}));
    } else if (plot == "box_by_group") {
      if (!anova.contains("box")) throw Error(ErrorCode::config, "box_by_group needs anova_value and anova_group");
      json doc = anova["box"];
      doc["title"] = anova["value"].get<std::string>() + " by " + anova["group"].get<std::string>();
      doc["ylabel"] = anova["value"];
      svgs.emplace_back("box_by_group.svg", render_svg(plot, doc));
    } else {
      if (!reduce.contains("embedding")) throw Error(ErrorCode::config, "scatter needs a reduce method");
      const Matrix e = matrix_from_json(reduce["embedding"]);
      if (e.cols() < 2) throw Error(ErrorCode::config, "scatter needs reduce_k >= 2");
      json doc{{"x", to_json_array(e.col(0))}, {"y", to_json_array(e.col(1))},
               {"title", reduce["method"].get<std::string>() + " embedding"}, {"xlabel", "dim 1"}, {"ylabel", "dim 2"}};
      if (reduce.contains("labels")) doc["labels"] = reduce["labels"];
      svgs.emplace_back("scatter.svg", render_svg(plot, doc));
    }
  }

  json config = cfg.raw;
  config.erase("out_dir");  // where results land does not affect them
  json plot_files = json::array();
  for (const auto& [name, text] : svgs) plot_files.push_back(name);
  json report{{"tool", "courtlens"},
              {"version", tool_version()},
              {"seed", cfg.seed},
              {"config", config},
              {"model", fit.at("model")},
              {"task", fit.at("task")},
              {"metrics", fit.at("metrics")},
              {"ingest", ingest},
              {"reduce", reduce},
              {"fit", fit},
              {"explain", explain},
              {"anova", anova},
              {"plots", plot_files}};
  for (const auto& [name, text] : svgs) write_text(text, file(cfg, name));
  write_json(report, file(cfg, "report.json"));
}

void run_stage(const std::string& stage, const PipelineConfig& cfg) {
  try {
    fs::create_directories(cfg.out_dir);
    if (stage == "ingest") stage_ingest(cfg);
    else if (stage == "reduce") stage_reduce(cfg);
    else if (stage == "fit") stage_fit(cfg);
    else if (stage == "explain") stage_explain(cfg);
    else if (stage == "anova") stage_anova(cfg);
    else if (stage == "report") stage_report(cfg);
    else throw Error(ErrorCode::usage, "unknown stage '" + stage + "'");
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(stage, e);
  } catch (const json::exception& e) {
    throw StageError(stage, Error(ErrorCode::schema, e.what()));
  } catch (const fs::filesystem_error& e) {
    throw StageError(stage, Error(ErrorCode::io, e.what()));
  }
}

void run(const PipelineConfig& cfg) {
  std::error_code ec;
  fs::remove(file(cfg, "report.json"), ec);
  for (const auto& stage : stage_names()) run_stage(stage, cfg);
}

}  // namespace courtlens
