#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "regae/datasets.hpp"
#include "regae/loss.hpp"
#include "regae/metrics.hpp"
#include "regae/train.hpp"

using namespace regae;

namespace {

CellConfig small_cell(std::size_t l = 1, bool vae = false) {
  CellConfig c;
  c.m = 8;
  c.l = l;
  c.encoder_hidden = {12};
  c.decoder_hidden = {12};
  c.variational = vae;
  return c;
}

Graph random_graph(std::size_t n, double p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(p);
  Graph g(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (coin(rng)) g.add_edge(i, j);
    }
  }
  return g;
}

double bce(double z, double y) { return std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z))); }

// Independent loss: walks every decoded entry by global position.
double reference_loss(std::span<const DecodedBlock> blocks, const Graph& g, std::size_t l, double penalty,
                      const LossWeights& w) {
  const std::size_t n = g.vertex_count();
  double pos = 0, neg = 0, cterm = 0;
  std::size_t npos = 0, nneg = 0, nc = 0;
  for (const auto& b : blocks) {
    for (std::size_t r = 0; r < l; ++r) {
      for (std::size_t c = 0; c < l; ++c) {
        const std::size_t i = b.index.row * l + r, j = b.index.col * l + c;
        const double zb = b.b_logits.values()[r * l + c];
        const double zc = b.c_logits.values()[r * l + c];
        const bool inside = i + j <= n - 2 && n >= 2;
        cterm += bce(zc, inside ? 1 : 0);
        ++nc;
        if (inside && g.has_edge(n - 1 - i, j)) {
          pos += bce(zb, 1);
          ++npos;
        } else if (inside || i + j == n - 1) {
          neg += bce(zb, 0);
          ++nneg;
        }
      }
    }
  }
  double loss = w.mask_weight * cterm / double(nc) + w.emb_norm_weight * penalty;
  if (npos) loss += w.rpb * pos / double(npos);
  if (nneg) loss += (1 - w.rpb) * neg / double(nneg);
  return loss;
}

DecodedBlock constant_block(Tape& t, BlockIndex idx, std::size_t l, Real b, Real c) {
  return {idx, t.constant_row(std::vector<Real>(l * l, b)), t.constant_row(std::vector<Real>(l * l, c))};
}

std::vector<DecodedBlock> constant_triangle(Tape& t, std::size_t nb, std::size_t l, Real b, Real c) {
  std::vector<DecodedBlock> out;
  for (std::size_t s = 0; s < nb; ++s) {
    for (std::size_t k = 0; k <= s; ++k) out.push_back(constant_block(t, {s - k, k}, l, b, c));
  }
  return out;
}

DatasetSplit train_only(const std::vector<Graph>& graphs) { return split_dataset(graphs, {1.0, 0.0, 0.0}, 0, 0); }

}  // namespace

TEST_CASE("zero logits give a loss of ln 2 per term") {
  for (std::size_t n : {2u, 3u, 6u}) {
    const Graph g = random_graph(n, 0.5, n);
    const PatchGrid grid(g, 1);
    Tape t;
    const auto blocks = constant_triangle(t, n, 1, 0, 0);
    LossWeights w;
    w.emb_norm_weight = 0;
    const double got = reconstruction_loss(blocks, grid, t.constant(Tensor::scalar(0)), w).item();
    const bool has_pos = g.edge_count() > 0;
    const double expected = std::log(2.0) * (w.mask_weight + (1 - w.rpb) + (has_pos ? w.rpb : 0));
    CHECK(got == doctest::Approx(expected).epsilon(1e-5));
  }
}

TEST_CASE("confident correct logits drive the reconstruction terms to zero") {
  const Graph g = random_graph(6, 0.5, 1);
  const PatchGrid grid(g, 2);
  Tape t;
  std::vector<DecodedBlock> blocks;
  for (std::size_t s = 0; s < 3; ++s) {
    for (std::size_t k = 0; k <= s; ++k) {
      std::vector<Real> b(4), c(4);
      for (std::size_t r = 0; r < 2; ++r) {
        for (std::size_t q = 0; q < 2; ++q) {
          const std::size_t i = (s - k) * 2 + r, j = k * 2 + q;
          const bool inside = i + j + 2 <= 6;
          c[r * 2 + q] = inside ? 30 : -30;
          b[r * 2 + q] = inside && g.has_edge(5 - i, j) ? 30 : -30;
        }
      }
      blocks.push_back({{s - k, k}, t.constant_row(b), t.constant_row(c)});
    }
  }
  LossWeights w;
  const double got = reconstruction_loss(blocks, grid, t.constant(Tensor::scalar(0)), w).item();
  CHECK(got < 1e-6);
}

TEST_CASE("reconstruction loss agrees with an independent reference") {
  std::mt19937_64 rng(3);
  for (std::size_t l : {1u, 2u, 3u}) {
    const ModelParams params(small_cell(l), 4);
    for (std::size_t n = 2; n <= 9; ++n) {
      const Graph g = random_graph(n, 0.4, n * 7 + l);
      const PatchGrid grid(g, l);
      Tape t;
      const Var root = encode(t, params, grid);
      const DecoderRun run = decode_teacher_forced(t, params, root, grid.blocks_per_side());
      LossWeights w;
      w.rpb = Real(0.3);
      const double got = reconstruction_loss_with_root(run.blocks, grid, root, w).item();
      double norm = 0;
      for (Real v : root.values()) norm += double(v) * v;
      CHECK(got == doctest::Approx(reference_loss(run.blocks, g, l, norm, w)).epsilon(1e-5));
    }
  }
}

TEST_CASE("loss rejects a decoded region that does not match the target") {
  const PatchGrid grid(random_graph(4, 0.5, 1), 1);
  Tape t;
  const auto blocks = constant_triangle(t, 3, 1, 0, 0);
  CHECK_THROWS_AS(reconstruction_loss(blocks, grid, t.constant(Tensor::scalar(0)), LossWeights{}), ShapeError);
}

TEST_CASE("loss weights are validated") {
  LossWeights w;
  w.rpb = 1;
  CHECK_THROWS_AS(w.validate(), ConfigError);
  w.rpb = Real(0.5);
  w.mask_weight = -1;
  CHECK_THROWS_AS(w.validate(), ConfigError);
}

TEST_CASE("batch loss of one graph equals its reconstruction loss") {
  const ModelParams params(small_cell(), 5);
  const PatchGrid grid(random_graph(5, 0.5, 2), 1);
  Tape t;
  const BatchLoss b = batch_loss(t, std::span<const PatchGrid>(&grid, 1), params, LossWeights{});
  Tape t2;
  const Var root = encode(t2, params, grid);
  const DecoderRun run = decode_teacher_forced(t2, params, root, 5);
  CHECK(b.total.item() == reconstruction_loss_with_root(run.blocks, grid, root, LossWeights{}).item());
}

TEST_CASE("batch loss weighting") {
  const ModelParams params(small_cell(), 6);
  const std::vector<PatchGrid> one{PatchGrid(random_graph(4, 0.5, 3), 1)};
  const std::vector<PatchGrid> twice{one[0], one[0]};
  Tape t;
  CHECK(batch_loss(t, twice, params, LossWeights{}).total.item() ==
        doctest::Approx(batch_loss(t, one, params, LossWeights{}).total.item()).epsilon(1e-6));

  const std::vector<PatchGrid> mixed{PatchGrid(random_graph(3, 0.5, 4), 1), PatchGrid(random_graph(7, 0.5, 5), 1)};
  LossWeights flat;
  flat.size_exponent = 0;
  const BatchLoss f = batch_loss(t, mixed, params, flat);
  CHECK(f.total.item() == doctest::Approx((f.graphs[0].loss + f.graphs[1].loss) / 2).epsilon(1e-6));
  CHECK(f.graphs[0].weight == 1);

  LossWeights linear;
  const BatchLoss w = batch_loss(t, mixed, params, linear);
  CHECK(w.graphs[0].weight == 3);
  CHECK(w.graphs[1].weight == 7);
  CHECK(w.total.item() == doctest::Approx((3 * w.graphs[0].loss + 7 * w.graphs[1].loss) / 10).epsilon(1e-6));
}

TEST_CASE("batch loss is bit-identical under batch permutations") {
  const ModelParams params(small_cell(2), 7);
  std::vector<PatchGrid> batch;
  for (std::size_t k = 0; k < 6; ++k) batch.emplace_back(random_graph(3 + k, 0.4, k), 2);
  Tape t;
  const Real base = batch_loss(t, batch, params, LossWeights{}).total.item();
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    std::shuffle(batch.begin(), batch.end(), rng);
    Tape u;
    CHECK(batch_loss(u, batch, params, LossWeights{}).total.item() == base);
  }
}

TEST_CASE("batch loss requires a noise seed per graph when sampling") {
  const ModelParams params(small_cell(1, true), 8);
  const std::vector<PatchGrid> batch{PatchGrid(random_graph(4, 0.5, 1), 1)};
  BatchLossOptions o;
  o.sample_noise = true;
  Tape t;
  CHECK_THROWS_AS(batch_loss(t, batch, params, LossWeights{}, o), std::invalid_argument);
  o.noise_seeds = {3};
  const BatchLoss a = batch_loss(t, batch, params, LossWeights{}, o);
  const BatchLoss b = batch_loss(t, batch, params, LossWeights{}, o);
  CHECK(a.total.item() == b.total.item());
  CHECK(std::isfinite(a.total.item()));
}

TEST_CASE("curriculum growth and windows") {
  CurriculumState s;
  s.fraction = 0.25;
  s.threshold = 0.8;
  s.step = 0.25;
  CHECK(curriculum_tick(s, 0.79).fraction == 0.25);
  CHECK(curriculum_tick(s, 0.8).fraction == 0.5);
  s.fraction = 0.9;
  CHECK(curriculum_tick(s, 1.0).fraction == 1.0);

  s.fraction = 0.25;
  s.min_size = 2;
  CHECK(curriculum_window(s, 64) == 16);
  CHECK(curriculum_window(s, 5) == 2);
  CHECK(curriculum_window(s, 1) == 1);
  s.fraction = 0.3;
  CHECK(curriculum_window(s, 10) == 3);
  s.fraction = 1.0;
  CHECK(curriculum_window(s, 10) == 10);
  s.fraction = 0;
  CHECK_THROWS_AS(s.validate(), ConfigError);
}

TEST_CASE("metrics on identical graphs") {
  const Graph g = random_graph(8, 0.4, 1);
  const GraphEvaluation e = evaluate_pair(g, g);
  CHECK(e.scores.f1 == 1);
  CHECK(e.scores.precision == 1);
  CHECK(e.scores.recall == 1);
  const MetricsReport r = summarize(std::vector<GraphEvaluation>{e});
  CHECK(r.f1 == 1);
  CHECK(r.size_accuracy == 1);
  CHECK(r.mean_size_error == 0);
}

TEST_CASE("metrics for a four-vertex truth against a five-vertex prediction") {
  const Graph truth(4, {{0, 1}, {1, 2}, {2, 3}});
  const Graph predicted(5, {{0, 1}, {1, 2}, {0, 4}});
  const GraphEvaluation e = evaluate_pair(truth, predicted);
  CHECK(e.confusion.tp == 2);
  CHECK(e.confusion.fp == 1);
  CHECK(e.confusion.fn == 1);
  CHECK(e.confusion.tn == 10 - 4);
  CHECK(e.scores.precision == doctest::Approx(2.0 / 3));
  CHECK(e.scores.recall == doctest::Approx(2.0 / 3));
  CHECK(e.scores.f1 == doctest::Approx(2.0 / 3));
  const MetricsReport r = summarize(std::vector<GraphEvaluation>{e});
  CHECK(r.size_accuracy == 0);
  CHECK(r.mean_size_error == doctest::Approx(0.25));
}

TEST_CASE("degenerate metric cases") {
  const ClassScores both_empty = class_one_scores(0, 0, 0);
  CHECK(both_empty.f1 == 1);
  CHECK(both_empty.precision == 1);
  const ClassScores nothing_predicted = class_one_scores(0, 0, 4);
  CHECK(nothing_predicted.f1 == 0);
  CHECK(nothing_predicted.precision == 0);
  CHECK(nothing_predicted.recall == 0);
  const ClassScores no_truth = class_one_scores(0, 3, 0);
  CHECK(no_truth.f1 == 0);
  CHECK(no_truth.recall == 0);
  CHECK(summarize({}).graph_count == 0);
}

TEST_CASE("report scores are weighted by vertex count") {
  const GraphEvaluation a = evaluate_pair(Graph(2, {{0, 1}}), Graph(2));
  const GraphEvaluation b = evaluate_pair(Graph(6, {{0, 1}}), Graph(6, {{0, 1}}));
  const MetricsReport r = summarize(std::vector<GraphEvaluation>{a, b});
  CHECK(r.f1 == doctest::Approx((2 * 0.0 + 6 * 1.0) / 8));
  CHECK(r.size_accuracy == 1);

  const MetricsReport back = MetricsReport::from_json(r.to_json());
  CHECK(back.f1 == r.f1);
  CHECK(back.graph_count == 2);
  CHECK(back.graphs.size() == 2);
  CHECK(back.graphs[1].confusion.tp == 1);
}

TEST_CASE("aggregate uses the sample standard deviation") {
  MetricsReport a, b, c;
  a.f1 = 0.5;
  b.f1 = 0.7;
  c.f1 = 0.9;
  const AggregateReport r = aggregate(std::vector<MetricsReport>{a, b, c});
  CHECK(r.runs == 3);
  CHECK(r.f1.mean == doctest::Approx(0.7));
  CHECK(r.f1.std == doctest::Approx(0.2));
  CHECK(aggregate(std::vector<MetricsReport>{a}).f1.std == 0);
}

TEST_CASE("threaded evaluation matches the single-threaded run") {
  const ModelParams params(small_cell(2), 9);
  std::vector<CanonicalGraph> graphs;
  for (std::size_t k = 0; k < 7; ++k) graphs.push_back(canonical_order(random_graph(2 + k, 0.4, k)));
  DecodeOptions o;
  o.max_blocks = 8;
  const MetricsReport a = evaluate(graphs, params, o, 1);
  const MetricsReport b = evaluate(graphs, params, o, 3);
  CHECK(a.to_json() == b.to_json());
}

TEST_CASE("training is deterministic for a fixed seed") {
  TrainConfig c;
  c.cell = small_cell();
  c.batch = 2;
  c.max_epochs = 4;
  c.curriculum.fraction = 0.5;
  c.seed = 11;
  const DatasetSplit split = split_dataset(memorization_set(), {0.6, 0.2, 0.2}, 0, 1);
  const TrainResult a = train(split, c);
  const TrainResult b = train(split, c);
  CHECK(a.history == b.history);
  const auto pa = a.params.parameters();
  const auto pb = b.params.parameters();
  for (std::size_t k = 0; k < pa.size(); ++k) CHECK(pa[k]->tensor.values == pb[k]->tensor.values);
}

TEST_CASE("training lowers the loss on the memorization set") {
  TrainConfig c;
  c.cell = small_cell();
  c.cell.m = 16;
  c.batch = 1;
  c.max_epochs = 60;
  c.patience = 1000;
  c.adam.lr = Real(1e-3);
  const TrainResult r = train(train_only(memorization_set()), c);
  REQUIRE(r.history.size() == 60);
  CHECK(r.history.back().train_loss < 0.7 * r.history.front().train_loss);
  for (const auto& rec : r.history) CHECK(std::isfinite(rec.grad_norm));
}

TEST_CASE("patience zero stops at the first epoch without improvement") {
  TrainConfig c;
  c.cell = small_cell();
  c.batch = 1;
  c.max_epochs = 200;
  c.patience = 0;
  c.adam.lr = Real(0.05);  // large steps make a non-improving epoch likely
  const DatasetSplit split = split_dataset(memorization_set(), {0.6, 0.2, 0.2}, 0, 1);
  const TrainResult r = train(split, c);
  REQUIRE(r.stopped_early);
  CHECK_FALSE(r.history.back().improved);
  for (std::size_t k = 0; k + 1 < r.history.size(); ++k) CHECK(r.history[k].improved);
  CHECK(r.best_epoch == r.history.size() - 1);
}

TEST_CASE("selection waits for the curriculum to reach full graphs") {
  TrainConfig c;
  c.cell = small_cell();
  c.batch = 5;
  c.max_epochs = 6;
  c.curriculum.fraction = 0.5;
  c.curriculum.threshold = 1.0;  // never grows
  const TrainResult r = train(train_only(memorization_set()), c);
  CHECK(r.history.size() == 6);
  for (const auto& rec : r.history) {
    CHECK(rec.fraction == 0.5);
    CHECK_FALSE(rec.improved);
  }
  CHECK_FALSE(r.stopped_early);
}

TEST_CASE("epoch records round-trip through JSON") {
  EpochRecord e;
  e.epoch = 3;
  e.train_loss = 0.25;
  e.valid_loss = 0.5;
  e.train_f1 = 0.75;
  e.fraction = 0.5;
  e.grad_norm = 1.5;
  e.improved = true;
  CHECK(EpochRecord::from_json(e.to_json()) == e);
}

TEST_CASE("training configuration is validated") {
  TrainConfig c;
  c.batch = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.batch = 1;
  c.adam.lr = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.adam.lr = Real(1e-3);
  CHECK_NOTHROW(c.validate());
  CHECK_THROWS_AS(train(DatasetSplit{}, c), DataError);
}

TEST_CASE("dataset loss of an empty list is zero") {
  const ModelParams params(small_cell(), 1);
  CHECK(dataset_loss({}, params, LossWeights{}, EmbNormScope::root) == 0);
}
