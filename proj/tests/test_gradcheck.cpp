#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gradcheck.hpp"

TEST_CASE("primitive gradients match central differences") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    for (const auto& r : gradcheck::primitives(seed)) {
      CAPTURE(r.name);
      CAPTURE(seed);
      CHECK(r.entries > 0);
      CHECK(r.max_abs_gradient > 0);
      CHECK(r.max_relative_error <= gradcheck::kTolerance);
    }
  }
}

TEST_CASE("cell gradients match central differences") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    for (const auto& r : gradcheck::cells(seed)) {
      CAPTURE(r.name);
      CAPTURE(seed);
      CHECK(r.max_relative_error <= gradcheck::kTolerance);
    }
  }
}

TEST_CASE("end-to-end loss gradients on a 3-vertex graph") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    for (bool vae : {false, true}) {
      const auto r = gradcheck::end_to_end(seed, vae);
      CAPTURE(r.name);
      CAPTURE(seed);
      CHECK(r.max_relative_error <= gradcheck::kTolerance);
    }
  }
}

TEST_CASE("end-to-end loss gradients on 4-vertex graphs with larger patches") {
  using namespace regae;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    CellConfig c = gradcheck::small_cell(false);
    c.l = 2;
    ModelParams params(c, seed);
    const std::vector<PatchGrid> batch{PatchGrid(Graph(4, {{0, 1}, {1, 2}, {2, 3}}), 2),
                                       PatchGrid(Graph(3, {{0, 2}}), 2)};
    LossWeights w;
    w.rpb = 0.3;
    BatchLossOptions o;
    o.emb_norm_scope = EmbNormScope::diagonal;
    const auto r = gradcheck::check("batch", params.parameters(),
                                    [&](Tape& t) { return batch_loss(t, batch, params, w, o).total; });
    CAPTURE(seed);
    CHECK(r.max_relative_error <= gradcheck::kTolerance);
  }
}
