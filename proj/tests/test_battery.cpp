#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>

#include <nlohmann/json.hpp>

#include "gvu/battery.hpp"
#include "gvu/error.hpp"
#include "gvu/manifold.hpp"
#include "helpers.hpp"

using gvu::Battery;
using gvu::ErrorCode;
using gvu::TaskSpec;
using nlohmann::json;
using testutil::fails_with;

TEST_CASE("constructor rejects malformed batteries") {
  TaskSpec ok;
  ok.prompt_id = "t";
  ok.scores = {0.0, 1.0};
  ok.threshold = 0.5;

  CHECK(fails_with(ErrorCode::EmptyTaskSet,
                   [] { Battery({}, {}, {}); }));

  TaskSpec single = ok;
  single.scores = {1.0};
  CHECK(fails_with(ErrorCode::ValidationError, [&] {
    Battery({single}, {1.0}, {"f"});
  }));

  TaskSpec bad_score = ok;
  bad_score.scores = {0.0, 1.5};
  CHECK(fails_with(ErrorCode::ScoreOutOfRange, [&] {
    Battery({bad_score}, {1.0}, {"f"});
  }));

  TaskSpec nan_score = ok;
  nan_score.scores = {0.0, std::nan("")};
  CHECK(fails_with(ErrorCode::ScoreOutOfRange, [&] {
    Battery({nan_score}, {1.0}, {"f"});
  }));

  CHECK(fails_with(ErrorCode::NegativeWeight, [&] {
    Battery({ok, ok}, {1.5, -0.5}, {"f", "f"});
  }));

  CHECK(fails_with(ErrorCode::WeightSumMismatch, [&] {
    Battery({ok, ok}, {0.25, 0.25}, {"f", "f"});
  }));

  // Shape mismatch between tasks, weights, and families.
  CHECK(fails_with(ErrorCode::ShapeMismatch, [&] {
    Battery({ok, ok}, {1.0}, {"f", "f"});
  }));
}

TEST_CASE("weights renormalize exactly to one") {
  // Sum is 1 within the 1e-9 gate but not exactly; cum must still end at 1.
  TaskSpec t;
  t.prompt_id = "t";
  t.scores = {0.0, 1.0};
  t.threshold = 0.5;
  double w = 1.0 / 3.0;
  Battery b({t, t, t}, {w, w, w}, {"f", "f", "f"});
  CHECK(b.weight_cum().back() == 1.0);
  double sum = 0.0;
  for (int i = 0; i < 3; ++i) sum += b.weight(i);
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("json parsing is strict") {
  json good = {{"tasks",
                {{{"prompt_id", "a"},
                  {"scores", {0.0, 1.0}},
                  {"threshold", 0.5},
                  {"family", "f"}}}},
               {"weights", {1.0}}};
  Battery b = Battery::from_json(good);
  CHECK(b.task_count() == 1);
  CHECK(b.family(0) == "f");

  json unknown_top = good;
  unknown_top["extra"] = 1;
  CHECK(fails_with(ErrorCode::ParseError,
                   [&] { Battery::from_json(unknown_top); }));

  json unknown_task = good;
  unknown_task["tasks"][0]["notes"] = "x";
  CHECK(fails_with(ErrorCode::ParseError,
                   [&] { Battery::from_json(unknown_task); }));

  for (const char* field : {"prompt_id", "scores", "threshold", "family"}) {
    json missing = good;
    missing["tasks"][0].erase(field);
    CHECK(fails_with(ErrorCode::ParseError,
                     [&] { Battery::from_json(missing); }));
  }
}

TEST_CASE("json round trip preserves the battery") {
  Battery b = testutil::mixed();
  Battery b2 = Battery::from_json(b.to_json());
  CHECK(b2.task_count() == b.task_count());
  for (int t = 0; t < b.task_count(); ++t) {
    CHECK(b2.task(t).prompt_id == b.task(t).prompt_id);
    CHECK(b2.task(t).scores == b.task(t).scores);
    CHECK(b2.task(t).threshold == b.task(t).threshold);
    CHECK(b2.weight(t) == b.weight(t));
    CHECK(b2.family(t) == b.family(t));
  }
}

TEST_CASE("family labels keep first-appearance order") {
  TaskSpec t;
  t.prompt_id = "t";
  t.scores = {0.0, 1.0};
  t.threshold = 0.5;
  Battery b({t, t, t, t}, {0.25, 0.25, 0.25, 0.25},
            {"zeta", "alpha", "zeta", "beta"});
  auto labels = b.family_labels();
  REQUIRE(labels.size() == 3);
  CHECK(labels[0] == "zeta");
  CHECK(labels[1] == "alpha");
  CHECK(labels[2] == "beta");
}

TEST_CASE("task sampling follows the weights") {
  Battery b = testutil::mixed();  // weights 0.25 / 0.75
  gvu::Stream rng(17);
  const int n = 40000;
  int second = 0;
  for (int i = 0; i < n; ++i) second += b.sample_task(rng) == 1;
  double phat = static_cast<double>(second) / n;
  CHECK(std::abs(phat - 0.75) < 5 * std::sqrt(0.25 * 0.75 / n));
}

TEST_CASE("external_score reads the table and bounds-checks") {
  Battery b = testutil::mixed();
  CHECK(gvu::external_score(b, {1, 2}) == 0.9);
  CHECK(fails_with(ErrorCode::IndexOutOfRange,
                   [&] { gvu::external_score(b, {1, 3}); }));
  CHECK(fails_with(ErrorCode::IndexOutOfRange,
                   [&] { gvu::external_score(b, {2, 0}); }));
  CHECK(fails_with(ErrorCode::IndexOutOfRange,
                   [&] { gvu::external_score(b, {-1, 0}); }));
}

TEST_CASE("exact capability at the uniform policy is the mean score") {
  Battery b = testutil::ladder3();
  gvu::Theta theta = gvu::Theta::zeros(gvu::PolicyShape::of(b));
  CHECK(gvu::capability_exact(b, theta) == doctest::Approx(0.5).epsilon(1e-15));
  // Strict threshold 0.75 passes only the top output.
  CHECK(gvu::strict_success_rate(b, theta) ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("capability estimate converges to the exact value") {
  Battery b = testutil::mixed();
  gvu::Stream rng(5);
  gvu::Theta theta =
      gvu::Theta::uniform(gvu::PolicyShape::of(b), 0.7, rng);
  double exact = gvu::capability_exact(b, theta);
  auto est = gvu::capability_estimate(b, theta, 200000, rng);
  CHECK(est.stderror > 0.0);
  CHECK(std::abs(est.value - exact) < 5 * est.stderror);
}

TEST_CASE("per-task quality recombines into capability") {
  Battery b = testutil::mixed();
  gvu::Stream rng(6);
  gvu::Theta theta = gvu::Theta::uniform(gvu::PolicyShape::of(b), 1.0, rng);
  auto q = gvu::per_task_quality(b, theta);
  REQUIRE(static_cast<int>(q.size()) == b.task_count());
  double sum = 0.0;
  for (int t = 0; t < b.task_count(); ++t) sum += b.weight(t) * q[t];
  CHECK(sum == doctest::Approx(gvu::capability_exact(b, theta)).epsilon(1e-14));
}

TEST_CASE("representation sample visits every task once") {
  Battery b = testutil::mixed();
  gvu::Theta theta = gvu::Theta::zeros(gvu::PolicyShape::of(b));
  gvu::Stream rng(8);
  auto s = gvu::representation_sample(b, theta, rng);
  REQUIRE(static_cast<int>(s.quality.size()) == b.task_count());
  CHECK(s.cost == static_cast<double>(b.task_count()));
  for (double q : s.quality) {
    CHECK(q >= 0.0);
    CHECK(q <= 1.0);
  }
}
