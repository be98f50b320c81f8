#include "omnicount/eval.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

using namespace omnicount;
using namespace omnicount::testing;

namespace {

// Largest matching among pairs with IoU >= t, by trying every assignment.
long optimal_tp(const std::vector<Detection>& p, const std::vector<BoundingBox>& r, double t) {
  long best = 0;
  std::vector<bool> used(r.size(), false);
  auto rec = [&](auto&& self, std::size_t i, long tp) -> void {
    if (i == p.size()) {
      best = std::max(best, tp);
      return;
    }
    self(self, i + 1, tp);
    for (std::size_t j = 0; j < r.size(); ++j) {
      if (used[j] || iou(p[i].box, r[j]) < t) continue;
      used[j] = true;
      self(self, i + 1, tp + 1);
      used[j] = false;
    }
  };
  rec(rec, 0, 0);
  return best;
}


}  // namespace

TEST_CASE("iou") {
  const BoundingBox a{0, 0, 10, 10};
  CHECK(iou(a, a) == 1.0);
  CHECK(iou(a, {20, 20, 5, 5}) == 0.0);
  CHECK(iou(a, {5, 0, 10, 10}) == doctest::Approx(50.0 / 150.0));
  CHECK(iou(a, {0, 0, 0, 10}) == 0.0);
  std::mt19937_64 rng(3);
  for (int i = 0; i < 500; ++i) {
    const auto x = random_box(rng), y = random_box(rng);
    CHECK(iou(x, y) == iou(y, x));
    CHECK(iou(x, y) >= 0.0);
    CHECK(iou(x, y) <= 1.0);
  }
}

TEST_CASE("match_frame examples") {
  const std::vector<BoundingBox> refs{{0, 0, 10, 10}, {50, 50, 10, 10}};

  SUBCASE("one hit, one miss") {
    const auto m = match_frame(std::vector<Detection>{det({1, 0, 10, 10}, 0.9)}, refs, 0.5);
    CHECK(m.counts == EvalCounts{1, 0, 1});
  }
  SUBCASE("double detection counts one TP and one FP") {
    const auto m =
        match_frame(std::vector<Detection>{det({1, 0, 10, 10}, 0.9), det({0, 1, 10, 10}, 0.8)}, refs, 0.5);
    CHECK(m.counts == EvalCounts{1, 1, 1});
    CHECK(m.prediction_is_tp[0]);
    CHECK_FALSE(m.prediction_is_tp[1]);
  }
  SUBCASE("the higher confidence prediction takes the contested reference") {
    const auto m =
        match_frame(std::vector<Detection>{det({0, 1, 10, 10}, 0.3), det({2, 0, 10, 10}, 0.9)}, refs, 0.5);
    CHECK(m.prediction_is_tp[1]);
    CHECK_FALSE(m.prediction_is_tp[0]);
  }
  SUBCASE("threshold is inclusive") {
    const BoundingBox half{5, 0, 10, 10};  // IoU 1/3 against refs[0]
    CHECK(match_frame(std::vector<Detection>{det(half, 1)}, refs, 1.0 / 3.0).counts.tp == 1);
    CHECK(match_frame(std::vector<Detection>{det(half, 1)}, refs, 0.34).counts.tp == 0);
  }
  SUBCASE("empty sides") {
    CHECK(match_frame({}, refs, 0.5).counts == EvalCounts{0, 0, 2});
    CHECK(match_frame(std::vector<Detection>{det({0, 0, 1, 1}, 1)}, {}, 0.5).counts == EvalCounts{0, 1, 0});
  }
}

TEST_CASE("match_frame invariants and comparison with optimal matching") {
  std::mt19937_64 rng(11);
  int agree = 0;
  const int trials = 1000;
  for (int trial = 0; trial < trials; ++trial) {
    std::vector<Detection> p;
    std::vector<BoundingBox> r;
    const int np = std::uniform_int_distribution<int>(0, 5)(rng);
    const int nr = std::uniform_int_distribution<int>(0, 5)(rng);
    for (int i = 0; i < nr; ++i) r.push_back(random_box(rng, 40, 8, 20));
    for (int i = 0; i < np; ++i) p.push_back(det(random_box(rng, 40, 8, 20), (i + 1) / 10.0));
    const double t = 0.3;
    const auto m = match_frame(p, r, t);
    CHECK(m.counts.tp + m.counts.fp == np);
    CHECK(m.counts.tp + m.counts.fn == nr);
    std::set<std::size_t> refs_used;
    for (const auto& mm : m.matches) {
      CHECK(mm.iou >= t);
      CHECK(refs_used.insert(mm.reference).second);
    }
    const long best = optimal_tp(p, r, t);
    CHECK(m.counts.tp <= best);
    agree += m.counts.tp == best;
  }
  MESSAGE("greedy matched the optimal TP count in " << agree << "/" << trials << " trials");
  CHECK(agree >= trials * 95 / 100);
}

TEST_CASE("precision and recall") {
  auto pr = precision_recall({299, 13, 36});
  CHECK(std::round(pr.precision * 1000) / 1000 == 0.958);
  CHECK(std::round(pr.recall * 1000) / 1000 == 0.893);
  pr = precision_recall({244, 68, 91});
  CHECK(std::round(pr.precision * 1000) / 1000 == 0.782);
  CHECK(std::round(pr.recall * 1000) / 1000 == 0.728);

  pr = precision_recall({0, 0, 0});
  CHECK(pr.precision == 1.0);
  CHECK(pr.recall == 1.0);
  CHECK(pr.precision_vacuous);
  CHECK(pr.recall_vacuous);
  pr = precision_recall({0, 3, 0});
  CHECK(pr.precision == 0.0);
  CHECK(pr.recall_vacuous);
  CHECK_THROWS(precision_recall({-1, 0, 0}));
}

TEST_CASE("iou sweep is monotone in the threshold") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    const auto inst = random_instance(rng, 20);
    const std::vector<double> ts{0.1, 0.3, 0.5, 0.7, 0.9};
    const auto rows = iou_sweep(inst.frames, ts);
    REQUIRE(rows.size() == ts.size());
    for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].counts.tp <= rows[i - 1].counts.tp);
  }
}

TEST_CASE("pr curve examples") {
  SUBCASE("perfect predictions") {
    std::vector<EvalFrame> frames{{"a", {det({0, 0, 10, 10}, 0.9), det({20, 0, 10, 10}, 0.8)},
                                   {{0, 0, 10, 10}, {20, 0, 10, 10}}}};
    const auto c = pr_curve(frames, 0.5);
    REQUIRE(c.points.size() == 2);
    CHECK(c.points[0].recall == 0.5);
    CHECK(c.points[1].recall == 1.0);
    CHECK(*c.ap == doctest::Approx(1.0));
  }
  SUBCASE("a false positive ranked first") {
    std::vector<EvalFrame> frames{{"a", {det({50, 50, 10, 10}, 0.9), det({0, 0, 10, 10}, 0.8)},
                                   {{0, 0, 10, 10}}}};
    const auto c = pr_curve(frames, 0.5);
    REQUIRE(c.points.size() == 2);
    CHECK(c.points[0].precision == 0.0);
    CHECK(c.points[1].precision == 0.5);
    CHECK(*c.ap == doctest::Approx(0.5));
  }
  SUBCASE("tied confidences make one point") {
    std::vector<EvalFrame> frames{{"a", {det({0, 0, 10, 10}, 0.5), det({50, 0, 10, 10}, 0.5)},
                                   {{0, 0, 10, 10}}}};
    const auto c = pr_curve(frames, 0.5);
    REQUIRE(c.points.size() == 1);
    CHECK(c.points[0].precision == 0.5);
    CHECK(*c.ap == doctest::Approx(0.5));
  }
  SUBCASE("no references") {
    std::vector<EvalFrame> frames{{"a", {det({0, 0, 10, 10}, 0.5)}, {}}};
    CHECK(*pr_curve(frames, 0.5).ap == 0.0);
  }
  SUBCASE("no predictions") {
    std::vector<EvalFrame> frames{{"a", {}, {{0, 0, 10, 10}}}};
    const auto c = pr_curve(frames, 0.5);
    CHECK(c.points.empty());
    CHECK(*c.ap == 0.0);
  }
  SUBCASE("nothing at all") { CHECK_FALSE(pr_curve(std::vector<EvalFrame>{{"a", {}, {}}}, 0.5).ap); }
}

TEST_CASE("pr curve equals exhaustive per-threshold evaluation") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    const auto inst = random_instance(rng, 20);
    const auto got = pr_curve(inst.frames, 0.4);
    const auto want = exhaustive_curve(inst.frames, 0.4);
    REQUIRE(got.points.size() == want.points.size());
    for (std::size_t i = 0; i < got.points.size(); ++i) {
      CHECK(got.points[i].confidence_threshold == want.points[i].confidence_threshold);
      CHECK(std::abs(got.points[i].precision - want.points[i].precision) <= 1e-9);
      CHECK(std::abs(got.points[i].recall - want.points[i].recall) <= 1e-9);
    }
    REQUIRE(got.ap.has_value() == want.ap.has_value());
    if (got.ap) CHECK(std::abs(*got.ap - *want.ap) <= 1e-9);
    if (got.ap) {
      CHECK(*got.ap >= 0.0);
      CHECK(*got.ap <= 1.0);
    }
  }
}

TEST_CASE("scaling every box leaves the evaluation unchanged") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    auto inst = random_instance(rng, 12);
    auto scaled = inst;
    for (auto& f : scaled.frames) {
      for (auto& p : f.predictions) p.box = scale_box(p.box, 1, 1, 4, 4);
      for (auto& r : f.references) r = scale_box(r, 1, 1, 4, 4);
    }
    const std::vector<double> ts{0.4};
    CHECK(iou_sweep(inst.frames, ts)[0].counts == iou_sweep(scaled.frames, ts)[0].counts);
    CHECK(pr_curve(inst.frames, 0.4).ap.value_or(-1) ==
          doctest::Approx(pr_curve(scaled.frames, 0.4).ap.value_or(-1)));
  }
}

TEST_CASE("occupancy") {
  const std::vector<std::pair<std::string, int>> p{{"3", 2}, {"1", 1}, {"2", 4}};
  const std::vector<std::pair<std::string, int>> r{{"1", 1}, {"2", 3}, {"3", 0}};
  const auto rows = align_counts(p, r);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].frame_id == "1");

  const auto rep = occupancy_report(rows, 2);
  CHECK(rep.mae == doctest::Approx(1.0));
  CHECK(rep.exact_match_rate == doctest::Approx(1.0 / 3.0));
  CHECK(rep.per_minute_predicted == std::vector<double>{2.5, 2});
  CHECK(rep.per_minute_reference == std::vector<double>{2, 0});
  CHECK(occupancy_csv(rep) == "frame_id,pred,ref\n1,1,1\n2,4,3\n3,2,0\n");

  const std::vector<std::pair<std::string, int>> missing{{"1", 1}};
  CHECK_THROWS_WITH_AS(align_counts(p, missing), doctest::Contains("2 (no reference)"), std::invalid_argument);

  const auto empty = occupancy_report({}, 0);
  CHECK(empty.mae == 0);
  CHECK(empty.exact_match_rate == 1.0);
}

TEST_CASE("report formatting") {
  const std::vector<SweepRow> rows{{0.4, {299, 13, 36}, precision_recall({299, 13, 36})},
                                   {0.5, {244, 68, 91}, precision_recall({244, 68, 91})}};
  CHECK(counts_csv(rows) ==
        "threshold,tp,fp,fn,precision,recall\n"
        "0.40,299,13,36,0.958333,0.892537\n"
        "0.50,244,68,91,0.782051,0.728358\n");
  const auto block = table_block(rows);
  CHECK(block.find("0.958") != std::string::npos);
  CHECK(block.find("0.728") != std::string::npos);
  CHECK(median_of({}) == 0);
  CHECK(median_of({3, 1, 2}) == 2);
}
