// Copyright 2026 The BiUDA Authors
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

#include <fstream>
#include <random>
#include <sstream>

#include "checks.hpp"
// c10 defines a CHECK macro of its own; the test assertion takes over.
#undef CHECK
#include "doctest.h"
#include "errors.hpp"
#include "metrics.hpp"
#include "oracles.hpp"
#include "report.hpp"
#include "scratch.hpp"

using namespace biuda;

namespace {

// Random label maps with a class bias so some classes are rare or absent.
std::pair<EvalSet, std::vector<oracle::Slice>> random_eval(std::mt19937_64& rng, int slices, int cases, int k) {
  EvalSet set;
  std::vector<oracle::Slice> flat;
  std::uniform_int_distribution<int> side(2, 12);
  std::uniform_int_distribution<int> label(0, k - 1);
  std::uniform_int_distribution<int> case_pick(0, cases - 1);
  std::bernoulli_distribution agree(0.6);
  const int h = side(rng), w = side(rng);
  for (int s = 0; s < slices; ++s) {
    Mask p(h, w), g(h, w);
    oracle::Slice o{{}, {}, case_pick(rng)};
    for (std::size_t i = 0; i < g.size(); ++i) {
      g.data[i] = static_cast<std::uint8_t>(std::min(label(rng), label(rng)));
      p.data[i] = agree(rng) ? g.data[i] : static_cast<std::uint8_t>(label(rng));
      o.pred.push_back(p.data[i]);
      o.gt.push_back(g.data[i]);
    }
    set.predictions.push_back(p);
    set.references.push_back(g);
    set.case_ids.push_back(o.case_id);
    flat.push_back(std::move(o));
  }
  return {set, flat};
}

void check_same(std::optional<double> got, std::optional<double> want) {
  REQUIRE(got.has_value() == want.has_value());
  if (got) CHECK(*got == doctest::Approx(*want).epsilon(1e-12));
}

MetricsTable bounds_and(const std::vector<MetricsRow>& extra) {
  MetricsTable t = {
      {"M2M", "M2M", "a", 90.0, 91.0}, {"M2M", "M2M", "mean", 90.0, 91.0},
      {"C2C", "C2C", "a", 80.0, 82.0}, {"C2C", "C2C", "mean", 80.0, 82.0},
  };
  t.insert(t.end(), extra.begin(), extra.end());
  return t;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("dice and f1 match element-loop oracles") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const auto [set, flat] = random_eval(rng, 1 + trial % 7, 1 + trial % 3, 2 + trial % 4);
    for (int k = 0; k < 5; ++k) {
      CAPTURE(trial);
      CAPTURE(k);
      check_same(dice_score(set, k), oracle::dice(flat, k));
      check_same(f1_score(set, k), oracle::f1(flat, k));
    }
  }
}

TEST_CASE("hand-computed metric values") {
  const auto v = checks::metric_hand_cases();
  INFO(v.detail);
  CHECK(v.ok);
}

TEST_CASE("dice and f1 are symmetric in prediction and reference") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    auto [set, flat] = random_eval(rng, 4, 2, 3);
    EvalSet swapped{set.references, set.predictions, set.case_ids};
    for (int k = 0; k < 3; ++k) {
      check_same(dice_score(swapped, k), dice_score(set, k));
      check_same(f1_score(swapped, k), f1_score(set, k));
    }
  }
}

TEST_CASE("with one case dice and f1 coincide") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const auto [set, flat] = random_eval(rng, 5, 1, 4);
    for (int k = 0; k < 4; ++k) check_same(dice_score(set, k), f1_score(set, k));
  }
}

TEST_CASE("dice averages cases while f1 pools pixels") {
  const auto gt = checks::mask_from(4, 4, [](int, int) { return 1; });
  const auto none = checks::mask_from(4, 4, [](int, int) { return 0; });
  const auto quarter = checks::mask_from(4, 4, [](int y, int) { return y == 0 ? 1 : 0; });
  // Case 0 is perfect; case 1 finds 4 of 16 pixels (Dice 40).
  EvalSet set{{gt, quarter}, {gt, gt}, {0, 1}};
  CHECK(*dice_score(set, 1) == doctest::Approx(70.0));
  // Pooled: tp 20, fp 0, fn 12.
  CHECK(*f1_score(set, 1) == doctest::Approx(100.0 * 40.0 / 52.0));
  // Slices of one case are pooled before the ratio.
  EvalSet same_case{{gt, quarter}, {gt, gt}, {3, 3}};
  CHECK(*dice_score(same_case, 1) == doctest::Approx(100.0 * 40.0 / 52.0));
  // A case without class k on either side does not count.
  EvalSet with_empty{{gt, none}, {gt, none}, {0, 1}};
  CHECK(*dice_score(with_empty, 1) == 100.0);
  EvalSet absent{{none}, {none}, {0}};
  CHECK_FALSE(dice_score(absent, 1));
  CHECK_FALSE(f1_score(absent, 1));
  EvalSet missed{{none}, {gt}, {0}};
  CHECK(*f1_score(missed, 1) == 0.0);
  CHECK(*dice_score(missed, 1) == 0.0);
}

TEST_CASE("evaluation set consistency") {
  const auto a = checks::mask_from(4, 4, [](int, int) { return 1; });
  const auto b = checks::mask_from(4, 5, [](int, int) { return 1; });
  CHECK_THROWS_AS(dice_score(EvalSet{{a}, {b}, {0}}, 1), ShapeError);
  CHECK_THROWS_AS(f1_score(EvalSet{{a}, {a}, {}}, 1), ShapeError);
  EvalSet x{{a}, {a}, {0}};
  x.append(EvalSet{{a}, {a}, {1}});
  CHECK(x.predictions.size() == 2u);
  CHECK(x.case_ids == std::vector<int>{0, 1});
}

TEST_CASE("score rows") {
  const auto gt = checks::mask_from(4, 4, [](int y, int) { return y < 2 ? 1 : 2; });
  const auto pred = checks::mask_from(4, 4, [](int y, int) { return y < 3 ? 1 : 2; });
  const auto table = score(EvalSet{{pred}, {gt}, {0}}, {"background", "a", "b", "c"}, "full", kForward);
  REQUIRE(table.size() == 4u);
  CHECK(table[0].class_name == "a");
  CHECK(*table[0].dice == doctest::Approx(100.0 * 16 / 20));
  CHECK(*table[1].dice == doctest::Approx(100.0 * 8 / 12));
  CHECK_FALSE(table[2].dice);
  CHECK(table[3].class_name == "mean");
  CHECK(*table[3].dice == doctest::Approx((80.0 + 200.0 / 3) / 2));
  for (const auto& r : table) {
    CHECK(r.method == "full");
    CHECK(r.direction == "forward");
  }
  CHECK_THROWS_AS(score(EvalSet{}, {"background"}, "m", kForward), ConfigError);
}

TEST_CASE("rounding") {
  CHECK(round2(8.485) == doctest::Approx(8.49));
  CHECK(round2(66.6666) == 66.67);
  CHECK(round2(-1.234) == -1.23);
}

TEST_CASE("drops pair each direction with the bound of its target domain") {
  const auto table = bounds_and({{"full", "forward", "a", 70.0, 72.0},
                                 {"full", "forward", "mean", 70.0, 72.0},
                                 {"full", "backward", "a", 84.0, 90.0},
                                 {"full", "backward", "mean", 84.0, 90.0}});
  const auto drops = compute_drops(table);
  REQUIRE(drops.size() == 2u);
  CHECK(drops[0].class_name == "a");
  CHECK(drops[1].class_name == "mean");
  CHECK(*drops[1].forward_drop == 10.0);  // C2C 80 - 70
  CHECK(*drops[1].backward_drop == 6.0);  // M2M 90 - 84
  CHECK(*drops[1].avg_drop == 8.0);
  CHECK(*drops[1].gap == 4.0);
  const auto f1 = compute_drops(table, true);
  CHECK(*f1[1].forward_drop == 10.0);
  CHECK(*f1[1].backward_drop == 1.0);
  CHECK(report_methods(table) == std::vector<std::string>{"full"});
}

TEST_CASE("gap is symmetric and vanishes for balanced methods") {
  const auto table = bounds_and({{"x", "forward", "mean", 75.0, 0.0},
                                 {"x", "backward", "mean", 85.0, 0.0},
                                 {"y", "forward", "mean", 70.0, 0.0},
                                 {"y", "backward", "mean", 90.0, 0.0},
                                 {"z", "forward", "mean", 60.0, 0.0},
                                 {"z", "backward", "mean", 70.0, 0.0}});
  const auto drops = compute_drops(table);
  // Each method has only a mean row plus the bound class "a" without UDA rows.
  auto mean_of = [&](const std::string& m) {
    for (const auto& d : drops)
      if (d.method == m && d.class_name == "mean") return d;
    FAIL("no row");
    return DropRow{};
  };
  CHECK(*mean_of("x").gap == 0.0);
  CHECK(*mean_of("y").gap == 10.0);
  CHECK(*mean_of("y").forward_drop == 10.0);
  CHECK(*mean_of("y").backward_drop == 0.0);
  CHECK(*mean_of("z").gap == 0.0);
  CHECK(*mean_of("z").avg_drop == 20.0);
  for (const auto& d : drops)
    if (d.class_name == "a") CHECK_FALSE(d.gap);
}

TEST_CASE("missing bounds or directions are reported by name") {
  const MetricsTable only_method = {{"full", "forward", "mean", 70.0, 70.0},
                                    {"full", "backward", "mean", 70.0, 70.0}};
  try {
    compute_drops(only_method);
    FAIL("expected ReportError");
  } catch (const ReportError& e) {
    CHECK(std::string(e.what()).find("missing upper bounds: M2M C2C") != std::string::npos);
  }
  try {
    compute_drops(bounds_and({{"full", "forward", "mean", 70.0, 70.0}}));
    FAIL("expected ReportError");
  } catch (const ReportError& e) {
    CHECK(std::string(e.what()).find("missing rows: full/backward") != std::string::npos);
  }
  CHECK_THROWS_AS(compute_drops(bounds_and({{"full", "sideways", "mean", 1.0, 1.0}})), ReportError);
}

TEST_CASE("metrics files round trip at two decimals") {
  const test::Scratch dir("metrics_csv");
  const MetricsTable table = {{"M2M", "M2M", "a", 91.234, std::nullopt}, {"full", "forward", "mean", 66.666, 7.0}};
  const auto path = dir.path() / "metrics.csv";
  write_metrics_csv(table, path);
  CHECK(slurp(path) == "method,direction,class,dice,f1\nM2M,M2M,a,91.23,\nfull,forward,mean,66.67,7.00\n");
  const auto back = read_metrics_csv(path);
  REQUIRE(back.size() == 2u);
  CHECK(*back[0].dice == 91.23);
  CHECK_FALSE(back[0].f1);
  CHECK(*back[1].f1 == 7.0);

  std::ofstream(dir.path() / "bad_header.csv") << "a,b\n";
  CHECK_THROWS_AS(read_metrics_csv(dir.path() / "bad_header.csv"), ReportError);
  std::ofstream(dir.path() / "bad_cell.csv") << kMetricsHeader << "\nm,forward,a,abc,1\n";
  CHECK_THROWS_AS(read_metrics_csv(dir.path() / "bad_cell.csv"), ReportError);
  std::ofstream(dir.path() / "short.csv") << kMetricsHeader << "\nm,forward,a\n";
  CHECK_THROWS_AS(read_metrics_csv(dir.path() / "short.csv"), ReportError);
  CHECK_THROWS_AS(read_metrics_csv(dir.path() / "absent.csv"), ReportError);
}

TEST_CASE("report files") {
  const test::Scratch dir("report");
  const auto table = bounds_and({{"source_only", "forward", "a", 20.0, 21.0},
                                 {"source_only", "forward", "mean", 20.0, 21.0},
                                 {"source_only", "backward", "a", 30.0, 31.0},
                                 {"source_only", "backward", "mean", 30.0, 31.0},
                                 {"full", "forward", "a", 70.0, 71.0},
                                 {"full", "forward", "mean", 70.0, 71.0},
                                 {"full", "backward", "a", 85.0, 86.0},
                                 {"full", "backward", "mean", 85.0, 86.0}});
  const auto files = write_report(table, dir.path() / "report");
  const auto table_csv = slurp(files.table_csv);
  CHECK(table_csv.rfind("method,direction,metric,a,mean\n", 0) == 0);
  CHECK(table_csv.find("M2M,M2M,dice,90.00,90.00\n") != std::string::npos);
  CHECK(table_csv.find("C2C,C2C,f1,82.00,82.00\n") != std::string::npos);
  CHECK(table_csv.find("full,forward,dice_drop,10.00,10.00\n") != std::string::npos);
  CHECK(table_csv.find("full,backward,f1_drop,5.00,5.00\n") != std::string::npos);
  CHECK(table_csv.find("full,average,dice_drop,7.50,7.50\n") != std::string::npos);
  CHECK(table_csv.find("source_only,average,dice_drop,60.00,60.00\n") != std::string::npos);

  const auto drops = slurp(files.drop_csv);
  CHECK(drops.rfind(std::string(kDropHeader) + "\n", 0) == 0);
  CHECK(drops.find("full,mean,10.00,5.00,7.50,5.00\n") != std::string::npos);
  CHECK(drops.find("source_only,mean,60.00,60.00,60.00,0.00\n") != std::string::npos);

  const auto svg = slurp(files.chart_svg);
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(svg.find(">full</text>") != std::string::npos);
  CHECK(svg.find(">source_only</text>") != std::string::npos);
  // One yellow forward and one red backward bar per method, plus the legend.
  auto count = [&](const std::string& needle) {
    std::size_t n = 0;
    for (auto pos = svg.find(needle); pos != std::string::npos; pos = svg.find(needle, pos + 1)) ++n;
    return n;
  };
  CHECK(count("fill=\"#f2c14e\"") == 3u);
  CHECK(count("fill=\"#d1495b\"") == 3u);
}
