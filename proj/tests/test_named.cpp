#include <doctest.h>

#include <random>

#include "gen.hpp"
#include "rank1/errors.hpp"
#include "rank1/named.hpp"
#include "rank1/serialize.hpp"

using namespace rank1;

namespace {

void same_geometry(const Schedule& a, const Schedule& b, std::size_t depth) {
  CHECK(a.mode() == b.mode());
  for (std::size_t n = 1; n <= depth; ++n) {
    auto x = a.stage(n), y = b.stage(n);
    CHECK(x->height == y->height);
    CHECK(x->width == y->width);
    CHECK(x->offsets == y->offsets);
    CHECK(x->params.label == y->params.label);
  }
}

}  // namespace

TEST_CASE("flat r=3") {
  auto s = flat_schedule({.r = 3});
  for (std::size_t n = 1; n <= 6; ++n) {
    CHECK(s.stage(n)->r() == 3);
    for (const auto& x : s.stage(n)->spacers) CHECK(x.is_zero());
  }
  auto g = flat_schedule({.r = 2, .r_growth = 3, .r_cap = 50});
  CHECK(g.stage(1)->r() == 2);
  CHECK(g.stage(3)->r() == 18);
  CHECK(g.stage(4)->r() == 50);
  CHECK_THROWS_AS(flat_schedule({.r = 1}), ConfigError);
}

TEST_CASE("staircase34 stages") {
  auto s = staircase34_schedule({});
  CHECK(s.stage(1)->r() == 4);
  CHECK(s.stage(1)->params.label == "flat");
  auto st = s.stage(2);
  CHECK(st->r() == 16);
  CHECK(st->params.label == "staircase");
  CHECK(st->spacers[1] == Scalar::rational(1, 4));
  CHECK(st->spacers[15] == Scalar::rational(15, 4));
  CHECK(s.stage(4)->spacers[1] == Scalar::rational(1, 16));
  CHECK(s.stage(6)->r() == 4096);
  CHECK(s.stage(8)->r() == 4096);
  CHECK(s.stage(8)->spacers[1] == Scalar::rational(1, 64));
}

TEST_CASE("asym49 stages") {
  auto s = asym49_schedule({.r_cap = 64});
  const std::vector<Scalar> pattern{Scalar(0), Scalar(1), Scalar(1), Scalar(2), Scalar(2)};
  std::vector<std::size_t> rs;
  for (std::size_t n = 1; n <= 12; ++n) {
    auto st = s.stage(n);
    if (n % 2 == 1) {
      CHECK(st->r() == 5);
      CHECK(st->spacers == pattern);
      CHECK(st->height * Scalar(5) + Scalar(6) == st->next_height);
    } else {
      rs.push_back(st->r());
      for (const auto& x : st->spacers) CHECK(x.is_zero());
    }
  }
  CHECK(rs == std::vector<std::size_t>{4, 8, 16, 32, 64, 64});
  CHECK(stages_with_label(s, "asym", 12) == std::vector<std::size_t>{1, 3, 5, 7, 9, 11});
}

TEST_CASE("thm44 classes round robin") {
  Thm44Params p{.scales = {Scalar(2)}, .q_max = 2};
  auto cls = thm44_classes(p);
  REQUIRE(cls.size() == 3);
  CHECK(cls[0].label() == "L1[s=2,q=2]");
  CHECK(cls[1].label() == "L2[s=2,q=2]");
  CHECK(cls[2].label() == "M[2;l0=1]");
  auto s = thm44_schedule(p);
  CHECK(s.mode() == ScalarMode::Quadratic);
  for (std::size_t n = 1; n <= 9; ++n) {
    CHECK(s.stage(n)->params.label == cls[(n - 1) % 3].label());
    CHECK(s.stage(n)->params.occurrence == (n - 1) / 3 + 1);
  }
  // L1: every spacer is sqrt2 * s; r_n = max(2, n!)
  auto l1 = s.stage(4);
  CHECK(l1->r() == 24);
  for (const auto& x : l1->spacers) CHECK(x == Scalar::sqrt2() * Scalar(2));
  CHECK(*l1->params.time == -l1->height);
  // L2 with q = 2 and r = 5! = 120: s on the top half
  auto l2 = s.stage(5);
  CHECK(l2->r() == 120);
  for (std::size_t j = 1; j <= 120; ++j) CHECK(l2->spacers[j - 1] == (j <= 60 ? Scalar(0) : Scalar(2)));
}

TEST_CASE("thm44 M-stage layout") {
  auto s = thm44_schedule({.scales = {Scalar(2)}});
  for (std::size_t n : {3, 6, 9}) {
    auto st = s.stage(n);
    const std::size_t j = n / 3;
    REQUIRE(st->r() == 2);
    const Scalar t = *st->params.time;
    // t_j is a power of two >= 2^j large enough that t_j s >= G (h_n + s)
    CHECK(t >= Scalar(1L << j));
    CHECK(t * Scalar(2) >= Scalar(10) * (st->height + Scalar(2)));
    CHECK(st->offset(2) - st->offset(1) == t * Scalar(2) - Scalar(2));
    CHECK(st->spacers[1] == Scalar(static_cast<unsigned long>(j)) * t * Scalar(2) * Scalar(10));
  }
  auto two = thm44_schedule({.scales = {Scalar(1), Scalar(2)}, .k_max = 2});
  auto cls = thm44_classes({.scales = {Scalar(1), Scalar(2)}, .k_max = 2});
  CHECK(cls.back().label() == "M[1,2;l0=2]");
  auto ms = stages_with_label(two, "M[1,2;l0=1]", 30);
  REQUIRE(!ms.empty());
  auto st = two.stage(ms[0]);
  REQUIRE(st->r() == 4);
  const Scalar t = *st->params.time;
  CHECK(st->offset(2) - st->offset(1) == t * Scalar(1) - Scalar(1));
  CHECK(st->offset(4) - st->offset(3) == t * Scalar(2));
  CHECK(st->spacers[1] == Scalar(1) * t * Scalar(2) * Scalar(10));
  CHECK(st->spacers[3] == Scalar(1) * t * Scalar(2) * Scalar(100));
}

TEST_CASE("thm44 configuration errors") {
  CHECK_THROWS_AS(thm44_schedule({.scales = {}}), ConfigError);
  CHECK_THROWS_AS(thm44_schedule({.scales = {Scalar(-1)}}), ConfigError);
  try {
    thm44_schedule({.scales = {Scalar(1), Scalar(2), Scalar(3)}, .q_max = 3, .k_max = 3, .horizon = 10});
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("unreachable: ") != std::string::npos);
    CHECK(std::string(e.what()).find("M[1,2,3;l0=3]") != std::string::npos);
  }
}

TEST_CASE("symmetrize with two copies") {
  StageParams p;
  p.r = 2;
  p.spacers = SpacerMap(SpacerMap::ExplicitList{{Scalar(1), Scalar(5)}});
  auto s = symmetrize(Schedule::from_stages(Scalar(1), Scalar(1), {p}));
  auto st = s.stage(1);
  CHECK(st->r() == 3);
  CHECK(st->bottom_spacer == Scalar(5));
  CHECK(st->spacers == std::vector<Scalar>{Scalar(1), Scalar(1), Scalar(5)});
  CHECK(s.height(2) == Scalar(15));
}

TEST_CASE("property: symmetrized spacers are palindromes") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    auto base = gen::schedule(rng, 4, 8, trial % 2 == 0);
    auto s = symmetrize(base);
    for (std::size_t n = 1; n <= 4; ++n) {
      auto a = base.stage(n), b = s.stage(n);
      REQUIRE(b->r() == 2 * a->r() - 1);
      std::vector<Scalar> seq{b->bottom_spacer};
      seq.insert(seq.end(), b->spacers.begin(), b->spacers.end());
      for (std::size_t i = 0; i < seq.size(); ++i) CHECK(seq[i] == seq[seq.size() - 1 - i]);
      CHECK(seq.back() == a->spacers.back());
    }
  }
}

TEST_CASE("symmetrize a flat schedule twice") {
  auto s = symmetrize(symmetrize(flat_schedule({.r = 3})));
  for (std::size_t n = 1; n <= 3; ++n) {
    auto st = s.stage(n);
    CHECK(st->r() == 2 * (2 * 3 - 1) - 1);
    CHECK(st->bottom_spacer.is_zero());
    for (const auto& x : st->spacers) CHECK(x.is_zero());
  }
}

TEST_CASE("schedule JSON round trips") {
  std::vector<Schedule> all{flat_schedule({.r = 3, .spacer = Scalar::rational(1, 2), .stages = 5}),
                            staircase34_schedule({.r_cap = 256}),
                            asym49_schedule({}),
                            thm44_schedule({.scales = {Scalar(2), Scalar(3)}, .k_max = 2}),
                            symmetrize(staircase34_schedule({.r_cap = 64}))};
  for (const auto& s : all) {
    Json doc = to_json(s);
    auto back = schedule_from_json(Json::parse(doc.dump()));
    same_geometry(s, back, 5);
    CHECK(to_json(back) == doc);
  }
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    auto s = gen::schedule(rng, 3, 5, trial % 2 == 0, true);
    same_geometry(s, schedule_from_json(to_json(s)), 3);
  }
}

TEST_CASE("schedule JSON documents") {
  auto s = schedule_from_json(Json::parse(R"({"h1": "1", "w1": "1", "stages": [
      {"r": 2, "spacer": {"variant": "explicit", "values": ["0", "1"]}}]})"));
  CHECK(s.height(2) == Scalar(3));
  CHECK(s.measure(2) == Scalar::rational(3, 2));

  auto q = schedule_from_json(Json::parse(R"({"h1": "1", "w1": "1", "stages": [
      {"r": 2, "spacer": {"variant": "constant", "c": "sqrt2"}}]})"));
  CHECK(q.mode() == ScalarMode::Quadratic);
  CHECK_THROWS_AS(schedule_from_json(Json::parse(R"({"mode": "exact-rational", "h1": "1", "w1": "1", "stages": [
      {"r": 2, "spacer": {"variant": "constant", "c": "sqrt2"}}]})")),
                  ModeError);

  auto f = schedule_from_json(Json::parse(R"({"mode": "float", "named": {"kind": "flat", "params": {"r": 2, "spacer": "1/3"}}})"));
  CHECK(f.mode() == ScalarMode::Float);
  CHECK(f.height(2).is_float());

  CHECK_THROWS_AS(schedule_from_json(Json::parse(R"({"named": {"kind": "flat", "params": {"rr": 2}}})")), ConfigError);
  CHECK_THROWS_AS(schedule_from_json(Json::parse(R"({"named": {"kind": "cube"}})")), ConfigError);
  CHECK_THROWS_AS(spacer_from_json(Json::parse(R"({"variant": "zigzag"})")), ConfigError);
}

TEST_CASE("spacer JSON round trips") {
  std::vector<std::pair<SpacerMap, std::size_t>> maps{
      {SpacerMap(SpacerMap::ExplicitList{{Scalar(0), Scalar::rational(1, 3)}}, Scalar(2)), 2},
      {SpacerMap(SpacerMap::Constant{Scalar::sqrt2()}), 3},
      {SpacerMap(SpacerMap::Staircase{Scalar::rational(1, 8)}), 4},
      {SpacerMap(SpacerMap::FractionSplit{3, Scalar(4)}), 7},
      {SpacerMap(SpacerMap::PairedGaps{{Scalar(1)}, {Scalar(9)}}), 2},
      {SpacerMap::symmetrized(SpacerMap(SpacerMap::Staircase{Scalar(1)}), 3), 5}};
  for (const auto& [m, r] : maps) {
    auto back = spacer_from_json(to_json(m));
    CHECK(to_json(back) == to_json(m));
    CHECK(back.values(r) == m.values(r));
    CHECK(back.bottom() == m.bottom());
  }
}
