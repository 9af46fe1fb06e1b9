#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "asim/decision.hpp"
#include "oracles.hpp"

namespace {

using asim::WeightTable;

WeightTable table_of(std::initializer_list<std::tuple<std::string, double, double>> rows,
                     double tolerance = 0.1) {
  WeightTable t;
  t.tolerance = tolerance;
  for (const auto& [id, pos, neg] : rows) t.entries[id] = {pos, neg, 0, 0};
  return t;
}

TEST(InitTable, ZeroedEntries) {
  auto t = asim::init_table({{"signal", {"x1", "x2"}, "z0"}, {"track", {"y1", "y2"}, "z0"}});
  ASSERT_EQ(t.entries.size(), 2u);
  for (const auto& [id, e] : t.entries) EXPECT_EQ(e, asim::WeightEntry{});
  EXPECT_EQ(t.tolerance, 0.1);
}

TEST(InitTable, RejectsEmptyAndDuplicates) {
  EXPECT_THROW(asim::init_table({}), asim::ConfigError);
  EXPECT_THROW(asim::init_table({{"a", {"h"}, "g"}, {"a", {"h"}, "g"}}), asim::ConfigError);
  EXPECT_THROW(asim::init_table({{"a", {}, "g"}}), asim::ConfigError);
}

TEST(Score, PositiveMinusNegative) {
  EXPECT_NEAR(asim::score({0.8, 0.1, 0, 0}), 0.7, 1e-15);
  EXPECT_NEAR(asim::score({0.2, 0.7, 0, 0}), -0.5, 1e-15);
  EXPECT_EQ(asim::score({0.0, 0.0, 0, 0}), 0.0);
}

TEST(Choose, PublishedWeightsPreferSignalForEverySeed) {
  auto t = table_of({{"signal", 0.8, 0.1}, {"track", 0.2, 0.7}});
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    asim::RandomStream rng("decision", seed);
    auto trace = asim::choose(t, rng);
    EXPECT_EQ(trace.chosen, "signal");
    EXPECT_FALSE(trace.tie_broken);
    EXPECT_EQ(trace.rng_draws, 0u);
    EXPECT_EQ(rng.draws(), 0u);
  }
}

TEST(Choose, AllZeroIsUniformRandom) {
  auto t = table_of({{"a", 0, 0}, {"b", 0, 0}});
  int a = 0;
  for (std::uint64_t seed = 0; seed < 2000; ++seed) {
    asim::RandomStream rng("decision", seed);
    auto trace = asim::choose(t, rng);
    EXPECT_TRUE(trace.tie_broken);
    EXPECT_EQ(trace.rng_draws, 1u);
    a += trace.chosen == "a";
  }
  EXPECT_NEAR(a / 2000.0, 0.5, 0.05);
}

TEST(Choose, WithinToleranceFormsTieSet) {
  auto t = table_of({{"a", 0.50, 0}, {"b", 0.45, 0}});
  EXPECT_EQ(asim::tie_set(t), (std::vector<std::string>{"a", "b"}));
  std::set<std::string> seen;
  for (std::uint64_t seed = 0; seed < 64; ++seed) {
    asim::RandomStream rng("decision", seed);
    auto trace = asim::choose(t, rng);
    EXPECT_TRUE(trace.tie_broken);
    seen.insert(trace.chosen);
  }
  EXPECT_EQ(seen.size(), 2u);
}

TEST(Choose, ToleranceBoundaryIsClosed) {
  EXPECT_EQ(asim::tie_set(table_of({{"a", 0.5, 0}, {"b", 0.4, 0}})).size(), 2u);
  EXPECT_EQ(asim::tie_set(table_of({{"a", 0.5, 0}, {"b", 0.35, 0}})).size(), 1u);
}

TEST(Choose, EmptyTableIsStateError) {
  asim::RandomStream rng;
  EXPECT_THROW(asim::choose(WeightTable{}, rng), asim::StateError);
}

TEST(RecordSuccess, AveragesTowardOne) {
  auto t = table_of({{"a", 0.0, 0.3}});
  t = asim::record_success(t, "a");
  EXPECT_EQ(t.at("a").positive, 0.5);
  EXPECT_EQ(t.at("a").negative, 0.3);
  EXPECT_EQ(t.at("a").successes, 1u);
  EXPECT_NEAR(asim::record_success(table_of({{"a", 0.8, 0}}), "a").at("a").positive, 0.9, 1e-15);
  EXPECT_EQ(asim::record_success(table_of({{"a", 1.0, 0}}), "a").at("a").positive, 1.0);
}

TEST(RecordFailure, HalvesPositiveAndRaisesNegative) {
  auto t = asim::record_failure(table_of({{"a", 0.8, 0.1}}), "a");
  EXPECT_EQ(t.at("a").positive, 0.4);
  EXPECT_NEAR(t.at("a").negative, 0.55, 1e-15);
  EXPECT_EQ(t.at("a").failures, 1u);
  EXPECT_EQ(asim::record_failure(table_of({{"a", 0.0, 0}}), "a").at("a").positive, 0.0);
}

TEST(Record, UnknownPathIsStateError) {
  auto t = table_of({{"a", 0, 0}});
  EXPECT_THROW(asim::record_success(t, "zz"), asim::StateError);
  EXPECT_THROW(asim::record_failure(t, "zz"), asim::StateError);
}

// Reference fold: positive follows w <- (w + outcome)/2 on success and
// w <- w/2 on failure; negative follows w <- (w + 1)/2 on failure only.
TEST(Record, MatchesReferenceFold) {
  std::mt19937_64 gen(17);
  std::bernoulli_distribution coin(0.6);
  for (int run = 0; run < 200; ++run) {
    auto t = table_of({{"p", 0, 0}});
    double pos = 0.0, neg = 0.0;
    for (int i = 0; i < 40; ++i) {
      if (coin(gen)) {
        t = asim::record_success(t, "p");
        pos = 0.5 * pos + 0.5;
      } else {
        t = asim::record_failure(t, "p");
        pos = 0.5 * pos;
        neg = 0.5 * neg + 0.5;
      }
      ASSERT_NEAR(t.at("p").positive, pos, 1e-15);
      ASSERT_NEAR(t.at("p").negative, neg, 1e-15);
    }
  }
}

TEST(Record, WeightsStayInUnitIntervalUnderRandomInterleavings) {
  std::mt19937_64 gen(23);
  std::uniform_int_distribution<int> pick(0, 3);
  for (int run = 0; run < 100000; ++run) {
    auto t = table_of({{"a", 0, 0}, {"b", 0, 0}});
    for (int i = 0; i < 8; ++i) {
      const int k = pick(gen);
      const char* path = (k & 1) ? "a" : "b";
      t = (k & 2) ? asim::record_success(t, path) : asim::record_failure(t, path);
    }
    for (const auto& [id, e] : t.entries) {
      ASSERT_GE(e.positive, 0.0);
      ASSERT_LE(e.positive, 1.0);
      ASSERT_GE(e.negative, 0.0);
      ASSERT_LE(e.negative, 1.0);
    }
  }
}

TEST(Choose, SingletonTieSetIgnoresSeed) {
  std::mt19937_64 gen(29);
  std::uniform_int_distribution<int> grid(0, 20);
  for (int run = 0; run < 500; ++run) {
    auto t = table_of({{"a", grid(gen) * 0.05, grid(gen) * 0.05},
                       {"b", grid(gen) * 0.05, grid(gen) * 0.05},
                       {"c", grid(gen) * 0.05, grid(gen) * 0.05}});
    if (asim::all_zero(t) || asim::tie_set(t).size() != 1) continue;
    asim::RandomStream first("decision", 0);
    const auto expected = asim::choose(t, first).chosen;
    for (std::uint64_t seed = 1; seed < 20; ++seed) {
      asim::RandomStream rng("decision", seed);
      ASSERT_EQ(asim::choose(t, rng).chosen, expected);
    }
  }
}

TEST(Choose, ArgmaxInvariantUnderCommonShift) {
  std::mt19937_64 gen(31);
  std::uniform_int_distribution<int> grid(0, 10);
  std::uniform_int_distribution<int> shift(1, 10);
  for (int run = 0; run < 2000; ++run) {
    auto t = table_of({{"a", grid(gen) * 0.05, grid(gen) * 0.05},
                       {"b", grid(gen) * 0.05, grid(gen) * 0.05},
                       {"c", grid(gen) * 0.05, grid(gen) * 0.05}});
    const double c = shift(gen) * 0.05;
    auto shifted = t;
    for (auto& [id, e] : shifted.entries) {
      e.positive += c;
      e.negative += c;
    }
    ASSERT_EQ(asim::tie_set(t), asim::tie_set(shifted));
  }
}

TEST(Record, DominatingHistoryScoresAtLeastAsHigh) {
  std::mt19937_64 gen(37);
  std::uniform_int_distribution<int> outcome(0, 2);  // 0 none, 1 success, 2 failure
  for (int run = 0; run < 5000; ++run) {
    std::vector<int> b(30);
    for (auto& o : b) o = outcome(gen);
    auto a = b;
    std::vector<std::size_t> upgradable;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i] != 1) upgradable.push_back(i);
    }
    if (upgradable.empty()) continue;
    std::uniform_int_distribution<std::size_t> which(0, upgradable.size() - 1);
    a[upgradable[which(gen)]] = 1;
    auto replay = [](const std::vector<int>& history) {
      auto t = table_of({{"p", 0, 0}});
      for (int o : history) {
        if (o == 1) t = asim::record_success(t, "p");
        if (o == 2) t = asim::record_failure(t, "p");
      }
      return asim::score(t.at("p"));
    };
    ASSERT_GE(replay(a), replay(b));
  }
}

TEST(Choose, TieSetMatchesExactGridOracleForTwoPaths) {
  for (int pa = 0; pa <= 20; ++pa)
    for (int na = 0; na <= 20; ++na)
      for (int pb = 0; pb <= 20; ++pb)
        for (int nb = 0; nb <= 20; ++nb) {
          auto t = table_of({{"a", pa * 0.05, na * 0.05}, {"b", pb * 0.05, nb * 0.05}});
          ASSERT_EQ(asim::tie_set(t), oracle::grid_tie_set({{"a", {pa, na}}, {"b", {pb, nb}}}))
              << pa << ' ' << na << ' ' << pb << ' ' << nb;
        }
}

}  // namespace
