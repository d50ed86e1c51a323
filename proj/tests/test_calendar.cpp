#include <random>

#include <gtest/gtest.h>

#include "shary/error.hpp"
#include "shary/scheduler/calendar.hpp"

using namespace shary;
using namespace shary::scheduler;

TEST(UnitCalendar, HalfOpenBoundaries) {
  UnitCalendar c;
  c.insert({0, 60}, 1);
  EXPECT_TRUE(c.is_free({60, 120}));
  EXPECT_TRUE(c.is_free({-60, 0}));
  EXPECT_FALSE(c.is_free({45, 75}));
  EXPECT_FALSE(c.is_free({-15, 15}));
  c.insert({60, 120}, 2);
  EXPECT_EQ(c.size(), 2u);
  try {
    c.insert({30, 90}, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::overlap);
  }
}

TEST(UnitCalendar, OverlappingQuery) {
  UnitCalendar c;
  c.insert({60, 120}, 1);
  c.insert({180, 300}, 2);
  EXPECT_EQ(c.overlapping({0, 240}), (std::vector<ReservationId>{1, 2}));
  EXPECT_TRUE(c.overlapping({120, 180}).empty());
  EXPECT_EQ(c.overlapping({100, 110}), (std::vector<ReservationId>{1}));
  EXPECT_TRUE(UnitCalendar{}.overlapping({0, 1000}).empty());
}

TEST(UnitCalendar, FreeWithin) {
  UnitCalendar c;
  EXPECT_EQ(c.free_within({0, 180}), (std::vector<Interval>{{0, 180}}));
  c.insert({60, 120}, 1);
  EXPECT_EQ(c.free_within({0, 180}), (std::vector<Interval>{{0, 60}, {120, 180}}));
  EXPECT_TRUE(c.free_within({60, 120}).empty());
  EXPECT_EQ(c.free_within({90, 150}), (std::vector<Interval>{{120, 150}}));
}

TEST(UnitCalendar, EraseRequiresMatchingId) {
  UnitCalendar c;
  c.insert({0, 60}, 1);
  EXPECT_FALSE(c.erase({0, 60}, 2));
  EXPECT_TRUE(c.erase({0, 60}, 1));
  EXPECT_TRUE(c.is_free({0, 60}));
}

// Overlap answers agree with a linear scan over randomly built calendars.
TEST(UnitCalendar, MatchesNaiveOracle) {
  std::mt19937 rng(11);
  for (int round = 0; round < 200; ++round) {
    UnitCalendar c;
    std::vector<std::pair<Interval, ReservationId>> naive;
    for (ReservationId id = 1; id < 40; ++id) {
      Minute s = static_cast<Minute>(rng() % 96) * 15;
      Interval iv{s, s + static_cast<Minute>(1 + rng() % 8) * 15};
      bool free = true;
      for (auto& [b, _] : naive) free = free && !b.overlaps(iv);
      EXPECT_EQ(c.is_free(iv), free);
      if (free) {
        c.insert(iv, id);
        naive.push_back({iv, id});
      }
    }
    for (int q = 0; q < 20; ++q) {
      Minute s = static_cast<Minute>(rng() % 100) * 15;
      Interval iv{s, s + static_cast<Minute>(1 + rng() % 12) * 15};
      std::vector<ReservationId> want;
      for (auto& [b, id] : naive)
        if (b.overlaps(iv)) want.push_back(id);
      auto got = c.overlapping(iv);
      std::sort(want.begin(), want.end());
      std::sort(got.begin(), got.end());
      EXPECT_EQ(got, want);
      Minute free_total = 0;
      for (auto f : c.free_within(iv)) free_total += f.length();
      Minute busy_total = 0;
      for (auto& [b, id] : naive) busy_total += b.intersect(iv).length();
      EXPECT_EQ(free_total + busy_total, iv.length());
    }
  }
}

TEST(ResourceCalendar, FreeUnitsAscending) {
  ResourceCalendar rc(4);
  rc.unit(0).insert({0, 60}, 1);
  rc.unit(2).insert({30, 90}, 2);
  EXPECT_EQ(rc.free_units({0, 60}), (std::vector<int>{1, 3}));
  EXPECT_EQ(rc.free_units({60, 90}), (std::vector<int>{0, 1, 3}));
  EXPECT_EQ(rc.free_units({90, 120}), (std::vector<int>{0, 1, 2, 3}));
}
