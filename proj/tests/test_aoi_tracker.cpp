#include <gtest/gtest.h>

#include "uavtraj/aoi_tracker.hpp"

using namespace uavtraj;

TEST(Aoi, StartsAtZero)
{
    AoiTable t(4);
    for (int p = 0; p < 4; ++p)
        EXPECT_EQ(t.age(p), 0);
    EXPECT_EQ(t.normalized_average_aoi(), 0.0);
    EXPECT_THROW(t.average_aoi(), std::logic_error);
}

TEST(Aoi, AgesWithoutDelivery)
{
    AoiTable t(3);
    for (int s = 1; s <= 4; ++s)
        t.tick(s);
    for (int p = 0; p < 3; ++p)
        EXPECT_EQ(t.age(p), 4);
}

TEST(Aoi, DeliveryResetsAge)
{
    AoiTable t(2);
    t.record_delivery(0, 3);
    t.tick(4);
    t.tick(5);
    EXPECT_EQ(t.age(0), 2);
    t.record_delivery(1, 5);
    EXPECT_EQ(t.age(1), 0);
}

TEST(Aoi, TransitAgeFromOriginSlot)
{
    AoiTable t(1);
    t.record_delivery(0, 6, 2);
    EXPECT_EQ(t.age(0), 4);
    t.record_delivery(0, 6, 1);  // staler than what is already delivered
    EXPECT_EQ(t.age(0), 4);
    EXPECT_EQ(t.last_delivery(0), 2);
}

TEST(Aoi, RejectsBadTicksAndPastDeliveries)
{
    AoiTable t(1);
    EXPECT_THROW(t.tick(2), std::logic_error);
    t.tick(1);
    t.tick(2);
    EXPECT_THROW(t.record_delivery(0, 1), std::logic_error);
}

TEST(Aoi, AverageOfAgesOneAndTwo)
{
    AoiTable t(1);
    t.tick(1);
    t.tick(2);
    EXPECT_DOUBLE_EQ(t.average_aoi(), 1.5);
    EXPECT_DOUBLE_EQ(t.normalized_average_aoi(), 1.0);
}

TEST(Aoi, EveryslotDeliveryAveragesZero)
{
    AoiTable t(3);
    for (int s = 1; s <= 10; ++s)
        for (int p = 0; p < 3; ++p)
            t.record_delivery(p, s);
    EXPECT_DOUBLE_EQ(t.average_aoi(), 0.0);
    EXPECT_DOUBLE_EQ(t.normalized_average_aoi(), 0.0);
}

TEST(Aoi, OneWaypointAlternates)
{
    AoiTable t(1);
    for (int s = 1; s <= 6; ++s) {
        t.tick(s);
        EXPECT_EQ(t.age(0), 1);
        t.record_delivery(0, s);
        EXPECT_EQ(t.age(0), 0);
    }
}

TEST(Aoi, ExcludedWaypointDoesNotCount)
{
    AoiTable t(3, 0);
    EXPECT_FALSE(t.tracked(0));
    EXPECT_EQ(t.tracked_count(), 2);
    t.record_delivery(1, 1);
    t.record_delivery(2, 1);
    t.tick(2);
    // ages over slots 1..2 of waypoints 1, 2: (0 + 0 + 1 + 1) / 4
    EXPECT_DOUBLE_EQ(t.average_aoi(), 0.5);
    // a never-updated waypoint would average (1 + 2) / 2
    EXPECT_DOUBLE_EQ(t.normalized_average_aoi(), 0.5 / 1.5);
}

TEST(Aoi, BruteForceAverageAgrees)
{
    AoiTable t(4, 3);
    std::vector<int> last(4, 0);
    double sum = 0.0;
    int terms = 0;
    for (int s = 1; s <= 40; ++s) {
        t.tick(s);
        if (s % 3 == 0) {
            t.record_delivery(0, s, s - 1);
            last[0] = std::max(last[0], s - 1);
        }
        if (s % 7 == 0) {
            t.record_delivery(2, s);
            last[2] = s;
        }
        for (int p = 0; p < 3; ++p) {
            sum += s - last[static_cast<std::size_t>(p)];
            ++terms;
        }
        ASSERT_NEAR(t.average_aoi(), sum / terms, 1e-12);
    }
}

TEST(Aoi, TraceListsTrackedAges)
{
    AoiTable t(3, 1);
    t.tick(1);
    std::vector<AoiTraceRow> rows;
    t.append_trace(rows);
    ASSERT_EQ(rows.size(), 2U);
    EXPECT_EQ(rows[0].waypoint, 0);
    EXPECT_EQ(rows[1].waypoint, 2);
    EXPECT_EQ(rows[1].age, 1);
}
