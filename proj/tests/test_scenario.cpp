#include <gtest/gtest.h>

#include <ddsense/scenario.hpp>

using namespace ddsense;

TEST(Source, Ac) {
    const auto s = parse_source("ac:amp=0.25,freq=1.0");
    const auto& f = std::get<ACField>(s);
    EXPECT_EQ(f.amplitude, 0.25);
    EXPECT_EQ(f.frequency, 1.0);
    EXPECT_EQ(std::get<ACField>(parse_source("ac:amp=0.1,freq=2,phase=0.5")).phase_offset, 0.5);
}

TEST(Source, Bath) {
    const auto s = parse_source("bath:species=13C,apar=0,aperp=50,B=510");
    const auto& b = std::get<NuclearBath>(s);
    EXPECT_EQ(b.field_B, 510);
    ASSERT_EQ(b.spins.size(), 1u);
    EXPECT_EQ(b.spins[0].gamma, 1.0705);
    EXPECT_EQ(b.spins[0].a_perp, 50);
    const auto two = std::get<NuclearBath>(parse_source("bath:B=400,species=1H,aperp=20,species=X,gamma=2.5,apar=3"));
    ASSERT_EQ(two.spins.size(), 2u);
    EXPECT_EQ(two.spins[1].gamma, 2.5);
    EXPECT_EQ(two.spins[1].a_par, 3);
}

TEST(Source, Errors) {
    EXPECT_THROW(parse_source("dc:amp=1"), ValidationError);
    EXPECT_THROW(parse_source("ac:amp=1"), ValidationError);
    EXPECT_THROW(parse_source("ac:amp=x,freq=1"), ValidationError);
    EXPECT_THROW(parse_source("bath:aperp=3,B=500"), ValidationError);
    EXPECT_THROW(parse_source("bath:species=15N,aperp=3,B=500"), ValidationError);
    EXPECT_THROW(parse_source("bath:species=1H,aperp=3"), ValidationError);
}

TEST(Range, Parse) {
    const auto g = parse_range("0.1:1.2:400");
    ASSERT_EQ(g.size(), 400u);
    EXPECT_DOUBLE_EQ(g.front(), 0.1);
    EXPECT_DOUBLE_EQ(g.back(), 1.2);
    EXPECT_EQ(parse_range("0:0:1").size(), 1u);
    EXPECT_THROW(parse_range("1:0:5"), ValidationError);
    EXPECT_THROW(parse_range("0:1"), ValidationError);
    EXPECT_THROW(parse_range("0:1:2.5"), ValidationError);
    EXPECT_EQ(parse_list("450,480,510").size(), 3u);
    EXPECT_EQ(parse_orders("1,2,4/5")[2].str(), "4/5");
}
