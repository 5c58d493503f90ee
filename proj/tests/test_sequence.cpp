#include <gtest/gtest.h>

#include <ddsense/dsl.hpp>
#include <ddsense/sequence.hpp>

using namespace ddsense;

namespace {
std::vector<double> pulse_phase_list(const PulseProgram& p) {
    std::vector<double> v;
    for (const auto& s : p.segments)
        if (s.kind == SegmentKind::Pulse) v.push_back(s.phase);
    return v;
}
} // namespace

TEST(Builders, Xy8Layout) {
    const auto p = build_xy8(1, 1.0, 25, 0);
    EXPECT_EQ(p.n_pi, 8);
    const auto c = pulse_centers(p);
    ASSERT_EQ(c.size(), 8u);
    for (int k = 0; k < 8; ++k) EXPECT_NEAR(c[k], 0.5 + k, 1e-12);
    for (const auto& s : p.segments)
        if (s.kind == SegmentKind::Pulse) {
            EXPECT_NEAR(s.duration, 0.02, 1e-15);
            EXPECT_NEAR(s.rabi * s.duration, 0.5, 1e-12);
        }
    ASSERT_TRUE(p.init_pulse && p.final_pulse);
    EXPECT_EQ(p.init_pulse->angle, pi / 2);
    EXPECT_EQ(p.final_pulse->angle, 3 * pi / 2);
    EXPECT_TRUE(validate_program(p).empty());
}

TEST(Builders, PhasePatterns) {
    const auto x = pulse_phase_list(build_xy8(2, 1.0, 25, 0));
    const std::vector<double> xb{0, pi / 2, 0, pi / 2, pi / 2, 0, pi / 2, 0};
    for (std::size_t k = 0; k < x.size(); ++k) EXPECT_EQ(x[k], xb[k % 8]);
    const auto y = pulse_phase_list(build_yy8(1, 1.0, 25, 0));
    const std::vector<double> yb{-pi / 2, pi / 2, pi / 2, -pi / 2, -pi / 2, -pi / 2, pi / 2, pi / 2};
    EXPECT_EQ(y, yb);
    for (double ph : pulse_phase_list(build_cpmg(5, 1.0, 25, 0))) EXPECT_EQ(ph, pi / 2);
}

TEST(Builders, Counts) {
    EXPECT_EQ(build_xy8(6, 0.5, 25, 0).n_pi, 48);
    EXPECT_EQ(build_yy8(12, 0.5, 25, 0).n_pi, 96);
    EXPECT_EQ(build_cpmg(1, 0.5, 25, 0).n_pi, 1);
    EXPECT_THROW(build_cpmg(0, 0.5, 25, 0), ValidationError);
    EXPECT_THROW(build_xy8(0, 0.5, 25, 0), ValidationError);
}

TEST(Builders, TimingIndependentOfPhases) {
    const auto a = pulse_centers(build_xy8(1, 1.0, 25, 0));
    EXPECT_EQ(a, pulse_centers(build_yy8(1, 1.0, 25, 0)));
    EXPECT_EQ(a, pulse_centers(build_cpmg(8, 1.0, 25, 0)));
}

TEST(Builders, InfeasibleTiming) {
    EXPECT_THROW(build_xy8(1, 0.02, 25, 0), InfeasibleTimingError);
    EXPECT_THROW(build_yy8(1, 0.01, 25, 0), InfeasibleTimingError);
    EXPECT_NO_THROW(build_xy8(1, 0.0201, 25, 0));
}

TEST(Builders, TotalDuration) {
    for (int n : {1, 3, 12}) {
        const auto p = build_yy8(n, 0.37, 25, 0.2);
        const double expect = p.init_pulse->duration + p.n_pi * p.tau + p.final_pulse->duration;
        EXPECT_NEAR(total_duration(p), expect, 1e-12);
    }
}

TEST(Validate, DisplacedCentre) {
    auto p = build_xy8(1, 1.0, 25, 0);
    // move the 4th pulse (segment 7) by 1e-3 us
    p.segments[6].duration += 1e-3;
    p.segments[8].duration -= 1e-3;
    const auto d = validate_program(p);
    ASSERT_FALSE(d.empty());
    bool found = false;
    for (const auto& e : d)
        if (e.kind == DiagnosticKind::NonEquidistant) {
            found = true;
            EXPECT_NE(e.message.find("non-equidistant centers at index"), std::string::npos);
            EXPECT_TRUE(e.index == 3 || e.index == 4);
        }
    EXPECT_TRUE(found);
}

TEST(Validate, ZeroRabi) {
    auto p = build_yy8(1, 1.0, 25, 0);
    p.segments[1].rabi = 0;
    const auto d = validate_program(p);
    ASSERT_FALSE(d.empty());
    EXPECT_EQ(d.front().kind, DiagnosticKind::ZeroRabi);
    EXPECT_NE(d.front().message.find("zero Rabi amplitude"), std::string::npos);
    EXPECT_EQ(d.front().index, 1u);
}

TEST(Dsl, Yy8EquivalentToBuilder) {
    const auto p = dsl::parse_program(
        "init pi/2 @ phi; block [pi@-y, pi@y, pi@y, pi@-y, pi@-y, pi@-y, pi@y, pi@y] x 6; final 3pi/2 @ phi",
        {1.0, 25, 0.0});
    EXPECT_TRUE(same_timeline(p, build_yy8(6, 1.0, 25, 0)));
}

TEST(Dsl, CpmgLikeX) {
    const auto p = dsl::parse_program("block [pi@x] x 4", {0.5, 25, std::nullopt});
    EXPECT_EQ(p.n_pi, 4);
    EXPECT_FALSE(p.init_pulse);
    for (double ph : pulse_phase_list(p)) EXPECT_EQ(ph, 0.0);
    EXPECT_TRUE(validate_program(p).empty());
}

TEST(Dsl, BlockAreaMustBePi) {
    try {
        dsl::parse_program("block [pi/2@x] x 8", {1.0, 25, std::nullopt});
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 1);
        EXPECT_EQ(e.col(), 8);
        EXPECT_NE(std::string(e.what()).find("area pi"), std::string::npos);
    }
}

TEST(Dsl, SyntaxErrorsCarryPosition) {
    try {
        dsl::parse_template("init pi/2 @ x\nblock [pi@x, pi@q] x 2\n");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2);
        EXPECT_EQ(e.col(), 17);
    }
    EXPECT_THROW(dsl::parse_template("block [pi@x] x 0"), ParseError);
    EXPECT_THROW(dsl::parse_template("final pi @ x"), ParseError);
    EXPECT_THROW(dsl::parse_template("block [pi@x]"), ParseError);
    EXPECT_THROW(dsl::parse_template("init pi/2 @ 10"), ParseError);
    EXPECT_THROW(dsl::parse_template("# nothing\n"), ParseError);
}

TEST(Dsl, CommentsSeparatorsAndUnits) {
    const auto t = dsl::parse_template("# xy-4\ninit 1.5707963267948966 rad @ 90 deg  # boundary\n"
                                       "block [pi@x, pi@ y] x 2\nblock [pi @ 0.25 rad] x 1; final 3pi/2 @ y\n");
    ASSERT_TRUE(t.init);
    EXPECT_DOUBLE_EQ(t.init->angle, pi / 2);
    EXPECT_DOUBLE_EQ(t.init->phase.value, pi / 2);
    ASSERT_EQ(t.blocks.size(), 2u);
    EXPECT_EQ(t.blocks[0].repeat, 2);
    EXPECT_DOUBLE_EQ(t.blocks[1].pulses[0].phase.value, 0.25);
}

TEST(Dsl, UnboundPhi) {
    EXPECT_THROW(dsl::parse_program("init pi/2 @ phi; block [pi@x] x 1; final 3pi/2 @ phi", {1.0, 25, std::nullopt}),
                 ValidationError);
}

TEST(Dsl, TimingCheckedAtBind) {
    EXPECT_THROW(dsl::parse_program("block [pi@x] x 1", {0.01, 25, std::nullopt}), InfeasibleTimingError);
}

TEST(Dsl, RoundTripThroughSerialize) {
    const std::vector<PulseProgram> progs{build_xy8(3, 0.8, 25, 0.3), build_yy8(2, 0.25, 40, -1.1),
                                          build_cpmg(5, 1.2, 25, pi / 2), build_xy8(1, 1.0, 25, 0)};
    for (const auto& p : progs) {
        const auto text = serialize(p);
        const auto q = dsl::parse_program(text, {p.tau, p.segments[1].rabi, std::nullopt});
        EXPECT_TRUE(same_timeline(p, q)) << text;
    }
    EXPECT_NE(serialize(build_xy8(6, 1.0, 25, 0)).find("] x 6"), std::string::npos);
}

TEST(Dsl, BuilderParserEquivalence) {
    const std::vector<std::pair<Family, std::string>> cases{
        {Family::XY8, "init pi/2 @ phi\nblock [pi@x, pi@y, pi@x, pi@y, pi@y, pi@x, pi@y, pi@x] x 4\nfinal 3pi/2 @ phi"},
        {Family::YY8, "init pi/2 @ phi\nblock [pi@-y, pi@y, pi@y, pi@-y, pi@-y, pi@-y, pi@y, pi@y] x 4\nfinal 3pi/2 @ phi"},
        {Family::CPMG, "init pi/2 @ phi\nblock [pi@y] x 4\nfinal 3pi/2 @ phi"}};
    for (const auto& [fam, text] : cases)
        for (double phi : {0.0, 0.7, pi / 4}) {
            const auto q = dsl::parse_program(text, {0.6, 25, phi});
            EXPECT_TRUE(same_timeline(q, build_family(fam, 4, 0.6, 25, phi)));
        }
}
