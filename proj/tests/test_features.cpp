#include "support.hpp"

#include "stconf/aggregate.hpp"
#include "stconf/features.hpp"

#include <doctest.h>

#include <fstream>
#include <random>
#include <set>

using namespace stconf;
using namespace stconf::test;

namespace {

CostVolume census_runner(const GrayImage& l, const GrayImage& r, int d_max)
{
    return build_cost_volume(census_transform(l, 5), census_transform(r, 5), d_max);
}

MeasureInputs scene_inputs(int w, int h)
{
    const auto pair = shifted_pair(w, h, 3, 4);
    const CostVolume vol = census_runner(pair.left, pair.right, 8);
    MeasureInputs in = make_measure_inputs(vol, pair.left, pair.right, 5);
    in.scanlines = sgm_aggregate(vol);
    in.pre_aggregation = vol;
    return in;
}

} // namespace

TEST_CASE("pyramid")
{
    GrayImage img(8, 8);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x)
            img.at(x, y) = static_cast<std::uint8_t>(x * 10 + y);
    const ImagePyramid p = build_pyramid(img);
    CHECK(p.levels[1].width() == 4);
    CHECK(p.levels[2].width() == 2);
    // (0+1+10+11)/4 = 5.5 -> 5
    CHECK(p.levels[1].at(0, 0) == 5);

    const ImagePyramid odd = build_pyramid(GrayImage(9, 9, 3));
    CHECK(odd.levels[1].width() == 4);
    CHECK(odd.levels[2].height() == 2);
    CHECK(odd.levels[2].at(1, 1) == 3);
    CHECK_THROWS_AS(build_pyramid(GrayImage(3, 8)), Error);

    CHECK(scaled_d_max(64, 1) == 32);
    CHECK(scaled_d_max(64, 2) == 16);
    CHECK(scaled_d_max(2, 2) == 1);

    RealMap small(2, 2);
    small.at(1, 0) = 7.0;
    const RealMap up = upsample_nearest(small, 4, 4);
    CHECK(up.at(2, 0) == 7.0);
    CHECK(up.at(3, 1) == 7.0);
    CHECK(up.at(1, 1) == 0.0);
    CHECK(up.at(3, 3) == 0.0);
    // Odd target: the extra column repeats the last source column.
    const RealMap odd_up = upsample_nearest(small, 5, 4);
    CHECK(odd_up.at(4, 0) == 7.0);
    CHECK(odd_up.at(2, 0) == 0.0);
    CHECK(apex_window(0) == 3);
    CHECK(apex_window(4) == 11);
}

TEST_CASE("stack kinds")
{
    const std::pair<const char*, int> expected[] = {{"GCP", 8},   {"ENS7", 7}, {"ENS23", 23}, {"LEV22", 22},
                                                    {"LEV50", 50}, {"O1", 20}, {"O2", 47},    {"FA1", 8},
                                                    {"FA2", 8},    {"SGMF", 20}};
    for (auto [name, n] : expected) {
        const StackKind k = parse_stack_kind(name);
        CHECK(std::string(to_string(k)) == name);
        CHECK(stack_channel_count(k) == n);
    }
    CHECK_THROWS_AS(parse_stack_kind("GCP2"), Error);
}

TEST_CASE("assembled stacks have the declared channels")
{
    const MeasureInputs in = scene_inputs(32, 24);
    const MeasureParams p;
    for (StackKind k : {StackKind::GCP, StackKind::ENS7, StackKind::ENS23, StackKind::LEV22, StackKind::LEV50,
                        StackKind::O1, StackKind::O2, StackKind::FA1, StackKind::FA2, StackKind::SGMF}) {
        INFO(to_string(k));
        const FeatureStack s = assemble_stack(k, in, p, census_runner);
        CHECK(static_cast<int>(s.channels.size()) == stack_channel_count(k));
        CHECK(s.width() == 32);
        CHECK(s.height() == 24);
        std::set<std::string> names;
        for (const auto& c : s.channels) {
            names.insert(c.name);
            CHECK(c.values.width() == 32);
            for (double v : c.values.data())
                CHECK(std::isfinite(v));
        }
        CHECK(names.size() == s.channels.size());
    }

    const FeatureStack o1 = assemble_stack(StackKind::O1, in, p);
    CHECK(o1.channels.front().name == "DA_5");
    CHECK(o1.channels.back().name == "VAR_11");

    const FeatureStack ens7 = assemble_stack(StackKind::ENS7, in, p, census_runner);
    CHECK(ens7.channels[0].name == "LRC@f");
    CHECK(ens7.channels[1].name == "HGM@f");
    CHECK(ens7.channels[2].name == "HGM@h");
    CHECK(ens7.channels[6].name == "DMV@q");
    CHECK_THROWS_AS(assemble_stack(StackKind::ENS7, in, p), Error);

    const FeatureStack sgmf = assemble_stack(StackKind::SGMF, in, p);
    CHECK(sgmf.channels[0].name == "d1@lr");
    MeasureInputs no_sgm = in;
    no_sgm.scanlines.reset();
    CHECK_THROWS_AS(assemble_stack(StackKind::SGMF, no_sgm, p), Error);
}

TEST_CASE("STFEAT round trip")
{
    const auto dir = scratch_dir("features");
    const MeasureInputs in = scene_inputs(16, 12);
    const FeatureStack s = assemble_stack(StackKind::GCP, in, {});
    export_stack(s, dir / "gcp.stfeat");
    const FeatureStack back = read_stack(dir / "gcp.stfeat");
    REQUIRE(back.channels.size() == s.channels.size());
    for (std::size_t c = 0; c < s.channels.size(); ++c) {
        CHECK(back.channels[c].name == s.channels[c].name);
        for (std::size_t i = 0; i < s.channels[c].values.size(); ++i)
            CHECK(back.channels[c].values.data()[i] == static_cast<float>(s.channels[c].values.data()[i]));
    }
    std::ifstream is(dir / "gcp.stfeat", std::ios::binary);
    char magic[8];
    is.read(magic, 8);
    CHECK(std::string(magic, 8) == "STFEAT01");

    CHECK_THROWS_AS(export_stack(FeatureStack{}, dir / "empty.stfeat"), Error);
    {
        std::ofstream os(dir / "trunc.stfeat", std::ios::binary);
        os << "STFEAT01";
    }
    CHECK_THROWS_AS(read_stack(dir / "trunc.stfeat"), Error);
}
