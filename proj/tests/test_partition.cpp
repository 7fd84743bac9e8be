#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "pnn/channel.hpp"
#include "pnn/partition.hpp"

using namespace pnn;

TEST(Planner, AllFrozenMergesToOneBlock)
{
	CodeSpec spec(4, {0, 1, 2, 3});
	for (int k_max : {1, 5}) {
		auto plan = plan_partitions(spec, 1, k_max);
		ASSERT_EQ(plan.blocks.size(), 1u);
		EXPECT_EQ(plan.blocks[0].size, 4);
		EXPECT_EQ(plan.blocks[0].kind, SubDecoderKind::rate_zero);
	}
}

TEST(Planner, HandTrace)
{
	CodeSpec spec(8, {0, 1, 2, 4});
	auto plan = plan_partitions(spec, 2, 2);
	EXPECT_EQ(plan.sizes(), (std::vector<int>{4, 2, 2}));
	EXPECT_EQ(plan.info_counts(), (std::vector<int>{1, 1, 2}));
	EXPECT_EQ(plan.blocks[2].kind, SubDecoderKind::hard_decision);
	EXPECT_EQ(plan.blocks[0].kind, SubDecoderKind::nn);
}

TEST(Planner, ReproducesTableProfile)
{
	auto spec = construct_frozen_set(128, 64);
	auto plan = plan_partitions(spec, 8, 14);
	EXPECT_EQ(plan.sizes(), (std::vector<int>{32, 16, 16, 16, 16, 8, 8, 16}));
	EXPECT_EQ(plan.info_counts(), (std::vector<int>{1, 3, 11, 5, 13, 7, 8, 16}));
	EXPECT_EQ(plan.blocks[6].kind, SubDecoderKind::hard_decision);
	EXPECT_EQ(plan.blocks[7].kind, SubDecoderKind::hard_decision);
}

TEST(Planner, TilingOverRandomFrozenSets)
{
	auto rng = derive_stream(1, 1);
	for (int t = 0; t < 200; ++t) {
		const int length = 1 << (2 + rng() % 6);
		std::vector<int> frozen;
		for (int i = 0; i < length; ++i)
			if (rng() % 2)
				frozen.push_back(i);
		CodeSpec spec(length, frozen);
		int base = 1 << (rng() % (spec.n() + 1));
		int k_max = 1 + rng() % 16;
		auto plan = plan_partitions(spec, base, k_max);
		int total = 0, k = 0;
		for (const auto &b : plan.blocks) {
			ASSERT_EQ(b.offset, total);
			ASSERT_EQ(b.offset % b.size, 0);
			total += b.size;
			k += b.info_count();
			ASSERT_EQ(b.kind == SubDecoderKind::hard_decision, b.info_count() == b.size);
			ASSERT_EQ(b.kind == SubDecoderKind::rate_zero, b.info_count() == 0);
			if (b.size > base && b.kind == SubDecoderKind::nn)
				ASSERT_LT(b.info_count(), k_max);
		}
		ASSERT_EQ(total, length);
		ASSERT_EQ(k, spec.info_count());
	}
}

TEST(Planner, RejectsBadArguments)
{
	auto spec = construct_frozen_set(16, 8);
	EXPECT_THROW(plan_partitions(spec, 3, 4), Error);
	EXPECT_THROW(plan_partitions(spec, 32, 4), Error);
	EXPECT_THROW(plan_partitions(spec, 4, 0), Error);
	EXPECT_THROW(plan_equal(spec, 3), Error);
	EXPECT_THROW(plan_equal(spec, 32), Error);
}

TEST(Planner, EqualPlans)
{
	auto spec = construct_frozen_set(128, 64);
	for (int m : {1, 2, 4, 8}) {
		auto plan = plan_equal(spec, m, SubDecoderKind::scl);
		ASSERT_EQ(static_cast<int>(plan.blocks.size()), m);
		for (const auto &b : plan.blocks)
			EXPECT_EQ(b.size, 128 / m);
	}
}

TEST(Planner, ValidationCatchesBrokenPlans)
{
	auto spec = construct_frozen_set(16, 8);
	auto plan = plan_equal(spec, 4);
	auto gap = plan;
	gap.blocks.erase(gap.blocks.begin() + 1);
	EXPECT_THROW(validate_plan(gap), Error);
	auto wrong_kind = plan;
	for (auto &b : wrong_kind.blocks)
		if (b.kind == SubDecoderKind::rate_zero)
			b.kind = SubDecoderKind::nn;
	if (plan.blocks[0].kind == SubDecoderKind::rate_zero)
		EXPECT_THROW(validate_plan(wrong_kind), Error);
	auto misaligned = plan_partitions(spec, 4, 1);
	misaligned.blocks[0].offset = 2;
	EXPECT_THROW(validate_plan(misaligned), Error);
}

TEST(PlanFile, RoundTripAndErrors)
{
	namespace fs = std::filesystem;
	auto dir = fs::temp_directory_path() / "pnn_plan_test";
	fs::create_directories(dir / "models");
	auto spec = construct_frozen_set(128, 64);
	save_code_spec(dir / "code.txt", spec);
	auto plan = plan_partitions(spec, 8, 14);
	plan.blocks[2].model_path = (dir / "models" / "block2.mlp").string();
	save_plan(dir / "plan.txt", plan, dir / "code.txt");
	auto loaded = load_plan(dir / "plan.txt");
	EXPECT_EQ(loaded.plan.spec, spec);
	EXPECT_EQ(loaded.plan.k_max, 14);
	EXPECT_EQ(loaded.plan.sizes(), plan.sizes());
	EXPECT_EQ(fs::weakly_canonical(loaded.plan.blocks[2].model_path), fs::weakly_canonical(plan.blocks[2].model_path));
	EXPECT_TRUE(loaded.plan.blocks[3].model_path.empty());

	{
		std::ofstream os(dir / "bad.txt");
		os << "pnn-plan 1\nspec code.txt\nk_max 14\nblocks 2\n0 64 nn -\n64 32 nn -\n";
	}
	EXPECT_THROW(load_plan(dir / "bad.txt"), Error);
	{
		std::ofstream os(dir / "v2.txt");
		os << "pnn-plan 2\n";
	}
	EXPECT_THROW(load_plan(dir / "v2.txt"), Error);
	EXPECT_THROW(load_plan(dir / "missing.txt"), Error);
	fs::remove_all(dir);
}
