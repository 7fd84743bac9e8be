/*
Partition planning

A sub-block is an aligned, power-of-two run of u-indices. Its first
log2(size) graph stages touch no other rows, so it can be decoded on its own
once the coupling stages above it have been propagated.
*/

#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "error.hpp"
#include "polar.hpp"

namespace pnn {

enum class SubDecoderKind { nn, scl, hard_decision, rate_zero };

inline const char *to_string(SubDecoderKind k)
{
	switch (k) {
	case SubDecoderKind::nn: return "nn";
	case SubDecoderKind::scl: return "scl";
	case SubDecoderKind::hard_decision: return "hard_decision";
	case SubDecoderKind::rate_zero: return "rate_zero";
	}
	return "?";
}

inline SubDecoderKind parse_sub_decoder_kind(const std::string &s)
{
	if (s == "nn")
		return SubDecoderKind::nn;
	if (s == "scl")
		return SubDecoderKind::scl;
	if (s == "hard_decision")
		return SubDecoderKind::hard_decision;
	if (s == "rate_zero")
		return SubDecoderKind::rate_zero;
	throw Error("unknown sub-decoder kind '" + s + "'");
}

struct SubBlockSpec
{
	int index = 0;
	int offset = 0;
	int size = 1;
	std::vector<int> frozen; // local to the block
	SubDecoderKind kind = SubDecoderKind::nn;
	std::string model_path;  // nn blocks only, may be empty

	int info_count() const { return size - static_cast<int>(frozen.size()); }
	CodeSpec code() const { return CodeSpec(size, frozen); }
	// stage where the block's subtree meets the coupling graph
	int interface_stage() const { return log2_exact(size) + 1; }
};

struct PartitionPlan
{
	CodeSpec spec;
	int k_max = 0;
	std::vector<SubBlockSpec> blocks;

	std::vector<int> sizes() const
	{
		std::vector<int> s;
		for (const auto &b : blocks)
			s.push_back(b.size);
		return s;
	}

	std::vector<int> info_counts() const
	{
		std::vector<int> k;
		for (const auto &b : blocks)
			k.push_back(b.info_count());
		return k;
	}
};

inline SubBlockSpec make_sub_block(const CodeSpec &spec, int index, int offset, int size, SubDecoderKind nontrivial = SubDecoderKind::nn)
{
	SubBlockSpec b;
	b.index = index;
	b.offset = offset;
	b.size = size;
	for (int f : spec.frozen())
		if (f >= offset && f < offset + size)
			b.frozen.push_back(f - offset);
	if (b.info_count() == 0)
		b.kind = SubDecoderKind::rate_zero;
	else if (b.info_count() == size)
		b.kind = SubDecoderKind::hard_decision;
	else
		b.kind = nontrivial;
	return b;
}

inline void validate_plan(const PartitionPlan &plan)
{
	int next = 0, k = 0;
	for (std::size_t i = 0; i < plan.blocks.size(); ++i) {
		const auto &b = plan.blocks[i];
		require(is_power_of_two(b.size), "plan: block " + std::to_string(i) + " size is not a power of two");
		require(b.offset == next, "plan: blocks must tile [0, N) contiguously");
		require(b.offset % b.size == 0, "plan: block " + std::to_string(i) + " is not aligned to its size");
		auto expect = make_sub_block(plan.spec, static_cast<int>(i), b.offset, b.size);
		require(b.frozen == expect.frozen, "plan: block " + std::to_string(i) + " frozen subset does not match the code");
		bool trivial = expect.kind == SubDecoderKind::rate_zero || expect.kind == SubDecoderKind::hard_decision;
		if (trivial)
			require(b.kind == expect.kind, "plan: block " + std::to_string(i) + " must be " + to_string(expect.kind));
		else
			require(b.kind == SubDecoderKind::nn || b.kind == SubDecoderKind::scl, "plan: block " + std::to_string(i) + " needs an nn or scl decoder");
		next += b.size;
		k += b.info_count();
	}
	require(next == plan.spec.length(), "plan: blocks do not cover the code");
	require(k == plan.spec.info_count(), "plan: block info counts do not sum to k");
}

// Equal tiles of base_size, then pairwise merging level by level, left to
// right: two aligned neighbours of equal size merge when their combined info
// count stays below k_max. Two rate-1 neighbours always merge since the result
// is still decoded by a hard decision.
inline PartitionPlan plan_partitions(const CodeSpec &spec, int base_size, int k_max)
{
	require(is_power_of_two(base_size) && base_size <= spec.length(), "plan_partitions: base size must be a power of two dividing N");
	require(k_max >= 1, "plan_partitions: k_max must be at least 1");
	struct Tile
	{
		int offset, size, k;
	};
	std::vector<Tile> tiles;
	auto info_in = [&](int offset, int size) {
		int k = size;
		for (int f : spec.frozen())
			k -= (f >= offset && f < offset + size);
		return k;
	};
	for (int o = 0; o < spec.length(); o += base_size)
		tiles.push_back({o, base_size, info_in(o, base_size)});
	for (int size = base_size; size < spec.length(); size *= 2) {
		std::vector<Tile> merged;
		for (std::size_t i = 0; i < tiles.size(); ++i) {
			if (i + 1 < tiles.size() && tiles[i].size == size && tiles[i + 1].size == size && tiles[i].offset % (2 * size) == 0) {
				int k = tiles[i].k + tiles[i + 1].k;
				bool rate_one = tiles[i].k == size && tiles[i + 1].k == size;
				if (k < k_max || rate_one) {
					merged.push_back({tiles[i].offset, 2 * size, k});
					++i;
					continue;
				}
			}
			merged.push_back(tiles[i]);
		}
		tiles = std::move(merged);
	}
	PartitionPlan plan{spec, k_max, {}};
	for (const auto &t : tiles)
		plan.blocks.push_back(make_sub_block(spec, static_cast<int>(plan.blocks.size()), t.offset, t.size));
	validate_plan(plan);
	return plan;
}

// M equal blocks of size N/M, no merging.
inline PartitionPlan plan_equal(const CodeSpec &spec, int partitions, SubDecoderKind nontrivial = SubDecoderKind::nn)
{
	require(partitions >= 1 && is_power_of_two(partitions) && partitions <= spec.length(), "plan_equal: partition count must be a power of two no larger than N");
	int size = spec.length() / partitions;
	PartitionPlan plan{spec, 0, {}};
	for (int i = 0; i < partitions; ++i) {
		plan.blocks.push_back(make_sub_block(spec, i, i * size, size, nontrivial));
		plan.k_max = std::max(plan.k_max, plan.blocks.back().info_count());
	}
	validate_plan(plan);
	return plan;
}

/*
Plan file, version 1:

  pnn-plan 1
  spec <frozen-set file>
  k_max <k_max>
  blocks <M>
  <offset> <size> <kind> <model file or ->     (one line per block)

Relative paths are resolved against the directory holding the plan file.
*/
inline void save_plan(const std::filesystem::path &path, const PartitionPlan &plan, const std::filesystem::path &spec_path)
{
	namespace fs = std::filesystem;
	auto base = fs::absolute(path).parent_path();
	auto rel = [&](const fs::path &p) {
		auto r = fs::absolute(p).lexically_relative(base);
		return r.empty() ? p.string() : r.string();
	};
	std::ofstream os(path);
	require(static_cast<bool>(os), "cannot write " + path.string());
	os << "pnn-plan 1\n";
	os << "spec " << rel(spec_path) << '\n';
	os << "k_max " << plan.k_max << '\n';
	os << "blocks " << plan.blocks.size() << '\n';
	for (const auto &b : plan.blocks)
		os << b.offset << ' ' << b.size << ' ' << to_string(b.kind) << ' ' << (b.model_path.empty() ? std::string("-") : rel(b.model_path)) << '\n';
}

struct LoadedPlan
{
	PartitionPlan plan;
	std::filesystem::path spec_path;
};

inline LoadedPlan load_plan(const std::filesystem::path &path)
{
	namespace fs = std::filesystem;
	std::ifstream is(path);
	require(static_cast<bool>(is), "cannot read " + path.string());
	auto base = fs::absolute(path).parent_path();
	auto resolve = [&](const std::string &p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };
	std::string key, value;
	require(static_cast<bool>(is >> key >> value) && key == "pnn-plan", "plan file: missing 'pnn-plan' header");
	require(value == "1", "plan file: unsupported version " + value);
	require(static_cast<bool>(is >> key >> value) && key == "spec", "plan file: expected 'spec'");
	LoadedPlan out;
	out.spec_path = resolve(value);
	out.plan.spec = load_code_spec(out.spec_path);
	require(static_cast<bool>(is >> key >> out.plan.k_max) && key == "k_max", "plan file: expected 'k_max'");
	std::size_t count = 0;
	require(static_cast<bool>(is >> key >> count) && key == "blocks", "plan file: expected 'blocks'");
	for (std::size_t i = 0; i < count; ++i) {
		int offset = 0, size = 0;
		std::string kind, model;
		require(static_cast<bool>(is >> offset >> size >> kind >> model), "plan file: truncated block list");
		require(is_power_of_two(size) && offset >= 0 && offset + size <= out.plan.spec.length(), "plan file: block " + std::to_string(i) + " out of range");
		auto b = make_sub_block(out.plan.spec, static_cast<int>(i), offset, size);
		b.kind = parse_sub_decoder_kind(kind);
		if (model != "-")
			b.model_path = resolve(model).string();
		out.plan.blocks.push_back(std::move(b));
	}
	validate_plan(out.plan);
	return out;
}

} // namespace pnn
