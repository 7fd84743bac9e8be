/*
One-shot partitioned decoding

Channel LLRs enter at stage n+1. For every sub-block, top to bottom:
propagate the coupling stages (interface stage up to n+1) once left to right
and once right to left, hand the interface L-messages to the sub-decoder,
re-encode its decision and pin it as known R-messages. No global iterations.

Known values are pinned on every node whose value is fixed by the decoded
prefix, at every stage, and re-pinned after each stage update. With clipped
messages a PE fed two +-l_max inputs does not return +-l_max, so this is what
keeps "perfectly known" bits perfectly known. PE groups lying wholly inside
the decoded prefix are skipped; their messages never reach an undecided row.
*/

#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "bp.hpp"
#include "classic.hpp"
#include "error.hpp"
#include "mlp.hpp"
#include "partition.hpp"
#include "polar.hpp"

namespace pnn {

struct PartitionedConfig
{
	double l_max = default_l_max;
	int coupling_sweeps = 1;
};

// Decodes one sub-block from its N_i interface LLRs; returns the block's u (N_i bits).
using SubBlockDecoder = std::function<Bits(std::span<const double> interface_llr, const SubBlockSpec &block)>;

struct PartitionedResult
{
	Bits u_hat;
	Bits x_hat;
};

namespace detail {

// Bit values on every stage implied by u (stage 1 = u itself).
inline std::vector<Bits> stage_values(std::span<const std::uint8_t> u, int n)
{
	std::vector<Bits> v(n + 1);
	v[0].assign(u.begin(), u.end());
	for (int s = 1; s <= n; ++s) {
		v[s] = v[s - 1];
		butterfly_layer(v[s], std::size_t{1} << (s - 1));
	}
	return v;
}

// Rows of `stage` whose value depends only on u-indices below `prefix`.
inline int known_rows(int stage, int prefix)
{
	int group = 1 << (stage - 1);
	return prefix / group * group;
}

inline void pin_known(StageMessages &m, int stage, int prefix, const Bits &values)
{
	auto r = m.R(stage);
	const double l_max = m.l_max();
	for (int i = 0, end = known_rows(stage, prefix); i < end; ++i)
		r[i] = values[i] ? -l_max : l_max;
}

} // namespace detail

// Thresholds P(bit = 1) at 0.5 and places the info bits; returns u.
inline Bits nn_decode(const MlpModel &model, std::span<const double> llr, const CodeSpec &code)
{
	auto p = model.forward_llr(llr);
	Bits info(p.size());
	for (std::size_t j = 0; j < p.size(); ++j)
		info[j] = p[j] > 0.5f;
	return expand_info(info, code);
}

inline Bits decode_trivial_block(std::span<const double> interface_llr, const SubBlockSpec &block)
{
	if (block.kind == SubDecoderKind::rate_zero)
		return Bits(block.size, 0);
	// rate-1: the hard decision is the sub-codeword itself
	Bits x = hard_decision(interface_llr);
	polar_transform(std::span<std::uint8_t>(x));
	return x;
}

namespace detail {

// The one-shot block loop. `decide` gets each block's interface LLRs and
// returns the block's u, or nothing to stop early.
template <typename Decide>
void run_blocks(std::span<const double> llr, const PartitionPlan &plan, Decide &&decide, const PartitionedConfig &cfg, Bits &u, StageMessages *trace)
{
	const CodeSpec &spec = plan.spec;
	require(static_cast<int>(llr.size()) == spec.length(), "partitioned decode: LLR length does not match code length");
	require(cfg.coupling_sweeps >= 1, "partitioned decode: need at least one coupling sweep");
	auto msgs = StageMessages::initialized(llr, spec, cfg.l_max);
	const int n = spec.n(), last = n + 1;
	u.assign(spec.length(), 0);
	std::vector<Bits> values(last, Bits(spec.length(), 0));
	int prefix = 0;
	Llrs interface;
	for (const auto &block : plan.blocks) {
		const int s0 = block.interface_stage();
		require(block.offset == prefix, "partitioned decode: blocks must be visited top to bottom");
		for (int sweep = 0; sweep < cfg.coupling_sweeps && s0 < last; ++sweep) {
			for (int s = s0; s < last; ++s) {
				update_stage_left_to_right(msgs, s, prefix);
				pin_known(msgs, s + 1, prefix, values[s]);
			}
			for (int s = last - 1; s >= s0; --s)
				update_stage_right_to_left(msgs, s, prefix);
		}
		// without coupling stages the interface is the channel itself
		std::span<const double> source = s0 == last ? llr : msgs.L(s0);
		interface.assign(source.begin() + block.offset, source.begin() + block.offset + block.size);

		std::optional<Bits> ui = decide(std::span<const double>(interface), block);
		if (!ui)
			break;
		require(static_cast<int>(ui->size()) == block.size, "partitioned decode: sub-decoder returned the wrong length");
		for (int i = 0; i < block.size; ++i)
			u[block.offset + i] = spec.is_frozen(block.offset + i) ? 0 : (*ui)[i];

		prefix = block.offset + block.size;
		values = stage_values(u, n);
		for (int s = 1; s <= last; ++s)
			pin_known(msgs, s, prefix, values[s - 1]);
	}
	if (trace)
		*trace = msgs;
}

} // namespace detail

inline PartitionedResult partitioned_decode(std::span<const double> llr, const PartitionPlan &plan, const SubBlockDecoder &decoder, const PartitionedConfig &cfg = {}, StageMessages *trace = nullptr)
{
	PartitionedResult res;
	detail::run_blocks(
	        llr, plan,
	        [&](std::span<const double> in, const SubBlockSpec &block) -> std::optional<Bits> {
		        if (block.kind == SubDecoderKind::rate_zero || block.kind == SubDecoderKind::hard_decision)
			        return decode_trivial_block(in, block);
		        return decoder(in, block);
	        },
	        cfg, res.u_hat, trace);
	res.x_hat = polar_transform(std::span<const std::uint8_t>(res.u_hat));
	return res;
}

// Interface LLRs of plan.blocks[target] in a decode where every earlier block
// came out as u_true. Training data for sub-decoders that matches what they
// meet inside the code.
inline Llrs coupled_interface(std::span<const double> llr, const PartitionPlan &plan, int target, std::span<const std::uint8_t> u_true, const PartitionedConfig &cfg = {})
{
	require(target >= 0 && target < static_cast<int>(plan.blocks.size()), "coupled_interface: block index out of range");
	require(static_cast<int>(u_true.size()) == plan.spec.length(), "coupled_interface: u length does not match code length");
	Llrs out;
	Bits u;
	detail::run_blocks(
	        llr, plan,
	        [&](std::span<const double> in, const SubBlockSpec &block) -> std::optional<Bits> {
		        if (&block == &plan.blocks[target]) {
			        out.assign(in.begin(), in.end());
			        return std::nullopt;
		        }
		        return Bits(u_true.begin() + block.offset, u_true.begin() + block.offset + block.size);
	        },
	        cfg, u, nullptr);
	return out;
}

using ModelSet = std::map<int, MlpModel>;

inline void check_models(const PartitionPlan &plan, const ModelSet &models)
{
	for (const auto &b : plan.blocks) {
		if (b.kind != SubDecoderKind::nn)
			continue;
		auto it = models.find(b.index);
		require(it != models.end(), "pnn_decode: missing model for block " + std::to_string(b.index));
		require(it->second.input_size() == b.size && it->second.output_size() == b.info_count(), "pnn_decode: model for block " + std::to_string(b.index) + " has shape " + std::to_string(it->second.input_size()) + "->" + std::to_string(it->second.output_size()) + ", expected " + std::to_string(b.size) + "->" + std::to_string(b.info_count()));
	}
}

// Decoder state for repeated PNN / PSCL decoding. Not thread-safe; make one per worker.
class PartitionedDecoder
{
public:
	static PartitionedDecoder pnn(PartitionPlan plan, ModelSet models, PartitionedConfig cfg = {})
	{
		check_models(plan, models);
		PartitionedDecoder d(std::move(plan), cfg);
		d.models_ = std::move(models);
		return d;
	}

	static PartitionedDecoder pscl(PartitionPlan plan, int list_size, PartitionedConfig cfg = {})
	{
		require(list_size >= 1, "pscl_decode: list size must be at least 1");
		PartitionedDecoder d(std::move(plan), cfg);
		d.list_size_ = list_size;
		for (const auto &b : d.plan_.blocks)
			d.lists_.emplace(b.index, SclDecoder(b.code(), list_size));
		return d;
	}

	// Every non-trivial block decoded by brute-force block ML.
	static PartitionedDecoder oracle(PartitionPlan plan, PartitionedConfig cfg = {})
	{
		PartitionedDecoder d(std::move(plan), cfg);
		d.oracle_ = true;
		for (const auto &b : d.plan_.blocks)
			if (b.kind == SubDecoderKind::nn || b.kind == SubDecoderKind::scl)
				d.codebooks_.emplace(b.index, CodebookDecoder(b.code()));
		return d;
	}

	const PartitionPlan &plan() const { return plan_; }

	PartitionedResult decode(std::span<const double> llr, StageMessages *trace = nullptr)
	{
		return partitioned_decode(llr, plan_, [this](std::span<const double> in, const SubBlockSpec &b) { return decode_block(in, b); }, cfg_, trace);
	}

private:
	PartitionedDecoder(PartitionPlan plan, PartitionedConfig cfg) : plan_(std::move(plan)), cfg_(cfg)
	{
		validate_plan(plan_);
		for (const auto &b : plan_.blocks)
			codes_.emplace(b.index, b.code());
	}

	Bits decode_block(std::span<const double> in, const SubBlockSpec &b)
	{
		if (oracle_)
			return codebooks_.at(b.index).decode_block(in);
		if (list_size_ > 0)
			return lists_.at(b.index).decode(in);
		return nn_decode(models_.at(b.index), in, codes_.at(b.index));
	}

	PartitionPlan plan_;
	PartitionedConfig cfg_;
	ModelSet models_;
	int list_size_ = 0;
	bool oracle_ = false;
	std::map<int, CodeSpec> codes_;
	std::map<int, SclDecoder> lists_;
	std::map<int, CodebookDecoder> codebooks_;
};

inline PartitionedResult pnn_decode(std::span<const double> llr, const PartitionPlan &plan, const ModelSet &models, double l_max = default_l_max)
{
	return PartitionedDecoder::pnn(plan, models, {l_max, 1}).decode(llr);
}

inline PartitionedResult pscl_decode(std::span<const double> llr, const PartitionPlan &plan, int list_size, double l_max = default_l_max)
{
	return PartitionedDecoder::pscl(plan, list_size, {l_max, 1}).decode(llr);
}

} // namespace pnn
