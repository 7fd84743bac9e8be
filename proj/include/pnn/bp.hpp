/*
Belief propagation over the natural-order polar factor graph

Messages live on (n+1) stages of N nodes. The processing elements between
stage s and s+1 pair node i (bit s-1 of i clear) as port 1 with node
i + 2^(s-1) as port 2. L-messages travel right to left (channel towards u),
R-messages left to right.
*/

#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cmath>
#include <span>
#include <vector>

#include "channel.hpp"
#include "error.hpp"
#include "polar.hpp"

namespace pnn {

inline constexpr double default_l_max = 20.0;

// ln((1 + e^(a+b)) / (e^a + e^b)), rewritten around max() so that it cannot overflow.
inline double box_f(double a, double b)
{
	double s = a + b, d = a - b;
	double num = std::max(s, 0.0) + std::log1p(std::exp(-std::abs(s)));
	double den = std::max(a, b) + std::log1p(std::exp(-std::abs(d)));
	return num - den;
}

inline double min_sum(double a, double b)
{
	// sign(a) sign(b) min(|a|, |b|) on the bit level, so loops vectorize
	constexpr std::uint64_t sign = std::uint64_t{1} << 63;
	double m = std::min(std::abs(a), std::abs(b));
	std::uint64_t s = (std::bit_cast<std::uint64_t>(a) ^ std::bit_cast<std::uint64_t>(b)) & sign;
	return std::bit_cast<double>(std::bit_cast<std::uint64_t>(m) | s);
}

inline double clip(double v, double l_max) { return std::clamp(v, -l_max, l_max); }

struct PeInputs
{
	double l_in1 = 0, l_in2 = 0, r_in1 = 0, r_in2 = 0;
};

struct PeOutputs
{
	double l_out1 = 0, l_out2 = 0, r_out1 = 0, r_out2 = 0;
};

inline PeOutputs pe_update(const PeInputs &in, double l_max = default_l_max)
{
	double shared = box_f(in.r_in1, in.l_in1);
	PeOutputs out;
	out.l_out1 = clip(box_f(in.l_in1, in.l_in2 + in.r_in2), l_max);
	out.r_out1 = clip(box_f(in.r_in1, in.l_in2 + in.r_in2), l_max);
	out.l_out2 = clip(shared + in.l_in2, l_max);
	out.r_out2 = clip(shared + in.r_in2, l_max);
	return out;
}

class StageMessages
{
public:
	StageMessages(int n, double l_max = default_l_max) : n_(n), length_(1 << n), l_max_(l_max), left_((n + 1) * length_, 0.0), right_((n + 1) * length_, 0.0)
	{
		require(n >= 0 && n < 30, "stage messages: invalid stage count");
		require(l_max > 0.0, "stage messages: l_max must be positive");
	}

	int n() const { return n_; }
	int length() const { return length_; }
	int stages() const { return n_ + 1; }
	double l_max() const { return l_max_; }

	// stage is 1-based: 1 = u-side, n+1 = channel side
	std::span<double> L(int stage) { return {left_.data() + index(stage), static_cast<std::size_t>(length_)}; }
	std::span<const double> L(int stage) const { return {left_.data() + index(stage), static_cast<std::size_t>(length_)}; }
	std::span<double> R(int stage) { return {right_.data() + index(stage), static_cast<std::size_t>(length_)}; }
	std::span<const double> R(int stage) const { return {right_.data() + index(stage), static_cast<std::size_t>(length_)}; }

	double max_abs() const
	{
		double m = 0.0;
		for (double v : left_)
			m = std::max(m, std::abs(v));
		for (double v : right_)
			m = std::max(m, std::abs(v));
		return m;
	}

	// Channel LLRs on the right, l_max on frozen rows on the left.
	static StageMessages initialized(std::span<const double> channel_llr, const CodeSpec &spec, double l_max = default_l_max)
	{
		require(static_cast<int>(channel_llr.size()) == spec.length(), "stage messages: LLR length does not match code length");
		StageMessages msgs(spec.n(), l_max);
		auto ch = msgs.L(spec.n() + 1);
		for (int i = 0; i < spec.length(); ++i)
			ch[i] = clip(channel_llr[i], l_max);
		auto prior = msgs.R(1);
		for (int f : spec.frozen())
			prior[f] = l_max;
		return msgs;
	}

private:
	std::size_t index(int stage) const
	{
		require(stage >= 1 && stage <= n_ + 1, "stage index out of range");
		return static_cast<std::size_t>(stage - 1) * length_;
	}

	int n_;
	int length_;
	double l_max_;
	std::vector<double> left_;
	std::vector<double> right_;
};

// L-messages of stage s from L at s+1 and R at s. PE groups that end at or
// before first_row are left untouched.
inline void update_stage_right_to_left(StageMessages &m, int s, int first_row = 0)
{
	auto lin = m.L(s + 1);
	auto rin = m.R(s);
	auto lout = m.L(s);
	const int half = 1 << (s - 1);
	const double l_max = m.l_max();
	for (int g = first_row / (2 * half) * (2 * half); g < m.length(); g += 2 * half) {
		for (int i = g; i < g + half; ++i) {
			int j = i + half;
			lout[i] = clip(box_f(lin[i], lin[j] + rin[j]), l_max);
			lout[j] = clip(box_f(rin[i], lin[i]) + lin[j], l_max);
		}
	}
}

// R-messages of stage s+1 from R at s and L at s+1, from first_row's group on.
inline void update_stage_left_to_right(StageMessages &m, int s, int first_row = 0)
{
	auto rin = m.R(s);
	auto lin = m.L(s + 1);
	auto rout = m.R(s + 1);
	const int half = 1 << (s - 1);
	const double l_max = m.l_max();
	for (int g = first_row / (2 * half) * (2 * half); g < m.length(); g += 2 * half) {
		for (int i = g; i < g + half; ++i) {
			int j = i + half;
			rout[i] = clip(box_f(rin[i], lin[j] + rin[j]), l_max);
			rout[j] = clip(box_f(rin[i], lin[i]) + rin[j], l_max);
		}
	}
}

inline void propagate_right_to_left(StageMessages &m, int from_stage, int to_stage)
{
	require(to_stage >= 1 && to_stage < from_stage && from_stage <= m.n() + 1, "propagate_right_to_left: invalid stage range");
	for (int s = from_stage - 1; s >= to_stage; --s)
		update_stage_right_to_left(m, s);
}

inline void propagate_left_to_right(StageMessages &m, int from_stage, int to_stage)
{
	require(from_stage >= 1 && from_stage < to_stage && to_stage <= m.n() + 1, "propagate_left_to_right: invalid stage range");
	for (int s = from_stage; s < to_stage; ++s)
		update_stage_left_to_right(m, s);
}

struct BpConfig
{
	int iterations = 50;
	double l_max = default_l_max;
	bool early_stop = false;
};

struct BpResult
{
	Bits u_hat;
	Bits x_hat;
	Llrs soft_u;
	int iterations_run = 0;
};

inline BpResult bp_decode(std::span<const double> llr, const CodeSpec &spec, const BpConfig &cfg = {})
{
	require(cfg.iterations >= 1, "bp_decode: need at least one iteration");
	auto msgs = StageMessages::initialized(llr, spec, cfg.l_max);
	const int last = spec.n() + 1;
	BpResult res;
	res.soft_u.assign(spec.length(), 0.0);
	res.u_hat.assign(spec.length(), 0);
	for (int it = 0; it < cfg.iterations; ++it) {
		if (last > 1) {
			propagate_left_to_right(msgs, 1, last);
			propagate_right_to_left(msgs, last, 1);
		}
		res.iterations_run = it + 1;
		if (cfg.early_stop) {
			auto lu = msgs.L(1), ru = msgs.R(1);
			for (int i = 0; i < spec.length(); ++i)
				res.u_hat[i] = spec.is_frozen(i) ? 0 : (lu[i] + ru[i] < 0.0);
			Bits x = polar_transform(std::span<const std::uint8_t>(res.u_hat));
			auto lx = msgs.L(last), rx = msgs.R(last);
			bool consistent = true;
			for (int i = 0; i < spec.length() && consistent; ++i)
				consistent = x[i] == (lx[i] + rx[i] < 0.0);
			if (consistent)
				break;
		}
	}
	auto lu = msgs.L(1), ru = msgs.R(1);
	for (int i = 0; i < spec.length(); ++i) {
		res.soft_u[i] = lu[i] + ru[i];
		res.u_hat[i] = spec.is_frozen(i) ? 0 : (res.soft_u[i] < 0.0);
	}
	res.x_hat = polar_transform(std::span<const std::uint8_t>(res.u_hat));
	return res;
}

} // namespace pnn
