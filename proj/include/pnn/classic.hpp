/*
Successive cancellation, successive cancellation list and brute-force
codebook decoders

SC and SCL use the min-sum f-function and the hard path-metric penalty
(|llr| whenever a decision contradicts the LLR sign). With that pair the
metric of a complete path equals the correlation discrepancy of its codeword,
so a list that never prunes is a maximum-likelihood decoder.
*/

#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "bp.hpp"
#include "error.hpp"
#include "polar.hpp"

namespace pnn {

namespace detail {

inline void sc_node(std::span<const double> alpha, const std::uint8_t *frozen, std::uint8_t *u, std::uint8_t *x, std::vector<std::vector<double>> &buf, int depth)
{
	const std::size_t size = alpha.size();
	if (size == 1) {
		std::uint8_t bit = frozen[0] ? 0 : alpha[0] < 0.0;
		u[0] = bit;
		x[0] = bit;
		return;
	}
	const std::size_t half = size / 2;
	std::span<double> child(buf[depth + 1].data(), half);
	for (std::size_t i = 0; i < half; ++i)
		child[i] = min_sum(alpha[i], alpha[i + half]);
	sc_node(child, frozen, u, x, buf, depth + 1);
	for (std::size_t i = 0; i < half; ++i)
		child[i] = alpha[i + half] + (x[i] ? -alpha[i] : alpha[i]);
	sc_node(child, frozen + half, u + half, x + half, buf, depth + 1);
	for (std::size_t i = 0; i < half; ++i)
		x[i] ^= x[i + half];
}

} // namespace detail

inline Bits sc_decode(std::span<const double> llr, const CodeSpec &spec)
{
	require(static_cast<int>(llr.size()) == spec.length(), "sc_decode: LLR length does not match code length");
	std::vector<std::vector<double>> buf(spec.n() + 1);
	for (int d = 0; d <= spec.n(); ++d)
		buf[d].resize(spec.length() >> d);
	Bits u(spec.length()), x(spec.length());
	detail::sc_node(llr, spec.frozen_mask().data(), u.data(), x.data(), buf, 0);
	return u;
}

// List decoder with copy-on-write per-depth storage (Tal-Vardy style lazy copying).
class SclDecoder
{
public:
	SclDecoder(const CodeSpec &spec, int list_size) : spec_(spec), n_(spec.n()), length_(spec.length()), list_(list_size)
	{
		require(list_size >= 1, "scl_decode: list size must be at least 1");
		alpha_.resize(n_ + 1);
		beta_.resize(n_ + 1);
		refs_.resize(n_ + 1);
		for (int d = 0; d <= n_; ++d) {
			alpha_[d].assign(static_cast<std::size_t>(list_) * (length_ >> d), 0.0);
			beta_[d].assign(static_cast<std::size_t>(list_) * (length_ >> d), 0);
			refs_[d].assign(list_, 0);
		}
		slot_.assign(static_cast<std::size_t>(list_) * (n_ + 1), 0);
		frozen_before_.assign(length_ + 1, 0);
		for (int i = 0; i < length_; ++i)
			frozen_before_[i + 1] = frozen_before_[i] + spec.is_frozen(i);
		metric_.assign(list_, 0.0);
	}

	Bits decode(std::span<const double> llr)
	{
		require(static_cast<int>(llr.size()) == length_, "scl_decode: LLR length does not match code length");
		channel_ = llr;
		for (auto &r : refs_)
			std::fill(r.begin(), r.end(), 0);
		active_.clear();
		free_.clear();
		for (int p = list_ - 1; p >= 1; --p)
			free_.push_back(p);
		active_.push_back(0);
		metric_[0] = 0.0;
		for (int d = 0; d <= n_; ++d) {
			slot_[d] = 0;
			refs_[d][0] = 1;
		}
		node(0, 0);
		int best = active_.front();
		for (int p : active_)
			if (metric_[p] < metric_[best] || (metric_[p] == metric_[best] && p < best))
				best = p;
		const std::uint8_t *x = beta(best, 0);
		Bits u(x, x + length_);
		polar_transform(std::span<std::uint8_t>(u));
		return u;
	}

private:
	int &slot(int p, int d) { return slot_[static_cast<std::size_t>(p) * (n_ + 1) + d]; }
	std::size_t width(int d) const { return static_cast<std::size_t>(length_ >> d); }

	const double *alpha(int p, int d)
	{
		if (d == 0)
			return channel_.data();
		return alpha_[d].data() + slot(p, d) * width(d);
	}
	const std::uint8_t *beta(int p, int d) { return beta_[d].data() + slot(p, d) * width(d); }

	// alpha and beta of a depth share one slot; a private copy carries over
	// whichever of the two is still live
	int take_private(int p, int d, bool keep_alpha, bool keep_beta)
	{
		int s = slot(p, d);
		if (refs_[d][s] == 1)
			return s;
		int t = 0;
		while (refs_[d][t] != 0)
			++t;
		--refs_[d][s];
		refs_[d][t] = 1;
		slot(p, d) = t;
		const std::size_t w = width(d);
		if (keep_alpha)
			std::memcpy(alpha_[d].data() + t * w, alpha_[d].data() + s * w, w * sizeof(double));
		if (keep_beta)
			std::memcpy(beta_[d].data() + t * w, beta_[d].data() + s * w, w);
		return t;
	}

	void node(int d, int offset)
	{
		if (d == n_) {
			leaf(offset);
			return;
		}
		const std::size_t w = width(d), half = w / 2;
		if (frozen_before_[offset + w] - frozen_before_[offset] == static_cast<int>(w)) {
			// frozen subtree: all zeros, penalty is the correlation discrepancy of 0
			for (int p : active_) {
				const double *a = alpha(p, d);
				for (std::size_t i = 0; i < w; ++i)
					if (a[i] < 0.0)
						metric_[p] -= a[i];
				std::uint8_t *b = beta_[d].data() + take_private(p, d, false, false) * w;
				std::memset(b, 0, w);
			}
			return;
		}
		for (int p : active_) {
			const double *a = alpha(p, d);
			double *c = alpha_[d + 1].data() + take_private(p, d + 1, false, false) * half;
			for (std::size_t i = 0; i < half; ++i)
				c[i] = min_sum(a[i], a[i + half]);
		}
		node(d + 1, offset);
		for (int p : active_) {
			const std::uint8_t *left = beta(p, d + 1);
			std::uint8_t *b = beta_[d].data() + take_private(p, d, true, false) * w;
			std::memcpy(b, left, half);
			const double *a = alpha(p, d);
			double *c = alpha_[d + 1].data() + take_private(p, d + 1, false, false) * half;
			for (std::size_t i = 0; i < half; ++i)
				c[i] = a[i + half] + std::bit_cast<double>(std::bit_cast<std::uint64_t>(a[i]) ^ (std::uint64_t{b[i]} << 63));
		}
		node(d + 1, offset + static_cast<int>(half));
		for (int p : active_) {
			const std::uint8_t *right = beta(p, d + 1);
			std::uint8_t *b = beta_[d].data() + take_private(p, d, false, true) * w;
			for (std::size_t i = 0; i < half; ++i) {
				b[i] ^= right[i];
				b[i + half] = right[i];
			}
		}
	}

	void leaf(int index)
	{
		if (spec_.is_frozen(index)) {
			for (int p : active_) {
				double a = alpha(p, n_)[0];
				if (a < 0.0)
					metric_[p] -= a;
				beta_[n_][take_private(p, n_, false, false)] = 0;
			}
			return;
		}
		// candidate 2p+b extends path p with bit b
		std::sort(active_.begin(), active_.end());
		candidates_.clear();
		for (int p : active_) {
			double a = alpha(p, n_)[0];
			candidates_.push_back({metric_[p] + (a < 0.0 ? -a : 0.0), 2 * p});
			candidates_.push_back({metric_[p] + (a > 0.0 ? a : 0.0), 2 * p + 1});
		}
		std::size_t keep = std::min<std::size_t>(list_, candidates_.size());
		auto by_metric = [](const Candidate &a, const Candidate &b) { return a.metric < b.metric || (a.metric == b.metric && a.id < b.id); };
		if (keep < candidates_.size())
			std::nth_element(candidates_.begin(), candidates_.begin() + keep, candidates_.end(), by_metric);
		chosen_.assign(2 * static_cast<std::size_t>(list_), 0);
		chosen_metric_.assign(2 * static_cast<std::size_t>(list_), 0.0);
		for (std::size_t c = 0; c < keep; ++c) {
			chosen_[candidates_[c].id] = 1;
			chosen_metric_[candidates_[c].id] = candidates_[c].metric;
		}
		std::vector<int> survivors;
		for (int p : active_) {
			if (!chosen_[2 * p] && !chosen_[2 * p + 1])
				kill(p);
			else
				survivors.push_back(p);
		}
		active_ = survivors;
		for (int p : survivors) {
			bool zero = chosen_[2 * p], one = chosen_[2 * p + 1];
			if (zero && one) {
				int q = clone(p);
				metric_[q] = chosen_metric_[2 * p + 1];
				beta_[n_][take_private(q, n_, false, false)] = 1;
			}
			metric_[p] = chosen_metric_[zero ? 2 * p : 2 * p + 1];
			beta_[n_][take_private(p, n_, false, false)] = zero ? 0 : 1;
		}
	}

	void kill(int p)
	{
		for (int d = 0; d <= n_; ++d)
			--refs_[d][slot(p, d)];
		free_.push_back(p);
	}

	int clone(int p)
	{
		int q = free_.back();
		free_.pop_back();
		for (int d = 0; d <= n_; ++d) {
			slot(q, d) = slot(p, d);
			++refs_[d][slot(p, d)];
		}
		active_.push_back(q);
		return q;
	}

	struct Candidate
	{
		double metric;
		int id;
	};

	CodeSpec spec_;
	int n_;
	int length_;
	int list_;
	std::span<const double> channel_;
	std::vector<std::vector<double>> alpha_;
	std::vector<std::vector<std::uint8_t>> beta_;
	std::vector<std::vector<int>> refs_;
	std::vector<int> slot_;
	std::vector<int> frozen_before_;
	std::vector<double> metric_;
	std::vector<int> active_;
	std::vector<int> free_;
	std::vector<Candidate> candidates_;
	std::vector<std::uint8_t> chosen_;
	std::vector<double> chosen_metric_;
};

inline Bits scl_decode(std::span<const double> llr, const CodeSpec &spec, int list_size)
{
	return SclDecoder(spec, list_size).decode(llr);
}

// Exhaustive decoder over all 2^k codewords, visited in Gray-code order.
// Info patterns are numbered with the first info position as the most
// significant bit, so a smaller pattern is a lexicographically smaller u.
class CodebookDecoder
{
public:
	static constexpr int max_info_bits = 24;

	explicit CodebookDecoder(const CodeSpec &spec) : spec_(spec)
	{
		require(spec.info_count() <= max_info_bits, "map_decode: k = " + std::to_string(spec.info_count()) + " exceeds the brute-force limit of " + std::to_string(max_info_bits));
		const int k = spec.info_count();
		for (int j = 0; j < k; ++j) {
			Bits e(spec.length(), 0);
			e[spec.info_positions()[j]] = 1;
			Bits row = polar_transform(std::span<const std::uint8_t>(e));
			std::vector<int> support;
			for (int i = 0; i < spec.length(); ++i)
				if (row[i])
					support.push_back(i);
			// pattern bit (k-1-j) belongs to info position j
			rows_.push_back(std::move(support));
		}
	}

	const CodeSpec &spec() const { return spec_; }

	// Block maximum likelihood: argmax of sum_i (1 - 2 x_i) llr_i.
	Bits decode_block(std::span<const double> llr) const
	{
		check(llr);
		std::uint64_t best_pattern = 0;
		double best = -std::numeric_limits<double>::infinity();
		visit(llr, [&](std::uint64_t pattern, double metric) {
			if (metric > best || (metric == best && pattern < best_pattern)) {
				best = metric;
				best_pattern = pattern;
			}
		});
		return pattern_to_u(best_pattern);
	}

	// P(info bit j = 1 | llr) for every info position, by exact marginalization.
	std::vector<double> posteriors(std::span<const double> llr) const
	{
		check(llr);
		const int k = spec_.info_count();
		std::vector<double> metrics;
		std::vector<std::uint64_t> patterns;
		metrics.reserve(std::size_t{1} << k);
		patterns.reserve(std::size_t{1} << k);
		visit(llr, [&](std::uint64_t pattern, double metric) {
			metrics.push_back(metric);
			patterns.push_back(pattern);
		});
		double top = *std::max_element(metrics.begin(), metrics.end());
		std::vector<double> ones(k, 0.0);
		double total = 0.0;
		for (std::size_t c = 0; c < metrics.size(); ++c) {
			// P(x|y) is proportional to exp(correlation / 2)
			double w = std::exp(0.5 * (metrics[c] - top));
			total += w;
			for (int j = 0; j < k; ++j)
				if ((patterns[c] >> (k - 1 - j)) & 1)
					ones[j] += w;
		}
		for (double &v : ones)
			v /= total;
		return ones;
	}

	Bits decode_bitwise(std::span<const double> llr) const
	{
		auto post = posteriors(llr);
		Bits info(post.size());
		for (std::size_t j = 0; j < post.size(); ++j)
			info[j] = post[j] > 0.5;
		return expand_info(info, spec_);
	}

private:
	void check(std::span<const double> llr) const
	{
		require(static_cast<int>(llr.size()) == spec_.length(), "map_decode: LLR length does not match code length");
	}

	template <typename Visitor>
	void visit(std::span<const double> llr, Visitor &&fn) const
	{
		const int k = spec_.info_count();
		std::vector<double> signed_llr(llr.begin(), llr.end());
		double metric = std::accumulate(llr.begin(), llr.end(), 0.0);
		std::uint64_t pattern = 0;
		fn(pattern, metric);
		const std::uint64_t count = std::uint64_t{1} << k;
		for (std::uint64_t c = 1; c < count; ++c) {
			int flip = std::countr_zero(c);
			int j = k - 1 - flip;
			pattern ^= std::uint64_t{1} << flip;
			for (int i : rows_[j]) {
				metric -= 2.0 * signed_llr[i];
				signed_llr[i] = -signed_llr[i];
			}
			fn(pattern, metric);
		}
	}

	Bits pattern_to_u(std::uint64_t pattern) const
	{
		const int k = spec_.info_count();
		Bits info(k);
		for (int j = 0; j < k; ++j)
			info[j] = (pattern >> (k - 1 - j)) & 1;
		return expand_info(info, spec_);
	}

	CodeSpec spec_;
	std::vector<std::vector<int>> rows_;
};

inline Bits map_decode(std::span<const double> llr, const CodeSpec &spec) { return CodebookDecoder(spec).decode_block(llr); }

inline Bits bitwise_map_decode(std::span<const double> llr, const CodeSpec &spec) { return CodebookDecoder(spec).decode_bitwise(llr); }

} // namespace pnn
