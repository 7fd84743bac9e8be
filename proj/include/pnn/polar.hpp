/*
Polar code construction and encoding in natural bit order

Stage 1 of the factor graph sits on the u-side, stage n+1 on the channel side.
The encoder layer between stage s and s+1 combines indices at distance
2^(s-1), so the first log2(B) stages never cross an aligned block of size B.
*/

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "error.hpp"

namespace pnn {

using Bits = std::vector<std::uint8_t>;
using Llrs = std::vector<double>;

inline bool is_power_of_two(long v) { return v > 0 && (v & (v - 1)) == 0; }

inline int log2_exact(long v)
{
	require(is_power_of_two(v), "length " + std::to_string(v) + " is not a power of two");
	int n = 0;
	while ((1L << n) < v)
		++n;
	return n;
}

class CodeSpec
{
public:
	CodeSpec() : CodeSpec(1, {}) {}

	CodeSpec(int length, std::vector<int> frozen_indices) : frozen_(std::move(frozen_indices))
	{
		n_ = log2_exact(length);
		length_ = length;
		mask_.assign(length_, 0);
		for (std::size_t i = 0; i < frozen_.size(); ++i) {
			int f = frozen_[i];
			require(f >= 0 && f < length_, "frozen index " + std::to_string(f) + " out of range");
			require(i == 0 || frozen_[i - 1] < f, "frozen indices must be strictly increasing");
			mask_[f] = 1;
		}
		for (int i = 0; i < length_; ++i)
			if (!mask_[i])
				info_.push_back(i);
	}

	int n() const { return n_; }
	int length() const { return length_; }
	int info_count() const { return static_cast<int>(info_.size()); }
	double rate() const { return static_cast<double>(info_count()) / length_; }
	const std::vector<int> &frozen() const { return frozen_; }
	const std::vector<int> &info_positions() const { return info_; }
	bool is_frozen(int i) const { return mask_[i] != 0; }
	std::span<const std::uint8_t> frozen_mask() const { return mask_; }

	friend bool operator==(const CodeSpec &a, const CodeSpec &b) { return a.length_ == b.length_ && a.frozen_ == b.frozen_; }

private:
	int n_ = 0;
	int length_ = 1;
	std::vector<int> frozen_;
	std::vector<int> info_;
	std::vector<std::uint8_t> mask_;
};

// One encoder layer: v[j] ^= v[j + half] inside every aligned group of 2*half.
inline void butterfly_layer(std::span<std::uint8_t> v, std::size_t half)
{
	for (std::size_t i = 0; i < v.size(); i += 2 * half)
		for (std::size_t j = i; j < i + half; ++j)
			v[j] ^= v[j + half];
}

// In-place x = u * F^{(x)n}. Self-inverse over GF(2).
inline void polar_transform(std::span<std::uint8_t> v)
{
	require(is_power_of_two(static_cast<long>(v.size())), "transform length must be a power of two");
	for (std::size_t half = 1; half < v.size(); half *= 2)
		butterfly_layer(v, half);
}

inline Bits polar_transform(std::span<const std::uint8_t> u)
{
	Bits x(u.begin(), u.end());
	polar_transform(std::span<std::uint8_t>(x));
	return x;
}

inline Bits encode(std::span<const std::uint8_t> u, const CodeSpec &spec)
{
	require(static_cast<int>(u.size()) == spec.length(), "encode: expected " + std::to_string(spec.length()) + " bits, got " + std::to_string(u.size()));
	for (int f : spec.frozen())
		require(u[f] == 0, "encode: frozen position " + std::to_string(f) + " is nonzero");
	return polar_transform(u);
}

inline Bits expand_info(std::span<const std::uint8_t> info, const CodeSpec &spec)
{
	require(static_cast<int>(info.size()) == spec.info_count(), "expand_info: expected " + std::to_string(spec.info_count()) + " bits, got " + std::to_string(info.size()));
	Bits u(spec.length(), 0);
	const auto &pos = spec.info_positions();
	for (std::size_t i = 0; i < pos.size(); ++i)
		u[pos[i]] = info[i];
	return u;
}

inline Bits extract_info(std::span<const std::uint8_t> u, const CodeSpec &spec)
{
	require(static_cast<int>(u.size()) == spec.length(), "extract_info: expected " + std::to_string(spec.length()) + " bits, got " + std::to_string(u.size()));
	Bits info;
	info.reserve(spec.info_count());
	for (int p : spec.info_positions())
		info.push_back(u[p]);
	return info;
}

struct ConstructionParams
{
	double erasure_probability = 0.5;
};

// Natural-order log Bhattacharyya parameters of the synthetic channels of BEC(eps).
// Log domain keeps the ordering meaningful at N = 1024 where Z underflows.
inline std::vector<double> bhattacharyya_log(int length, double eps)
{
	int n = log2_exact(length);
	require(eps > 0.0 && eps < 1.0, "erasure probability must lie in (0, 1)");
	std::vector<double> z{std::log(eps)};
	for (int level = 0; level < n; ++level) {
		std::vector<double> next;
		next.reserve(2 * z.size());
		for (double lz : z) {
			// 2Z - Z^2 = 1 - (1 - Z)^2
			double one_minus = -std::expm1(lz);
			next.push_back(std::log1p(-one_minus * one_minus));
			next.push_back(2.0 * lz);
		}
		z = std::move(next);
	}
	return z;
}

inline CodeSpec construct_frozen_set(int length, int info_bits, const ConstructionParams &design = {})
{
	require(is_power_of_two(length), "block length " + std::to_string(length) + " is not a power of two");
	require(info_bits >= 0 && info_bits <= length, "information bit count out of range");
	auto z = bhattacharyya_log(length, design.erasure_probability);
	std::vector<int> order(length);
	std::iota(order.begin(), order.end(), 0);
	// least reliable first; equal Z freezes the smaller index first
	std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return z[a] > z[b]; });
	std::vector<int> frozen(order.begin(), order.begin() + (length - info_bits));
	std::sort(frozen.begin(), frozen.end());
	return CodeSpec(length, std::move(frozen));
}

// Frozen-set file: "N k" on line 1, ascending frozen indices on line 2.
inline void write_code_spec(std::ostream &os, const CodeSpec &spec)
{
	os << spec.length() << ' ' << spec.info_count() << '\n';
	for (std::size_t i = 0; i < spec.frozen().size(); ++i)
		os << (i ? " " : "") << spec.frozen()[i];
	os << '\n';
}

inline CodeSpec read_code_spec(std::istream &is)
{
	std::string header;
	require(static_cast<bool>(std::getline(is, header)), "code spec: missing header line");
	std::istringstream hs(header);
	long length = 0, k = -1;
	require(static_cast<bool>(hs >> length >> k), "code spec: header must be 'N k'");
	require(is_power_of_two(length), "code spec: N is not a power of two");
	require(k >= 0 && k <= length, "code spec: k out of range");
	std::string line;
	std::getline(is, line);
	std::istringstream ls(line);
	std::vector<int> frozen{std::istream_iterator<int>(ls), std::istream_iterator<int>()};
	require(ls.eof(), "code spec: malformed frozen index list");
	require(static_cast<long>(frozen.size()) == length - k, "code spec: expected " + std::to_string(length - k) + " frozen indices, found " + std::to_string(frozen.size()));
	return CodeSpec(static_cast<int>(length), std::move(frozen));
}

inline void save_code_spec(const std::filesystem::path &path, const CodeSpec &spec)
{
	std::ofstream os(path);
	require(static_cast<bool>(os), "cannot write " + path.string());
	write_code_spec(os, spec);
}

inline CodeSpec load_code_spec(const std::filesystem::path &path)
{
	std::ifstream is(path);
	require(static_cast<bool>(is), "cannot read " + path.string());
	return read_code_spec(is);
}

} // namespace pnn
