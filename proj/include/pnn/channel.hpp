#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "error.hpp"
#include "polar.hpp"

namespace pnn {

using RandomStream = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x)
{
	x += 0x9e3779b97f4a7c15ULL;
	x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
	x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
	return x ^ (x >> 31);
}

// Independent stream for (seed, a, b); lets any worker regenerate frame b of
// point a without touching shared state.
inline RandomStream derive_stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0)
{
	return RandomStream(splitmix64(splitmix64(splitmix64(seed) ^ a) ^ b));
}

// bit 0 -> +1, bit 1 -> -1
inline std::vector<double> modulate_bpsk(std::span<const std::uint8_t> bits)
{
	std::vector<double> s(bits.size());
	for (std::size_t i = 0; i < bits.size(); ++i) {
		require(bits[i] <= 1, "modulate_bpsk: bits must be 0 or 1");
		s[i] = bits[i] ? -1.0 : 1.0;
	}
	return s;
}

inline std::vector<double> add_awgn(std::span<const double> symbols, double sigma, RandomStream &rng)
{
	require(sigma > 0.0, "add_awgn: sigma must be positive");
	std::normal_distribution<double> gauss(0.0, 1.0);
	std::vector<double> y(symbols.begin(), symbols.end());
	for (double &v : y)
		v += sigma * gauss(rng);
	return y;
}

inline Llrs to_llr(std::span<const double> y, double sigma)
{
	require(sigma > 0.0, "to_llr: sigma must be positive");
	double scale = 2.0 / (sigma * sigma);
	Llrs llr(y.size());
	for (std::size_t i = 0; i < y.size(); ++i)
		llr[i] = scale * y[i];
	return llr;
}

// Unit symbol energy, Eb = 1/rate.
inline double ebn0_to_sigma(double ebn0_db, double rate)
{
	require(rate > 0.0 && rate <= 1.0, "ebn0_to_sigma: rate must lie in (0, 1]");
	return std::sqrt(1.0 / (2.0 * rate * std::pow(10.0, ebn0_db / 10.0)));
}

inline Bits hard_decision(std::span<const double> llr)
{
	Bits b(llr.size());
	for (std::size_t i = 0; i < llr.size(); ++i)
		b[i] = llr[i] < 0.0;
	return b;
}

inline Bits random_bits(std::size_t count, RandomStream &rng)
{
	Bits b(count);
	std::uint64_t word = 0;
	for (std::size_t i = 0; i < count; ++i) {
		if (i % 64 == 0)
			word = rng();
		b[i] = static_cast<std::uint8_t>(word & 1);
		word >>= 1;
	}
	return b;
}

} // namespace pnn
