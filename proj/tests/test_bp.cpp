#include <gtest/gtest.h>

#include <cmath>

#include "pnn/bp.hpp"
#include "pnn/classic.hpp"

using namespace pnn;

namespace {

double f_closed(double a, double b) { return std::log((1.0 + std::exp(a + b)) / (std::exp(a) + std::exp(b))); }

} // namespace

TEST(BoxF, Values)
{
	for (double b : {-50.0, -3.0, 0.0, 0.5, 7.0, 800.0})
		EXPECT_EQ(box_f(0.0, b), 0.0);
	EXPECT_NEAR(box_f(2.0, 2.0), 1.3251, 1e-4);
	EXPECT_NEAR(box_f(2.0, 2.0), f_closed(2.0, 2.0), 1e-12);
	EXPECT_NEAR(box_f(3.0, 3.0), f_closed(3.0, 3.0), 1e-12);
	EXPECT_NEAR(box_f(3.0, 3.0), 2.3048, 5e-3);
}

TEST(BoxF, SymmetricAndStable)
{
	auto rng = derive_stream(4, 4);
	std::uniform_real_distribution<double> d(-30.0, 30.0);
	for (int t = 0; t < 1000; ++t) {
		double a = d(rng), b = d(rng);
		EXPECT_DOUBLE_EQ(box_f(a, b), box_f(b, a));
		EXPECT_NEAR(box_f(a, b), f_closed(a, b), 1e-9);
	}
	for (double a : {-1000.0, 1000.0})
		for (double b : {-1000.0, -999.0, 999.0, 1000.0}) {
			double v = box_f(a, b);
			EXPECT_TRUE(std::isfinite(v));
			EXPECT_LE(std::abs(v), 1000.0);
		}
}

TEST(BoxF, MinSumProximityGrid)
{
	for (int i = 0; i <= 200; ++i)
		for (int j = 0; j <= 200; ++j) {
			double a = -20.0 + 0.2 * i, b = -20.0 + 0.2 * j;
			ASSERT_LE(std::abs(box_f(a, b) - min_sum(a, b)), std::log(2.0) + 1e-12) << a << ' ' << b;
		}
}

TEST(PeUpdate, Examples)
{
	auto zero = pe_update({});
	EXPECT_EQ(zero.l_out1, 0.0);
	EXPECT_EQ(zero.l_out2, 0.0);
	EXPECT_EQ(zero.r_out1, 0.0);
	EXPECT_EQ(zero.r_out2, 0.0);

	auto o = pe_update({3.0, 3.0, 0.0, 0.0});
	EXPECT_NEAR(o.l_out1, f_closed(3.0, 3.0), 1e-12);
	EXPECT_DOUBLE_EQ(o.l_out2, 3.0);

	auto big = pe_update({1e3, 1e3, 1e3, 1e3}, 20.0);
	for (double v : {big.l_out1, big.l_out2, big.r_out1, big.r_out2}) {
		EXPECT_TRUE(std::isfinite(v));
		EXPECT_LE(std::abs(v), 20.0);
	}
}

TEST(Propagation, SinglePeByHand)
{
	CodeSpec spec(2, {0});
	const double a = 1.3, b = -0.4, l_max = 20.0;
	auto m = StageMessages::initialized(std::vector<double>{a, b}, spec, l_max);
	propagate_right_to_left(m, 2, 1);
	EXPECT_NEAR(m.L(1)[0], f_closed(a, b), 1e-12);
	EXPECT_NEAR(m.L(1)[1], f_closed(l_max, a) + b, 1e-12);
	auto again = m;
	propagate_right_to_left(again, 2, 1);
	EXPECT_EQ(std::vector<double>(again.L(1).begin(), again.L(1).end()), std::vector<double>(m.L(1).begin(), m.L(1).end()));
}

TEST(Propagation, LeftToRightByHand)
{
	StageMessages m(1, 20.0);
	m.R(1)[0] = 20.0;
	propagate_left_to_right(m, 1, 2);
	EXPECT_EQ(m.R(2)[0], 0.0);
	EXPECT_EQ(m.R(2)[1], 0.0);
}

TEST(Propagation, ZeroInZeroOutAndRanges)
{
	StageMessages m(4);
	propagate_right_to_left(m, 5, 1);
	propagate_left_to_right(m, 1, 5);
	EXPECT_EQ(m.max_abs(), 0.0);
	EXPECT_THROW(propagate_right_to_left(m, 1, 2), Error);
	EXPECT_THROW(propagate_right_to_left(m, 6, 1), Error);
	EXPECT_THROW(propagate_left_to_right(m, 3, 3), Error);
	EXPECT_THROW(propagate_left_to_right(m, 0, 2), Error);
}

TEST(Propagation, StagesAreLocalToAlignedBlocks)
{
	// Rows of an aligned block of size 2^b only meet each other in stages 1..b.
	const int n = 6;
	for (int b = 1; b < n; ++b) {
		const int size = 1 << b;
		auto rng = derive_stream(8, b);
		std::normal_distribution<double> g(0.0, 3.0);
		StageMessages m(n);
		for (int s = 1; s <= n + 1; ++s)
			for (int i = 0; i < m.length(); ++i) {
				m.L(s)[i] = g(rng);
				m.R(s)[i] = g(rng);
			}
		StageMessages masked = m;
		const int block = 1; // rows [size, 2 size)
		for (int s = 1; s <= b + 1; ++s)
			for (int i = 0; i < m.length(); ++i)
				if (i / size != block) {
					masked.L(s)[i] = 0.0;
					masked.R(s)[i] = 0.0;
				}
		propagate_right_to_left(m, b + 1, 1);
		propagate_right_to_left(masked, b + 1, 1);
		propagate_left_to_right(m, 1, b + 1);
		propagate_left_to_right(masked, 1, b + 1);
		for (int s = 1; s <= b + 1; ++s)
			for (int i = block * size; i < (block + 1) * size; ++i) {
				ASSERT_EQ(m.L(s)[i], masked.L(s)[i]);
				ASSERT_EQ(m.R(s)[i], masked.R(s)[i]);
			}
	}
}

TEST(BpDecode, Noiseless)
{
	auto spec = construct_frozen_set(64, 32);
	BpConfig one{1};
	EXPECT_EQ(bp_decode(Llrs(64, 20.0), spec, one).u_hat, Bits(64, 0));

	auto rng = derive_stream(2, 2);
	for (int t = 0; t < 20; ++t) {
		Bits u = expand_info(random_bits(32, rng), spec);
		Bits x = encode(u, spec);
		Llrs llr(64);
		for (int i = 0; i < 64; ++i)
			llr[i] = x[i] ? -20.0 : 20.0;
		auto r = bp_decode(llr, spec);
		EXPECT_EQ(r.u_hat, u);
		EXPECT_EQ(r.x_hat, x);
	}
}

TEST(BpDecode, TwoBitCode)
{
	CodeSpec spec(2, {0});
	auto r = bp_decode(std::vector<double>{1.0, 3.0}, spec);
	EXPECT_EQ(r.u_hat, (Bits{0, 0}));
	EXPECT_GT(r.soft_u[1], 0.0);
	EXPECT_EQ(r.u_hat, map_decode(std::vector<double>{1.0, 3.0}, spec));
}

TEST(BpDecode, ClippingHoldsOnRandomFrames)
{
	auto spec = construct_frozen_set(32, 16);
	auto rng = derive_stream(5, 5);
	std::normal_distribution<double> g(0.0, 30.0);
	for (int t = 0; t < 50; ++t) {
		Llrs llr(32);
		for (auto &v : llr)
			v = g(rng);
		auto m = StageMessages::initialized(llr, spec, 7.5);
		for (int it = 0; it < 5; ++it) {
			propagate_left_to_right(m, 1, 6);
			ASSERT_LE(m.max_abs(), 7.5);
			propagate_right_to_left(m, 6, 1);
			ASSERT_LE(m.max_abs(), 7.5);
		}
	}
}

TEST(BpDecode, RateOneSymmetry)
{
	CodeSpec spec(4, {});
	auto rng = derive_stream(6, 6);
	std::normal_distribution<double> g(0.0, 2.0);
	for (int t = 0; t < 200; ++t) {
		Llrs llr(4), neg(4);
		for (int i = 0; i < 4; ++i) {
			llr[i] = g(rng);
			if (std::abs(llr[i]) < 1e-3)
				llr[i] = 0.5;
			neg[i] = -llr[i];
		}
		auto a = bp_decode(llr, spec).x_hat, b = bp_decode(neg, spec).x_hat;
		for (int i = 0; i < 4; ++i)
			ASSERT_EQ(a[i], 1 - b[i]);
	}
}

TEST(BpDecode, BerImprovesWithSnr)
{
	CodeSpec spec = construct_frozen_set(8, 4);
	auto ber = [&](double db) {
		long errors = 0;
		double sigma = ebn0_to_sigma(db, spec.rate());
		for (int f = 0; f < 10000; ++f) {
			auto rng = derive_stream(17, f);
			Bits info = random_bits(4, rng);
			auto llr = to_llr(add_awgn(modulate_bpsk(encode(expand_info(info, spec), spec)), sigma, rng), sigma);
			auto got = extract_info(bp_decode(llr, spec).u_hat, spec);
			for (int j = 0; j < 4; ++j)
				errors += got[j] != info[j];
		}
		return errors / 40000.0;
	};
	EXPECT_LT(ber(4.0), ber(0.0));
}

TEST(BpDecode, AgreesWithMapAtHighSnr)
{
	for (auto [length, k] : {std::pair{8, 4}, std::pair{16, 8}}) {
		CodeSpec spec = construct_frozen_set(length, k);
		CodebookDecoder ml(spec);
		double sigma = ebn0_to_sigma(6.0, spec.rate());
		int agree = 0;
		const int frames = 2000;
		for (int f = 0; f < frames; ++f) {
			auto rng = derive_stream(21, f);
			auto llr = to_llr(add_awgn(modulate_bpsk(encode(expand_info(random_bits(k, rng), spec), spec)), sigma, rng), sigma);
			agree += bp_decode(llr, spec).u_hat == ml.decode_block(llr);
		}
		EXPECT_GE(agree, 0.95 * frames) << "N=" << length;
	}
}

TEST(BpDecode, EarlyStopping)
{
	auto spec = construct_frozen_set(64, 32);
	BpConfig cfg;
	cfg.early_stop = true;
	auto r = bp_decode(Llrs(64, 20.0), spec, cfg);
	EXPECT_EQ(r.iterations_run, 1);
	EXPECT_EQ(r.u_hat, Bits(64, 0));
	EXPECT_THROW(bp_decode(Llrs(63, 1.0), spec), Error);
	BpConfig none{0};
	EXPECT_THROW(bp_decode(Llrs(64, 1.0), spec, none), Error);
}
