#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <sstream>

#include "pnn/harness.hpp"

using namespace pnn;

namespace {

SweepConfig small_sweep(std::vector<double> grid, long max_frames, std::uint64_t seed = 7)
{
	SweepConfig cfg;
	cfg.snr_grid = std::move(grid);
	cfg.max_frames = max_frames;
	cfg.target_block_errors = 1'000'000'000;
	cfg.seed = seed;
	cfg.workers = 1;
	cfg.chunk_frames = 64;
	return cfg;
}

BerRecord record(double db, double ber, std::string id = "x")
{
	BerRecord r;
	r.decoder = std::move(id);
	r.ebn0_db = db;
	r.frames = 1000;
	r.ber = ber;
	return r;
}

std::string csv_of(const std::vector<BerRecord> &r)
{
	std::ostringstream os;
	write_csv(os, r);
	return os.str();
}

} // namespace

TEST(Sweep, HighSnrIsErrorFree)
{
	auto spec = construct_frozen_set(64, 32);
	auto r = ber_sweep(scl_handle(spec, 4), spec, small_sweep({40.0}, 500));
	EXPECT_EQ(r[0].bit_errors, 0);
	EXPECT_EQ(r[0].ber, 0.0);
	EXPECT_GT(r[0].ci_halfwidth, 0.0);
}

TEST(Sweep, UncodedMatchesQFunction)
{
	CodeSpec spec(1, {});
	DecoderHandle uncoded{"uncoded", [] { return FrameDecoder([](std::span<const double> llr) { return hard_decision(llr); }); }};
	auto r = ber_sweep(uncoded, spec, small_sweep({4.0}, 400000));
	const double q = 0.5 * std::erfc(std::sqrt(std::pow(10.0, 0.4)));
	EXPECT_NEAR(r[0].ber, q, 0.1 * q);
	EXPECT_NEAR(r[0].ber, 1.25e-2, 0.1 * 1.25e-2);
	EXPECT_EQ(r[0].bler, r[0].ber);
}

TEST(Sweep, StopsOnBlockErrors)
{
	auto spec = construct_frozen_set(32, 16);
	auto cfg = small_sweep({0.0, 1.0}, 1'000'000);
	cfg.target_block_errors = 50;
	auto r = ber_sweep(sc_handle(spec), spec, cfg);
	for (const auto &p : r) {
		EXPECT_GE(p.block_errors, 50);
		EXPECT_LT(p.frames, 1'000'000);
		EXPECT_EQ(p.frames % cfg.chunk_frames, 0);
		EXPECT_DOUBLE_EQ(p.bler, static_cast<double>(p.block_errors) / p.frames);
		EXPECT_DOUBLE_EQ(p.ber, static_cast<double>(p.bit_errors) / (p.frames * 16.0));
	}
	cfg.min_frames = 5000;
	auto longer = ber_sweep(sc_handle(spec), spec, cfg);
	EXPECT_GE(longer[0].frames, 5000);
}

TEST(Sweep, DeterministicAcrossRunsAndWorkers)
{
	auto spec = construct_frozen_set(64, 32);
	auto cfg = small_sweep({1.0, 2.0}, 3000);
	cfg.target_block_errors = 40;
	auto one = csv_of(ber_sweep(scl_handle(spec, 4), spec, cfg));
	EXPECT_EQ(one, csv_of(ber_sweep(scl_handle(spec, 4), spec, cfg)));
	for (int w : {2, 3, 5}) {
		cfg.workers = w;
		EXPECT_EQ(one, csv_of(ber_sweep(scl_handle(spec, 4), spec, cfg))) << w << " workers";
	}
	setenv("PNN_WORKERS", "4", 1);
	EXPECT_EQ(resolve_workers(0), 4);
	cfg.workers = 0;
	EXPECT_EQ(one, csv_of(ber_sweep(scl_handle(spec, 4), spec, cfg)));
	unsetenv("PNN_WORKERS");
}

TEST(Sweep, CommonRandomNumbers)
{
	// PSCL with one block is SCL, so shared frames give identical records
	auto spec = construct_frozen_set(128, 64);
	auto cfg = small_sweep({1.0, 2.0}, 1000);
	auto scl = ber_sweep(scl_handle(spec, 8, "same"), spec, cfg);
	auto pscl = ber_sweep(pscl_handle(plan_equal(spec, 1, SubDecoderKind::scl), 8, {}, "same"), spec, cfg);
	EXPECT_EQ(csv_of(scl), csv_of(pscl));
	EXPECT_NEAR(normalized_error(pscl, scl), 1.0, 0.0);
}

TEST(Sweep, InfoBitsOnlyAndErrorsCarryFrame)
{
	auto spec = construct_frozen_set(16, 8);
	// flips every frozen position: must not count
	DecoderHandle frozen_noise{"frozen", [spec] {
		                           auto ml = std::make_shared<CodebookDecoder>(spec);
		                           return FrameDecoder([spec, ml](std::span<const double> llr) {
			                           Bits u = ml->decode_block(llr);
			                           for (int f : spec.frozen())
				                           u[f] = 1;
			                           return u;
		                           });
	                           }};
	auto cfg = small_sweep({30.0}, 200);
	EXPECT_EQ(ber_sweep(frozen_noise, spec, cfg)[0].bit_errors, 0);

	DecoderHandle failing{"failing", [] {
		                      auto calls = std::make_shared<int>(0);
		                      return FrameDecoder([calls](std::span<const double> llr) {
			                      if (++*calls == 37)
				                      throw Error("boom");
			                      return Bits(llr.size(), 0);
		                      });
	                      }};
	try {
		ber_sweep(failing, spec, cfg);
		FAIL() << "decoder failure swallowed";
	} catch (const Error &e) {
		std::string msg = e.what();
		EXPECT_NE(msg.find("frame 36"), std::string::npos) << msg;
		EXPECT_NE(msg.find("failing"), std::string::npos) << msg;
	}
}

TEST(Sweep, RejectsBadConfig)
{
	auto spec = construct_frozen_set(16, 8);
	EXPECT_THROW(ber_sweep(sc_handle(spec), spec, small_sweep({}, 10)), Error);
	EXPECT_THROW(ber_sweep(sc_handle(spec), spec, small_sweep({2.0, 1.0}, 10)), Error);
	EXPECT_THROW(ber_sweep(sc_handle(spec), spec, small_sweep({1.0}, 0)), Error);
}

TEST(NormalizedError, Formula)
{
	std::vector<BerRecord> base{record(1, 0.1), record(2, 0.01), record(3, 0.001)};
	EXPECT_DOUBLE_EQ(normalized_error(base, base), 1.0);
	std::vector<BerRecord> twice{record(1, 0.2), record(2, 0.02), record(3, 0.002)};
	EXPECT_DOUBLE_EQ(normalized_error(twice, base), 2.0);
	std::vector<BerRecord> shifted{record(1.5, 0.1), record(2, 0.01), record(3, 0.001)};
	EXPECT_THROW(normalized_error(shifted, base), Error);
	std::vector<BerRecord> shorter{record(1, 0.1)};
	EXPECT_THROW(normalized_error(shorter, base), Error);
	std::vector<BerRecord> zero{record(1, 0.1), record(2, 0.01), record(3, 0.0)};
	EXPECT_THROW(normalized_error(base, zero), Error);
	EXPECT_DOUBLE_EQ(normalized_error(base, zero, true), 1.0);
}

TEST(NormalizedError, PairedEstimate)
{
	auto spec = construct_frozen_set(64, 32);
	auto cfg = small_sweep({1.0, 2.0}, 4000);
	auto s = paired_sweep({scl_handle(spec, 8), sc_handle(spec), scl_handle(spec, 8, "again")}, spec, cfg);
	auto same = paired_normalized_error(s, 2, 0);
	EXPECT_DOUBLE_EQ(same.ne, 1.0);
	EXPECT_DOUBLE_EQ(same.halfwidth, 0.0);
	auto sc = paired_normalized_error(s, 1, 0);
	EXPECT_DOUBLE_EQ(sc.ne, normalized_error(s.records(1), s.records(0)));
	EXPECT_GT(sc.ne, 1.0);
	EXPECT_GT(sc.halfwidth, 0.0);
	EXPECT_LT(sc.halfwidth, sc.ne - 1.0);
	EXPECT_EQ(s.index_of("again"), 2u);
	EXPECT_THROW(s.index_of("nope"), Error);
	// single-decoder sweeps are the same engine
	EXPECT_EQ(csv_of(s.records(1)), csv_of(ber_sweep(sc_handle(spec), spec, cfg)));
}

TEST(Latency, Formulas)
{
	EXPECT_EQ(latency_syncs(LatencyKind::scl, {128}), 896);
	EXPECT_EQ(latency_syncs(LatencyKind::bp, {128, 5}), 70);
	EXPECT_EQ(latency_syncs(LatencyKind::pnn, {128, 1, 16, 3}), 72);
	for (long n = 16; n <= 1024; n *= 2) {
		long log_n = std::lround(std::log2(n));
		EXPECT_EQ(latency_syncs(LatencyKind::scl, {n}), n * log_n);
		for (long i : {1, 5, 50})
			EXPECT_EQ(latency_syncs(LatencyKind::bp, {n, i}), 2 * i * log_n);
		long m = n / 16;
		EXPECT_EQ(latency_syncs(LatencyKind::pnn, {n, 1, 16, 3}), m * 3 + m * 2 * std::lround(std::log2(m)));
		if (n >= 32)
			EXPECT_GT(latency_syncs(LatencyKind::scl, {n}), latency_syncs(LatencyKind::pnn, {n, 1, 16, 3}));
	}
	EXPECT_LT(latency_syncs(LatencyKind::bp, {128, 1}), latency_syncs(LatencyKind::pnn, {128, 1, 16, 3}));
	EXPECT_THROW(latency_syncs(LatencyKind::scl, {100}), Error);
	EXPECT_THROW(latency_syncs(LatencyKind::bp, {128, 0}), Error);
	EXPECT_THROW(latency_syncs(LatencyKind::pnn, {128, 1, 256, 3}), Error);
	EXPECT_THROW(latency_syncs(LatencyKind::pnn, {128, 1, 12, 3}), Error);
	EXPECT_THROW(latency_syncs(LatencyKind::pnn, {128, 1, 16, 0}), Error);
}

TEST(GapToMap, Interpolation)
{
	std::vector<BerRecord> r{record(0, 1e-1), record(1, 1e-2), record(2, 1e-4)};
	EXPECT_NEAR(snr_at_ber(r, 1e-2), 1.0, 1e-12);
	EXPECT_NEAR(snr_at_ber(r, 1e-3), 1.5, 1e-12);
	EXPECT_NEAR(snr_at_ber(r, std::sqrt(1e-1 * 1e-2)), 0.5, 1e-12);
	EXPECT_THROW(snr_at_ber(r, 1e-5), Error);
	EXPECT_THROW(snr_at_ber(r, 0.5), Error);
	std::vector<BerRecord> zero_tail{record(0, 1e-1), record(1, 0.0)};
	EXPECT_THROW(snr_at_ber(zero_tail, 1e-2), Error);
}

TEST(GapToMap, MapAgainstItselfIsZero)
{
	auto spec = construct_frozen_set(16, 8);
	auto cfg = small_sweep({0.0, 1.0, 2.0, 3.0, 4.0, 5.0}, 4000);
	EXPECT_DOUBLE_EQ(gap_to_map(spec, map_handle(spec, "again"), 1e-2, cfg), 0.0);
	auto sc = gap_to_map(spec, sc_handle(spec), 1e-2, cfg);
	EXPECT_GT(sc, 0.0);
	EXPECT_THROW(gap_to_map(spec, sc_handle(spec), 1e-6, cfg), Error);
	EXPECT_THROW(gap_to_map(construct_frozen_set(64, 32), sc_handle(spec), 1e-2, cfg), Error);
}

TEST(Csv, RoundTripAndPlotData)
{
	auto spec = construct_frozen_set(32, 16);
	auto r = ber_sweep(sc_handle(spec), spec, small_sweep({0.0, 1.5}, 500));
	auto bp = ber_sweep(bp_handle(spec, {5}), spec, small_sweep({0.0, 1.5}, 500));
	r.insert(r.end(), bp.begin(), bp.end());
	std::string text = csv_of(r);
	EXPECT_EQ(text.substr(0, text.find('\n')), "decoder,ebn0_db,frames,bit_errors,block_errors,ber,bler,ci_halfwidth,seed");
	std::istringstream is(text);
	auto back = read_csv(is);
	EXPECT_EQ(csv_of(back), text);
	std::ostringstream plot;
	write_plot_data(plot, r);
	EXPECT_NE(plot.str().find("# sc"), std::string::npos);
	EXPECT_NE(plot.str().find("\n\n\n# bp5"), std::string::npos);

	std::istringstream bad_header("decoder,ber\n");
	EXPECT_THROW(read_csv(bad_header), Error);
	std::istringstream bad_row(std::string(csv_header) + "\nsc,1,2\n");
	EXPECT_THROW(read_csv(bad_row), Error);
}
