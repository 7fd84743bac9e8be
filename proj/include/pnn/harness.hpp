/*
Monte-Carlo BER/BLER sweeps, normalized error, latency model

Frame f at Eb/N0 point rho draws its info bits and noise from a stream keyed
by (seed, rho, f), so every decoder swept with the same seed sees the same
channel realizations, and results do not depend on the worker count: frames
are reduced in fixed-size chunks, in order, and the stopping rule is only
checked at chunk boundaries.
*/

#pragma once

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "bp.hpp"
#include "channel.hpp"
#include "classic.hpp"
#include "error.hpp"
#include "partition.hpp"
#include "pnn_decoder.hpp"
#include "polar.hpp"

namespace pnn {

// Maps channel LLRs to u_hat. May keep state; one instance per worker.
using FrameDecoder = std::function<Bits(std::span<const double> llr)>;

struct DecoderHandle
{
	std::string id;
	std::function<FrameDecoder()> make;
};

struct SweepConfig
{
	std::vector<double> snr_grid;
	long min_frames = 0;
	long max_frames = 1'000'000;
	long target_block_errors = 100;
	std::uint64_t seed = 1;
	int workers = 0; // 0: PNN_WORKERS or the hardware concurrency
	int chunk_frames = 256;
};

struct BerRecord
{
	std::string decoder;
	double ebn0_db = 0.0;
	long frames = 0;
	long bit_errors = 0;
	long block_errors = 0;
	double ber = 0.0;
	double bler = 0.0;
	double ci_halfwidth = 0.0; // 95 %, on the BER
	std::uint64_t seed = 0;
};

inline std::string format_double(double v)
{
	char buf[64];
	auto r = std::to_chars(buf, buf + sizeof buf, v);
	return std::string(buf, r.ptr);
}

inline int resolve_workers(int requested)
{
	if (requested > 0)
		return requested;
	if (const char *env = std::getenv("PNN_WORKERS")) {
		int v = std::atoi(env);
		if (v > 0)
			return v;
	}
	return std::max(1u, std::thread::hardware_concurrency());
}

struct Frame
{
	Bits info;
	Bits u;
	Llrs llr;
};

inline Frame make_frame(const CodeSpec &spec, double ebn0_db, std::uint64_t seed, long index)
{
	auto rng = derive_stream(seed, std::bit_cast<std::uint64_t>(ebn0_db), static_cast<std::uint64_t>(index));
	Frame f;
	f.info = random_bits(spec.info_count(), rng);
	f.u = expand_info(f.info, spec);
	double sigma = ebn0_to_sigma(ebn0_db, spec.rate());
	f.llr = to_llr(add_awgn(modulate_bpsk(encode(f.u, spec)), sigma, rng), sigma);
	return f;
}

// 95 % half-width: normal approximation on per-frame error fractions (frames
// are the independent unit), floored by the Wilson half-width on bits so a
// zero-error point still reports a nonzero interval.
inline double ber_halfwidth(long frames, long bits_per_frame, long bit_errors, double sum_sq_fraction)
{
	if (frames <= 0)
		return 0.0;
	const double z = 1.96;
	double mean = static_cast<double>(bit_errors) / (static_cast<double>(frames) * bits_per_frame);
	double normal = 0.0;
	if (frames > 1) {
		double var = (sum_sq_fraction / frames - mean * mean) * frames / (frames - 1.0);
		normal = z * std::sqrt(std::max(var, 0.0) / frames);
	}
	double n = static_cast<double>(frames) * bits_per_frame;
	double wilson = z / (1.0 + z * z / n) * std::sqrt(mean * (1.0 - mean) / n + z * z / (4.0 * n * n));
	return std::max(normal, wilson);
}

struct Interval
{
	double lo = 0.0;
	double hi = 0.0;
	bool overlaps(const Interval &o) const { return lo <= o.hi && o.lo <= hi; }
};

namespace detail {

// Error counts of several decoders over the same frames. cross[a][b] is the
// sum over frames of e_a e_b, with e the per-frame bit-error count.
struct ChunkCounts
{
	long frames = 0;
	std::vector<long> bit_errors;
	std::vector<long> block_errors;
	std::vector<std::vector<double>> cross;

	explicit ChunkCounts(std::size_t decoders = 0) : bit_errors(decoders, 0), block_errors(decoders, 0), cross(decoders, std::vector<double>(decoders, 0.0)) {}

	void add(const ChunkCounts &o)
	{
		frames += o.frames;
		for (std::size_t a = 0; a < bit_errors.size(); ++a) {
			bit_errors[a] += o.bit_errors[a];
			block_errors[a] += o.block_errors[a];
			for (std::size_t b = 0; b < bit_errors.size(); ++b)
				cross[a][b] += o.cross[a][b];
		}
	}
};

inline ChunkCounts run_chunk(std::vector<FrameDecoder> &decoders, const std::vector<DecoderHandle> &handles, const CodeSpec &spec, double ebn0_db, std::uint64_t seed, long first, long count)
{
	const std::size_t d = decoders.size();
	ChunkCounts c(d);
	std::vector<long> errors(d);
	const auto &pos = spec.info_positions();
	for (long f = first; f < first + count; ++f) {
		Frame frame = make_frame(spec, ebn0_db, seed, f);
		for (std::size_t i = 0; i < d; ++i) {
			Bits u_hat;
			try {
				u_hat = decoders[i](frame.llr);
			} catch (const std::exception &e) {
				throw Error("decoder " + handles[i].id + " failed at Eb/N0 " + format_double(ebn0_db) + " dB, frame " + std::to_string(f) + ": " + e.what());
			}
			require(static_cast<int>(u_hat.size()) == spec.length(), "decoder " + handles[i].id + " returned " + std::to_string(u_hat.size()) + " bits at frame " + std::to_string(f));
			long e = 0;
			for (std::size_t j = 0; j < pos.size(); ++j)
				e += u_hat[pos[j]] != frame.info[j];
			errors[i] = e;
			c.bit_errors[i] += e;
			c.block_errors[i] += e > 0;
		}
		for (std::size_t a = 0; a < d; ++a)
			for (std::size_t b = 0; b < d; ++b)
				c.cross[a][b] += static_cast<double>(errors[a]) * errors[b];
		++c.frames;
	}
	return c;
}

} // namespace detail

struct PairedPoint
{
	double ebn0_db = 0.0;
	detail::ChunkCounts counts;
};

// Several decoders swept over one shared set of frames.
struct PairedSweep
{
	std::vector<std::string> ids;
	int info_bits = 0;
	std::uint64_t seed = 0;
	std::vector<PairedPoint> points;

	std::size_t index_of(const std::string &id) const
	{
		auto it = std::find(ids.begin(), ids.end(), id);
		require(it != ids.end(), "paired sweep: no decoder '" + id + "'");
		return static_cast<std::size_t>(it - ids.begin());
	}

	std::vector<BerRecord> records(std::size_t d) const
	{
		std::vector<BerRecord> out;
		for (const auto &p : points) {
			const auto &c = p.counts;
			BerRecord r;
			r.decoder = ids.at(d);
			r.ebn0_db = p.ebn0_db;
			r.frames = c.frames;
			r.bit_errors = c.bit_errors[d];
			r.block_errors = c.block_errors[d];
			r.ber = static_cast<double>(r.bit_errors) / (static_cast<double>(r.frames) * info_bits);
			r.bler = static_cast<double>(r.block_errors) / r.frames;
			r.ci_halfwidth = ber_halfwidth(r.frames, info_bits, r.bit_errors, c.cross[d][d] / (static_cast<double>(info_bits) * info_bits));
			r.seed = seed;
			out.push_back(r);
		}
		return out;
	}

	std::vector<BerRecord> all_records() const
	{
		std::vector<BerRecord> out;
		for (std::size_t d = 0; d < ids.size(); ++d) {
			auto r = records(d);
			out.insert(out.end(), r.begin(), r.end());
		}
		return out;
	}
};

// Runs every decoder on the same frames. A point stops once every decoder has
// target_block_errors (after min_frames), or at max_frames.
inline PairedSweep paired_sweep(const std::vector<DecoderHandle> &handles, const CodeSpec &spec, const SweepConfig &cfg)
{
	require(!handles.empty(), "ber_sweep: no decoders");
	require(!cfg.snr_grid.empty(), "ber_sweep: empty SNR grid");
	for (std::size_t i = 1; i < cfg.snr_grid.size(); ++i)
		require(cfg.snr_grid[i] > cfg.snr_grid[i - 1], "ber_sweep: SNR grid must be strictly increasing");
	require(spec.info_count() >= 1, "ber_sweep: the code carries no information bits");
	require(cfg.max_frames >= 1 && cfg.chunk_frames >= 1, "ber_sweep: frame limits must be positive");
	const int workers = resolve_workers(cfg.workers);
	const std::size_t d = handles.size();
	std::vector<std::vector<FrameDecoder>> decoders(workers);
	for (auto &set : decoders)
		for (const auto &h : handles)
			set.push_back(h.make());

	PairedSweep out;
	for (const auto &h : handles)
		out.ids.push_back(h.id);
	out.info_bits = spec.info_count();
	out.seed = cfg.seed;
	for (double ebn0 : cfg.snr_grid) {
		detail::ChunkCounts total(d);
		auto finished = [&] {
			if (total.frames >= cfg.max_frames)
				return true;
			if (total.frames < cfg.min_frames)
				return false;
			for (long e : total.block_errors)
				if (e < cfg.target_block_errors)
					return false;
			return true;
		};
		long next_chunk = 0;
		bool done = false;
		while (!done) {
			std::vector<detail::ChunkCounts> wave(workers, detail::ChunkCounts(d));
			std::vector<long> firsts(workers), counts(workers, 0);
			for (int w = 0; w < workers; ++w) {
				firsts[w] = (next_chunk + w) * cfg.chunk_frames;
				counts[w] = std::clamp<long>(cfg.max_frames - firsts[w], 0, cfg.chunk_frames);
			}
			if (workers == 1) {
				wave[0] = detail::run_chunk(decoders[0], handles, spec, ebn0, cfg.seed, firsts[0], counts[0]);
			} else {
				std::vector<std::exception_ptr> errors(workers);
				std::vector<std::thread> threads;
				for (int w = 0; w < workers; ++w) {
					if (counts[w] == 0)
						continue;
					threads.emplace_back([&, w] {
						try {
							wave[w] = detail::run_chunk(decoders[w], handles, spec, ebn0, cfg.seed, firsts[w], counts[w]);
						} catch (...) {
							errors[w] = std::current_exception();
						}
					});
				}
				for (auto &t : threads)
					t.join();
				for (auto &e : errors)
					if (e)
						std::rethrow_exception(e);
			}
			// reduce in chunk order so the stopping point ignores the worker count
			for (int w = 0; w < workers && !done; ++w) {
				if (counts[w] == 0) {
					done = true;
					break;
				}
				total.add(wave[w]);
				done = finished();
			}
			next_chunk += workers;
		}
		out.points.push_back({ebn0, std::move(total)});
	}
	return out;
}

inline std::vector<BerRecord> ber_sweep(const DecoderHandle &decoder, const CodeSpec &spec, const SweepConfig &cfg)
{
	return paired_sweep({decoder}, spec, cfg).records(0);
}

struct NeEstimate
{
	double ne = 0.0;
	double halfwidth = 0.0; // 95 %
	Interval interval() const { return {ne - halfwidth, ne + halfwidth}; }
};

// NE of decoder a against baseline b on shared frames. Per point the BER
// ratio is a ratio of paired sums; its variance comes from the delta method,
// sum_f (x_f - R y_f)^2 / (sum_f y_f)^2.
inline NeEstimate paired_normalized_error(const PairedSweep &s, std::size_t a, std::size_t b)
{
	require(!s.points.empty(), "normalized_error: empty sweep");
	NeEstimate est;
	double var = 0.0;
	for (const auto &p : s.points) {
		const auto &c = p.counts;
		const double x = c.bit_errors.at(a), y = c.bit_errors.at(b);
		require(y > 0.0, "normalized_error: baseline BER is zero at " + format_double(p.ebn0_db) + " dB");
		const double r = x / y;
		est.ne += r;
		double spread = c.cross[a][a] - 2.0 * r * c.cross[a][b] + r * r * c.cross[b][b];
		var += std::max(spread, 0.0) / (y * y);
	}
	const double count = static_cast<double>(s.points.size());
	est.ne /= count;
	est.halfwidth = 1.96 * std::sqrt(var) / count;
	return est;
}

namespace detail {

inline void check_same_grid(const std::vector<BerRecord> &a, const std::vector<BerRecord> &b)
{
	require(a.size() == b.size() && !a.empty(), "normalized_error: records and baseline cover different SNR grids");
	for (std::size_t i = 0; i < a.size(); ++i)
		require(std::abs(a[i].ebn0_db - b[i].ebn0_db) < 1e-9, "normalized_error: SNR grid mismatch at point " + std::to_string(i));
}

} // namespace detail

// Mean over the grid of BER / BER_baseline.
inline double normalized_error(const std::vector<BerRecord> &records, const std::vector<BerRecord> &baseline, bool skip_zero_baseline = false)
{
	detail::check_same_grid(records, baseline);
	double sum = 0.0;
	int used = 0;
	for (std::size_t i = 0; i < records.size(); ++i) {
		if (baseline[i].ber <= 0.0) {
			require(skip_zero_baseline, "normalized_error: baseline BER is zero at " + std::to_string(baseline[i].ebn0_db) + " dB");
			continue;
		}
		sum += records[i].ber / baseline[i].ber;
		++used;
	}
	require(used > 0, "normalized_error: no usable SNR points");
	return sum / used;
}

// Conservative NE interval from the per-point BER intervals of both curves.
inline Interval normalized_error_interval(const std::vector<BerRecord> &records, const std::vector<BerRecord> &baseline)
{
	detail::check_same_grid(records, baseline);
	Interval iv;
	for (std::size_t i = 0; i < records.size(); ++i) {
		double b_lo = std::max(baseline[i].ber - baseline[i].ci_halfwidth, 1e-300);
		double b_hi = baseline[i].ber + baseline[i].ci_halfwidth;
		iv.lo += std::max(records[i].ber - records[i].ci_halfwidth, 0.0) / b_hi;
		iv.hi += (records[i].ber + records[i].ci_halfwidth) / b_lo;
	}
	iv.lo /= records.size();
	iv.hi /= records.size();
	return iv;
}

// Eb/N0 where the curve crosses target_ber, linear in (dB, log10 BER).
inline double snr_at_ber(const std::vector<BerRecord> &records, double target_ber)
{
	require(target_ber > 0.0 && target_ber < 1.0, "snr_at_ber: target BER must lie in (0, 1)");
	for (std::size_t i = 0; i + 1 < records.size(); ++i) {
		double b0 = records[i].ber, b1 = records[i + 1].ber;
		if (b0 >= target_ber && b1 <= target_ber) {
			require(b1 > 0.0, "snr_at_ber: zero BER at " + std::to_string(records[i + 1].ebn0_db) + " dB; run more frames or use a denser grid");
			if (b0 == b1)
				return records[i].ebn0_db;
			double t = (std::log10(b0) - std::log10(target_ber)) / (std::log10(b0) - std::log10(b1));
			return records[i].ebn0_db + t * (records[i + 1].ebn0_db - records[i].ebn0_db);
		}
	}
	throw Error("snr_at_ber: target BER " + std::to_string(target_ber) + " is outside the measured range; widen the SNR grid");
}

enum class LatencyKind { scl, bp, pnn };

struct LatencyParams
{
	long length = 128;        // N
	long iterations = 1;      // I, bp only
	long partition_size = 16; // N_P, pnn only
	long hidden_layers = 3;   // N_H, pnn only
};

// Synchronization steps: S_SCL = N log N, S_BP = 2 I log N,
// S_PNN = (N/N_P) N_H + (N/N_P) 2 log(N/N_P), logs base 2.
inline long latency_syncs(LatencyKind kind, const LatencyParams &p)
{
	require(is_power_of_two(p.length), "latency: N must be a power of two");
	const long log_n = log2_exact(p.length);
	switch (kind) {
	case LatencyKind::scl:
		return p.length * log_n;
	case LatencyKind::bp:
		require(p.iterations >= 1, "latency: BP needs at least one iteration");
		return 2 * p.iterations * log_n;
	case LatencyKind::pnn: {
		require(is_power_of_two(p.partition_size) && p.partition_size <= p.length, "latency: N_P must be a power of two dividing N");
		require(p.hidden_layers >= 1, "latency: N_H must be at least 1");
		const long blocks = p.length / p.partition_size;
		return blocks * p.hidden_layers + blocks * 2 * log2_exact(blocks);
	}
	}
	throw Error("latency: unknown decoder kind");
}

// Standard decoder handles.

inline DecoderHandle sc_handle(const CodeSpec &spec, std::string id = "sc")
{
	return {std::move(id), [spec] { return FrameDecoder([spec](std::span<const double> llr) { return sc_decode(llr, spec); }); }};
}

inline DecoderHandle scl_handle(const CodeSpec &spec, int list_size, std::string id = "")
{
	if (id.empty())
		id = "scl" + std::to_string(list_size);
	return {std::move(id), [spec, list_size] {
		        auto dec = std::make_shared<SclDecoder>(spec, list_size);
		        return FrameDecoder([dec](std::span<const double> llr) { return dec->decode(llr); });
	        }};
}

inline DecoderHandle bp_handle(const CodeSpec &spec, BpConfig cfg = {}, std::string id = "")
{
	if (id.empty())
		id = "bp" + std::to_string(cfg.iterations);
	return {std::move(id), [spec, cfg] { return FrameDecoder([spec, cfg](std::span<const double> llr) { return bp_decode(llr, spec, cfg).u_hat; }); }};
}

inline DecoderHandle ml_handle(const CodeSpec &spec, std::string id = "ml")
{
	return {std::move(id), [spec] {
		        auto dec = std::make_shared<CodebookDecoder>(spec);
		        return FrameDecoder([dec](std::span<const double> llr) { return dec->decode_block(llr); });
	        }};
}

inline DecoderHandle map_handle(const CodeSpec &spec, std::string id = "map")
{
	return {std::move(id), [spec] {
		        auto dec = std::make_shared<CodebookDecoder>(spec);
		        return FrameDecoder([dec](std::span<const double> llr) { return dec->decode_bitwise(llr); });
	        }};
}

inline DecoderHandle nn_handle(const CodeSpec &spec, std::shared_ptr<const MlpModel> model, std::string id = "nn")
{
	require(model->input_size() == spec.length() && model->output_size() == spec.info_count(), "nn decoder: model shape does not match the code");
	return {std::move(id), [spec, model] { return FrameDecoder([spec, model](std::span<const double> llr) { return nn_decode(*model, llr, spec); }); }};
}

inline DecoderHandle pnn_handle(const PartitionPlan &plan, const ModelSet &models, PartitionedConfig cfg = {}, std::string id = "")
{
	if (id.empty())
		id = "pnn" + std::to_string(plan.blocks.size());
	check_models(plan, models);
	auto shared = std::make_shared<const ModelSet>(models);
	return {std::move(id), [plan, shared, cfg] {
		        auto dec = std::make_shared<PartitionedDecoder>(PartitionedDecoder::pnn(plan, *shared, cfg));
		        return FrameDecoder([dec](std::span<const double> llr) { return dec->decode(llr).u_hat; });
	        }};
}

inline DecoderHandle pscl_handle(const PartitionPlan &plan, int list_size, PartitionedConfig cfg = {}, std::string id = "")
{
	if (id.empty())
		id = "pscl" + std::to_string(plan.blocks.size());
	return {std::move(id), [plan, list_size, cfg] {
		        auto dec = std::make_shared<PartitionedDecoder>(PartitionedDecoder::pscl(plan, list_size, cfg));
		        return FrameDecoder([dec](std::span<const double> llr) { return dec->decode(llr).u_hat; });
	        }};
}

inline DecoderHandle oracle_partitioned_handle(const PartitionPlan &plan, PartitionedConfig cfg = {}, std::string id = "")
{
	if (id.empty())
		id = "pml" + std::to_string(plan.blocks.size());
	return {std::move(id), [plan, cfg] {
		        auto dec = std::make_shared<PartitionedDecoder>(PartitionedDecoder::oracle(plan, cfg));
		        return FrameDecoder([dec](std::span<const double> llr) { return dec->decode(llr).u_hat; });
	        }};
}

struct GapResult
{
	double gap_db = 0.0;
	double decoder_snr_db = 0.0;
	double map_snr_db = 0.0;
	std::vector<BerRecord> decoder_records;
	std::vector<BerRecord> map_records;
};

// Horizontal distance to bitwise MAP at target_ber, on common random numbers.
inline GapResult gap_to_map_detailed(const CodeSpec &spec, const DecoderHandle &decoder, double target_ber, const SweepConfig &cfg)
{
	require(spec.info_count() <= CodebookDecoder::max_info_bits, "gap_to_map: k exceeds the MAP oracle limit");
	GapResult g;
	g.decoder_records = ber_sweep(decoder, spec, cfg);
	g.map_records = ber_sweep(map_handle(spec), spec, cfg);
	g.decoder_snr_db = snr_at_ber(g.decoder_records, target_ber);
	g.map_snr_db = snr_at_ber(g.map_records, target_ber);
	g.gap_db = g.decoder_snr_db - g.map_snr_db;
	return g;
}

inline double gap_to_map(const CodeSpec &spec, const DecoderHandle &decoder, double target_ber, const SweepConfig &cfg)
{
	return gap_to_map_detailed(spec, decoder, target_ber, cfg).gap_db;
}

// CSV

inline const char *csv_header = "decoder,ebn0_db,frames,bit_errors,block_errors,ber,bler,ci_halfwidth,seed";

inline void write_csv_row(std::ostream &os, const BerRecord &r)
{
	os << r.decoder << ',' << format_double(r.ebn0_db) << ',' << r.frames << ',' << r.bit_errors << ',' << r.block_errors << ',' << format_double(r.ber) << ',' << format_double(r.bler) << ',' << format_double(r.ci_halfwidth) << ',' << r.seed << '\n';
}

inline void write_csv(std::ostream &os, const std::vector<BerRecord> &records, bool header = true)
{
	if (header)
		os << csv_header << '\n';
	for (const auto &r : records)
		write_csv_row(os, r);
}

inline std::vector<BerRecord> read_csv(std::istream &is)
{
	std::string line;
	require(static_cast<bool>(std::getline(is, line)), "csv: empty input");
	require(line == csv_header, "csv: unexpected header '" + line + "'");
	std::vector<BerRecord> out;
	while (std::getline(is, line)) {
		if (line.empty())
			continue;
		std::vector<std::string> f;
		std::stringstream ss(line);
		std::string cell;
		while (std::getline(ss, cell, ','))
			f.push_back(cell);
		require(f.size() == 9, "csv: expected 9 fields in '" + line + "'");
		try {
			BerRecord r;
			r.decoder = f[0];
			r.ebn0_db = std::stod(f[1]);
			r.frames = std::stol(f[2]);
			r.bit_errors = std::stol(f[3]);
			r.block_errors = std::stol(f[4]);
			r.ber = std::stod(f[5]);
			r.bler = std::stod(f[6]);
			r.ci_halfwidth = std::stod(f[7]);
			r.seed = std::stoull(f[8]);
			out.push_back(r);
		} catch (const std::logic_error &) {
			throw Error("csv: malformed row '" + line + "'");
		}
	}
	return out;
}

// gnuplot data: one indexable block per decoder, columns ebn0 ber bler ci.
inline void write_plot_data(std::ostream &os, const std::vector<BerRecord> &records)
{
	std::string current;
	for (const auto &r : records) {
		if (r.decoder != current) {
			if (!current.empty())
				os << "\n\n";
			current = r.decoder;
			os << "# " << current << "\n# ebn0_db ber bler ci_halfwidth\n";
		}
		os << format_double(r.ebn0_db) << ' ' << format_double(r.ber) << ' ' << format_double(r.bler) << ' ' << format_double(r.ci_halfwidth) << '\n';
	}
}

} // namespace pnn
