#pragma once

#include <cmath>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include "channel.hpp"
#include "classic.hpp"
#include "error.hpp"
#include "mlp.hpp"
#include "partition.hpp"
#include "pnn_decoder.hpp"
#include "polar.hpp"

namespace pnn {

// Where training frames come from: the sub-block's own encoder and channel,
// or the block's interface inside the full code with earlier blocks known.
enum class TrainingSource { channel, coupled };

inline const char *to_string(TrainingSource s) { return s == TrainingSource::channel ? "channel" : "coupled"; }

inline TrainingSource parse_training_source(const std::string &s)
{
	if (s == "channel")
		return TrainingSource::channel;
	if (s == "coupled")
		return TrainingSource::coupled;
	throw Error("unknown training source '" + s + "'");
}

struct TrainConfig
{
	int epochs = 4000; // one fresh batch per epoch
	int batch_size = 256;
	OptimizerConfig optimizer{};
	double final_learning_rate = 0.0; // > 0: exponential decay to this value over the epochs
	LossKind loss = LossKind::binary_cross_entropy;
	double snr_low_db = 0.0; // Eb/N0 drawn uniformly per batch
	double snr_high_db = 8.0;
	int warmup_epochs = 0; // extra leading epochs drawn from the warm-up range
	double warmup_snr_low_db = 12.0;
	double warmup_snr_high_db = 20.0;
	double code_rate = 0.0; // channel source: rate for Eb/N0 -> sigma, 0 means k_i/N_i
	std::uint64_t seed = 42;
	InputNorm input_norm = InputNorm::clipped_scaled;
	double l_max = 20.0;
	std::vector<int> hidden{128, 64, 32};
	int k_max_trainable = 13;
	TrainingSource source = TrainingSource::channel;
	int coupling_sweeps = 1;
	double validation_snr_db = 4.0;
	int validation_frames = 20000;
};

inline double training_rate(const SubBlockSpec &sub, const TrainConfig &cfg)
{
	return cfg.code_rate > 0.0 ? cfg.code_rate : static_cast<double>(sub.info_count()) / sub.size;
}

struct Batch
{
	MlpModel::Matrix inputs;  // batch x N_i, normalized
	MlpModel::Matrix targets; // batch x k_i, info bits
};

// Random info bits -> sub-block encoder -> BPSK -> AWGN -> LLR -> input normalization.
inline Batch generate_batch(const SubBlockSpec &sub, double sigma, int batch, const TrainConfig &cfg, RandomStream &rng)
{
	require(batch >= 1, "generate_batch: batch must be at least 1");
	require(sigma > 0.0, "generate_batch: sigma must be positive");
	const CodeSpec code = sub.code();
	const int k = code.info_count(), len = code.length();
	Batch b{MlpModel::Matrix(batch, len), MlpModel::Matrix(batch, k)};
	std::normal_distribution<double> gauss(0.0, 1.0);
	const double scale = 2.0 / (sigma * sigma);
	for (int r = 0; r < batch; ++r) {
		Bits info = random_bits(k, rng);
		Bits x = encode(expand_info(info, code), code);
		for (int i = 0; i < len; ++i) {
			double y = (x[i] ? -1.0 : 1.0) + sigma * gauss(rng);
			b.inputs(r, i) = static_cast<float>(normalize_llr(scale * y, cfg.input_norm, cfg.l_max));
		}
		for (int j = 0; j < k; ++j)
			b.targets(r, j) = info[j];
	}
	return b;
}

struct CoupledSample
{
	Llrs interface;
	Bits info; // the block's info bits
};

// One full-code frame at sigma, reduced to the interface of plan.blocks[index].
inline CoupledSample coupled_sample(const PartitionPlan &plan, int index, double sigma, double l_max, int sweeps, RandomStream &rng)
{
	const CodeSpec &spec = plan.spec;
	const auto &block = plan.blocks.at(index);
	Bits u = expand_info(random_bits(spec.info_count(), rng), spec);
	Llrs llr = to_llr(add_awgn(modulate_bpsk(encode(u, spec)), sigma, rng), sigma);
	CoupledSample s;
	s.interface = coupled_interface(llr, plan, index, u, {l_max, sweeps});
	s.info = extract_info(std::span<const std::uint8_t>(u).subspan(block.offset, block.size), block.code());
	return s;
}

inline Batch generate_coupled_batch(const PartitionPlan &plan, int index, double sigma, int batch, const TrainConfig &cfg, RandomStream &rng)
{
	require(batch >= 1, "generate_batch: batch must be at least 1");
	require(sigma > 0.0, "generate_batch: sigma must be positive");
	const auto &block = plan.blocks.at(index);
	Batch b{MlpModel::Matrix(batch, block.size), MlpModel::Matrix(batch, block.info_count())};
	for (int r = 0; r < batch; ++r) {
		auto s = coupled_sample(plan, index, sigma, cfg.l_max, cfg.coupling_sweeps, rng);
		for (int i = 0; i < block.size; ++i)
			b.inputs(r, i) = static_cast<float>(normalize_llr(s.interface[i], cfg.input_norm, cfg.l_max));
		for (int j = 0; j < block.info_count(); ++j)
			b.targets(r, j) = s.info[j];
	}
	return b;
}

struct SubBlockEvaluation
{
	long frames = 0;
	long bits = 0;
	long nn_bit_errors = 0;
	long map_bit_errors = 0;
	double nn_ber() const { return bits ? static_cast<double>(nn_bit_errors) / bits : 0.0; }
	double map_ber() const { return bits ? static_cast<double>(map_bit_errors) / bits : 0.0; }
	// NN BER relative to MAP on the same frames
	double ratio() const { return map_bit_errors ? static_cast<double>(nn_bit_errors) / map_bit_errors : (nn_bit_errors ? std::numeric_limits<double>::infinity() : 1.0); }
};

namespace detail {

template <typename Source>
SubBlockEvaluation evaluate_frames(const MlpModel &model, const CodeSpec &code, int frames, Source &&source)
{
	CodebookDecoder oracle(code);
	SubBlockEvaluation ev;
	for (int f = 0; f < frames; ++f) {
		auto [llr, info] = source(f);
		Bits nn = extract_info(nn_decode(model, llr, code), code);
		Bits map = extract_info(oracle.decode_bitwise(llr), code);
		for (int j = 0; j < code.info_count(); ++j) {
			ev.nn_bit_errors += nn[j] != info[j];
			ev.map_bit_errors += map[j] != info[j];
		}
		++ev.frames;
		ev.bits += code.info_count();
	}
	return ev;
}

} // namespace detail

// NN versus bitwise MAP on identical sub-block channel frames.
inline SubBlockEvaluation evaluate_against_map(const MlpModel &model, const SubBlockSpec &sub, double sigma, int frames, std::uint64_t seed)
{
	const CodeSpec code = sub.code();
	return detail::evaluate_frames(model, code, frames, [&](int f) {
		auto rng = derive_stream(seed, 0x5eed, f);
		Bits info = random_bits(code.info_count(), rng);
		Bits x = encode(expand_info(info, code), code);
		return std::pair{to_llr(add_awgn(modulate_bpsk(x), sigma, rng), sigma), info};
	});
}

// Same comparison on coupled interfaces; MAP treats the interface as a channel.
inline SubBlockEvaluation evaluate_coupled_against_map(const MlpModel &model, const PartitionPlan &plan, int index, double sigma, int frames, std::uint64_t seed, double l_max = default_l_max, int sweeps = 1)
{
	return detail::evaluate_frames(model, plan.blocks.at(index).code(), frames, [&](int f) {
		auto rng = derive_stream(seed, 0xc0de, f);
		auto s = coupled_sample(plan, index, sigma, l_max, sweeps, rng);
		return std::pair{std::move(s.interface), std::move(s.info)};
	});
}

struct TrainResult
{
	MlpModel model;
	double final_loss = 0.0;
	SubBlockEvaluation validation;
	int epochs_run = 0;
};

namespace detail {

template <typename MakeBatch>
TrainResult train_loop(const SubBlockSpec &sub, const TrainConfig &cfg, double rate, MakeBatch &&make_batch)
{
	const int k = sub.info_count();
	require(k >= 1, "train_subblock: block " + std::to_string(sub.index) + " has no information bits");
	require(k <= cfg.k_max_trainable, "train_subblock: k_i = " + std::to_string(k) + " exceeds the trainable limit " + std::to_string(cfg.k_max_trainable));
	require(cfg.epochs >= 1 && cfg.batch_size >= 1, "train_subblock: epochs and batch size must be at least 1");
	require(cfg.warmup_epochs >= 0, "train_subblock: negative warm-up epochs");
	require(cfg.snr_low_db <= cfg.snr_high_db && cfg.warmup_snr_low_db <= cfg.warmup_snr_high_db, "train_subblock: empty training SNR range");

	auto rng = derive_stream(cfg.seed, static_cast<std::uint64_t>(sub.index), 0x7a1);
	std::vector<int> sizes{sub.size};
	sizes.insert(sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
	sizes.push_back(k);
	TrainResult res{MlpModel::random(sizes, rng)};
	res.model.input_norm = cfg.input_norm;
	res.model.input_clip = cfg.l_max;

	Optimizer<float> opt(res.model, cfg.optimizer);
	Gradients<float> grad = Gradients<float>::like(res.model);
	std::uniform_real_distribution<double> snr(cfg.snr_low_db, cfg.snr_high_db);
	std::uniform_real_distribution<double> warm(cfg.warmup_snr_low_db, cfg.warmup_snr_high_db);
	const int total = cfg.warmup_epochs + cfg.epochs;
	const double decay = cfg.final_learning_rate > 0.0 ? std::log(cfg.final_learning_rate / cfg.optimizer.learning_rate) / std::max(total - 1, 1) : 0.0;
	for (int epoch = 0; epoch < total; ++epoch) {
		if (decay != 0.0)
			opt.set_learning_rate(cfg.optimizer.learning_rate * std::exp(decay * epoch));
		double sigma = ebn0_to_sigma(epoch < cfg.warmup_epochs ? warm(rng) : snr(rng), rate);
		Batch b = make_batch(sigma, rng);
		float loss = loss_and_gradients(res.model, b.inputs, b.targets, cfg.loss, grad);
		if (!std::isfinite(loss))
			throw Error("train_subblock: loss diverged at epoch " + std::to_string(epoch) + " for block " + std::to_string(sub.index));
		opt.step(res.model, grad);
		res.final_loss = loss;
		res.epochs_run = epoch + 1;
	}
	require(res.model.finite(), "train_subblock: non-finite parameters after training block " + std::to_string(sub.index));
	return res;
}

} // namespace detail

// Trains on the sub-block's own encoder and channel.
inline TrainResult train_subblock(const SubBlockSpec &sub, const TrainConfig &cfg)
{
	const double rate = training_rate(sub, cfg);
	auto res = detail::train_loop(sub, cfg, rate, [&](double sigma, RandomStream &rng) { return generate_batch(sub, sigma, cfg.batch_size, cfg, rng); });
	if (cfg.validation_frames > 0)
		res.validation = evaluate_against_map(res.model, sub, ebn0_to_sigma(cfg.validation_snr_db, rate), cfg.validation_frames, cfg.seed ^ 0xda7a);
	return res;
}

// Trains block `index` of a plan with the configured source. Coupled frames
// use the full code's rate.
inline TrainResult train_plan_block(const PartitionPlan &plan, int index, const TrainConfig &cfg)
{
	const auto &sub = plan.blocks.at(index);
	if (cfg.source == TrainingSource::channel)
		return train_subblock(sub, cfg);
	const double rate = plan.spec.rate();
	auto res = detail::train_loop(sub, cfg, rate, [&](double sigma, RandomStream &rng) { return generate_coupled_batch(plan, index, sigma, cfg.batch_size, cfg, rng); });
	if (cfg.validation_frames > 0)
		res.validation = evaluate_coupled_against_map(res.model, plan, index, ebn0_to_sigma(cfg.validation_snr_db, rate), cfg.validation_frames, cfg.seed ^ 0xda7a, cfg.l_max, cfg.coupling_sweeps);
	return res;
}

} // namespace pnn
