#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "pnn/harness.hpp"
#include "pnn/training.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace pnn;

namespace {

void check_keys(const json &obj, const std::set<std::string> &allowed, const std::string &where)
{
	require(obj.is_object(), where + ": expected an object");
	for (const auto &[key, value] : obj.items())
		require(allowed.count(key), where + ": unknown key '" + key + "'");
}

fs::path existing(const fs::path &p, const std::string &what)
{
	require(fs::exists(p), what + " '" + p.string() + "' does not exist");
	return p;
}

std::vector<double> parse_grid(const std::string &text)
{
	// "1,2,3" or "lo:step:hi"
	std::vector<double> grid;
	if (text.find(':') != std::string::npos) {
		double lo = 0, step = 0, hi = 0;
		char c1 = 0, c2 = 0;
		std::istringstream is(text);
		require(static_cast<bool>(is >> lo >> c1 >> step >> c2 >> hi) && c1 == ':' && c2 == ':' && step > 0, "bad SNR grid '" + text + "', expected lo:step:hi");
		for (long i = 0; lo + i * step <= hi + 1e-9; ++i)
			grid.push_back(lo + i * step);
		return grid;
	}
	std::istringstream is(text);
	std::string cell;
	while (std::getline(is, cell, ',')) {
		try {
			grid.push_back(std::stod(cell));
		} catch (const std::logic_error &) {
			throw Error("bad SNR value '" + cell + "'");
		}
	}
	return grid;
}

ModelSet load_plan_models(const PartitionPlan &plan)
{
	ModelSet models;
	for (const auto &b : plan.blocks) {
		if (b.kind != SubDecoderKind::nn)
			continue;
		require(!b.model_path.empty(), "plan block " + std::to_string(b.index) + " has no model; run 'train' first");
		models.emplace(b.index, load_model<float>(existing(b.model_path, "model file")));
	}
	return models;
}

std::string describe(const PartitionPlan &plan)
{
	std::ostringstream os;
	os << "block offset size k kind\n";
	for (const auto &b : plan.blocks)
		os << b.index << ' ' << b.offset << ' ' << b.size << ' ' << b.info_count() << ' ' << to_string(b.kind) << '\n';
	return os.str();
}

// Roster entries: sc, ml, map, bp<I>, scl<L>, pnn, pscl<L>, pml, or an object
// {"decoder": ..., "id", "iterations", "list_size", "plan"}.
struct RosterContext
{
	CodeSpec spec;
	std::optional<PartitionPlan> plan;
	double l_max = default_l_max;
};

int suffix_number(const std::string &name, const std::string &prefix)
{
	std::string rest = name.substr(prefix.size());
	require(!rest.empty() && rest.find_first_not_of("0123456789") == std::string::npos, "roster: bad decoder '" + name + "'");
	return std::stoi(rest);
}

DecoderHandle make_decoder(const json &entry, const RosterContext &ctx)
{
	std::string name, id;
	std::optional<int> iterations, list_size;
	std::optional<PartitionPlan> plan = ctx.plan;
	if (entry.is_string()) {
		name = entry.get<std::string>();
	} else {
		check_keys(entry, {"decoder", "id", "iterations", "list_size", "plan"}, "roster entry");
		require(entry.contains("decoder"), "roster entry: missing 'decoder'");
		name = entry.at("decoder").get<std::string>();
		id = entry.value("id", "");
		if (entry.contains("iterations"))
			iterations = entry.at("iterations").get<int>();
		if (entry.contains("list_size"))
			list_size = entry.at("list_size").get<int>();
		if (entry.contains("plan"))
			plan = load_plan(existing(entry.at("plan").get<std::string>(), "plan file")).plan;
	}
	if (plan)
		require(plan->spec.frozen() == ctx.spec.frozen() && plan->spec.length() == ctx.spec.length(), "roster: plan does not match the code");
	auto need_plan = [&] {
		require(plan.has_value(), "roster: decoder '" + name + "' needs a partition plan");
		return *plan;
	};
	PartitionedConfig pcfg{ctx.l_max, 1};
	if (name == "sc")
		return sc_handle(ctx.spec, id.empty() ? "sc" : id);
	if (name == "ml")
		return ml_handle(ctx.spec, id.empty() ? "ml" : id);
	if (name == "map")
		return map_handle(ctx.spec, id.empty() ? "map" : id);
	if (name == "pml")
		return oracle_partitioned_handle(need_plan(), pcfg, id);
	if (name == "pnn")
		return pnn_handle(need_plan(), load_plan_models(need_plan()), pcfg, id);
	if (name.rfind("pscl", 0) == 0)
		return pscl_handle(need_plan(), list_size.value_or(name == "pscl" ? 32 : suffix_number(name, "pscl")), pcfg, id);
	if (name.rfind("scl", 0) == 0)
		return scl_handle(ctx.spec, list_size.value_or(name == "scl" ? 32 : suffix_number(name, "scl")), id);
	if (name.rfind("bp", 0) == 0)
		return bp_handle(ctx.spec, {iterations.value_or(name == "bp" ? 50 : suffix_number(name, "bp")), ctx.l_max, false}, id);
	throw Error("roster: unknown decoder '" + name + "'");
}

std::uint64_t random_seed()
{
	std::random_device rd;
	return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

// construct

struct ConstructArgs
{
	int n = 128, k = 64;
	double eps = 0.5;
	std::string out;
	int base_size = 0, k_max = 14;
};

void cmd_construct(const ConstructArgs &a)
{
	require(is_power_of_two(a.n), "construct: N = " + std::to_string(a.n) + " is not a power of two");
	require(a.k >= 0 && a.k <= a.n, "construct: k must lie in [0, N]");
	CodeSpec spec = construct_frozen_set(a.n, a.k, {a.eps});
	if (a.out.empty())
		write_code_spec(std::cout, spec);
	else
		save_code_spec(a.out, spec);
	std::cout << "N " << spec.length() << " k " << spec.info_count() << " frozen " << spec.frozen().size() << '\n';
	if (a.base_size > 0) {
		auto plan = plan_partitions(spec, a.base_size, a.k_max);
		std::cout << describe(plan);
	}
}

// plan

struct PlanArgs
{
	std::string spec, out, kind = "nn";
	int base_size = 8, k_max = 14, equal = 0;
};

void cmd_plan(const PlanArgs &a)
{
	CodeSpec spec = load_code_spec(existing(a.spec, "code spec"));
	auto kind = parse_sub_decoder_kind(a.kind);
	require(kind == SubDecoderKind::nn || kind == SubDecoderKind::scl, "plan: --kind must be nn or scl");
	PartitionPlan plan = a.equal > 0 ? plan_equal(spec, a.equal, kind) : plan_partitions(spec, a.base_size, a.k_max);
	for (auto &b : plan.blocks)
		if (b.kind == SubDecoderKind::nn)
			b.kind = kind;
	if (!a.out.empty())
		save_plan(a.out, plan, a.spec);
	std::cout << describe(plan);
}

// train

struct TrainArgs
{
	std::string plan, out_dir;
	TrainConfig cfg;
	std::string optimizer = "adam", loss = "bce", input_norm, source = "channel";
	std::string hidden = "128,64,32";
};

int cmd_train(TrainArgs a)
{
	auto loaded = load_plan(existing(a.plan, "plan file"));
	auto &plan = loaded.plan;
	auto &cfg = a.cfg;
	cfg.optimizer.kind = a.optimizer == "sgd" ? OptimizerKind::sgd : OptimizerKind::adam;
	require(a.optimizer == "sgd" || a.optimizer == "adam", "train: optimizer must be sgd or adam");
	require(a.loss == "bce" || a.loss == "mse", "train: loss must be bce or mse");
	cfg.loss = a.loss == "bce" ? LossKind::binary_cross_entropy : LossKind::mean_squared_error;
	if (!a.input_norm.empty())
		cfg.input_norm = parse_input_norm(a.input_norm);
	cfg.source = parse_training_source(a.source);
	cfg.hidden.clear();
	for (double h : parse_grid(a.hidden))
		cfg.hidden.push_back(static_cast<int>(h));
	fs::create_directories(a.out_dir);

	int trained = 0, failed = 0;
	for (auto &b : plan.blocks) {
		if (b.kind != SubDecoderKind::nn) {
			std::cout << "block " << b.index << ": " << to_string(b.kind) << ", skipped\n";
			continue;
		}
		try {
			auto res = train_plan_block(plan, b.index, cfg);
			fs::path model = fs::path(a.out_dir) / ("block" + std::to_string(b.index) + ".mlp");
			save_model(res.model, model);
			b.model_path = model.string();
			const auto &v = res.validation;
			std::cout << "block " << b.index << ": N_i " << b.size << " k_i " << b.info_count() << " loss " << format_double(res.final_loss) << " nn_ber " << format_double(v.nn_ber()) << " map_ber " << format_double(v.map_ber())
			          << " ne_vs_map " << format_double(v.ratio()) << " -> " << model.string() << '\n';
			++trained;
		} catch (const Error &e) {
			std::cerr << "block " << b.index << ": training failed: " << e.what() << '\n';
			++failed;
		}
	}
	save_plan(fs::path(a.out_dir) / "plan.txt", plan, loaded.spec_path);
	std::cout << trained << " models written, plan with model paths: " << (fs::path(a.out_dir) / "plan.txt").string() << '\n';
	return failed ? 1 : 0;
}

// sweep

struct SweepArgs
{
	std::string config, spec, plan, roster = "scl32", baseline = "scl32", grid = "1,2,3,4,5", csv, plot;
	std::optional<std::uint64_t> seed;
	long min_frames = 0, max_frames = 1'000'000, target_errors = 100;
	int workers = 0, chunk = 256;
	double l_max = default_l_max;
};

void cmd_sweep(SweepArgs a)
{
	json roster = json::array();
	std::istringstream names(a.roster);
	for (std::string name; std::getline(names, name, ',');)
		roster.push_back(name);
	SweepConfig sc;
	sc.snr_grid = parse_grid(a.grid);
	sc.min_frames = a.min_frames;
	sc.max_frames = a.max_frames;
	sc.target_block_errors = a.target_errors;
	sc.workers = a.workers;
	sc.chunk_frames = a.chunk;
	std::optional<std::uint64_t> seed = a.seed;

	if (!a.config.empty()) {
		std::ifstream is(existing(a.config, "config file"));
		json cfg;
		try {
			cfg = json::parse(is);
		} catch (const json::exception &e) {
			throw Error(std::string("config: ") + e.what());
		}
		check_keys(cfg, {"spec", "plan", "roster", "baseline", "sweep", "output", "l_max"}, "config");
		auto base = fs::absolute(a.config).parent_path();
		auto path = [&](const json &j) {
			fs::path p = j.get<std::string>();
			return (p.is_absolute() ? p : base / p).string();
		};
		if (cfg.contains("spec"))
			a.spec = path(cfg["spec"]);
		if (cfg.contains("plan"))
			a.plan = path(cfg["plan"]);
		if (cfg.contains("roster")) {
			roster = cfg["roster"];
			require(roster.is_array() && !roster.empty(), "config: roster must be a nonempty array");
			for (auto &e : roster)
				if (e.is_object() && e.contains("plan"))
					e["plan"] = path(e["plan"]);
		}
		if (cfg.contains("baseline"))
			a.baseline = cfg["baseline"].get<std::string>();
		if (cfg.contains("l_max"))
			a.l_max = cfg["l_max"].get<double>();
		if (cfg.contains("sweep")) {
			const auto &s = cfg["sweep"];
			check_keys(s, {"snr_grid", "min_frames", "max_frames", "target_block_errors", "seed", "workers", "chunk_frames"}, "config.sweep");
			if (s.contains("snr_grid"))
				sc.snr_grid = s["snr_grid"].get<std::vector<double>>();
			sc.min_frames = s.value("min_frames", sc.min_frames);
			sc.max_frames = s.value("max_frames", sc.max_frames);
			sc.target_block_errors = s.value("target_block_errors", sc.target_block_errors);
			sc.workers = s.value("workers", sc.workers);
			sc.chunk_frames = s.value("chunk_frames", sc.chunk_frames);
			if (s.contains("seed"))
				seed = s["seed"].get<std::uint64_t>();
		}
		if (cfg.contains("output")) {
			check_keys(cfg["output"], {"csv", "plot"}, "config.output");
			if (cfg["output"].contains("csv"))
				a.csv = path(cfg["output"]["csv"]);
			if (cfg["output"].contains("plot"))
				a.plot = path(cfg["output"]["plot"]);
		}
	}

	RosterContext ctx;
	if (!a.plan.empty()) {
		ctx.plan = load_plan(existing(a.plan, "plan file")).plan;
		ctx.spec = ctx.plan->spec;
	}
	if (!a.spec.empty())
		ctx.spec = load_code_spec(existing(a.spec, "code spec"));
	require(!a.spec.empty() || ctx.plan, "sweep: give --spec or --plan");
	ctx.l_max = a.l_max;

	sc.seed = seed.value_or(random_seed());
	std::vector<DecoderHandle> handles;
	for (const auto &e : roster)
		handles.push_back(make_decoder(e, ctx));
	std::size_t baseline = handles.size();
	for (std::size_t i = 0; i < handles.size(); ++i)
		if (handles[i].id == a.baseline)
			baseline = i;
	if (baseline == handles.size()) {
		handles.push_back(make_decoder(a.baseline, ctx));
		std::cout << "baseline " << a.baseline << " added to the roster\n";
	}
	std::set<std::string> ids;
	for (const auto &h : handles)
		require(ids.insert(h.id).second, "sweep: duplicate decoder id '" + h.id + "'");

	std::cout << "seed " << sc.seed << '\n';
	auto sweep = paired_sweep(handles, ctx.spec, sc);
	auto records = sweep.all_records();
	if (!a.csv.empty()) {
		std::ofstream os(a.csv);
		require(static_cast<bool>(os), "cannot write " + a.csv);
		write_csv(os, records);
	} else {
		write_csv(std::cout, records);
	}
	if (!a.plot.empty()) {
		std::ofstream os(a.plot);
		require(static_cast<bool>(os), "cannot write " + a.plot);
		write_plot_data(os, records);
	}
	std::cout << "decoder,ne_vs_" << handles[baseline].id << ",ci_low,ci_high\n";
	for (std::size_t i = 0; i < handles.size(); ++i) {
		try {
			auto ne = paired_normalized_error(sweep, i, baseline);
			auto ci = ne.interval();
			std::cout << handles[i].id << ',' << format_double(ne.ne) << ',' << format_double(ci.lo) << ',' << format_double(ci.hi) << '\n';
		} catch (const Error &e) {
			std::cout << handles[i].id << ",nan,nan,nan  # " << e.what() << '\n';
		}
	}
}

// ne

void cmd_ne(const std::string &csv, const std::string &baseline, bool skip_zero)
{
	std::ifstream is(existing(csv, "CSV file"));
	auto records = read_csv(is);
	std::map<std::string, std::vector<BerRecord>> by_id;
	std::vector<std::string> order;
	for (const auto &r : records) {
		if (!by_id.count(r.decoder))
			order.push_back(r.decoder);
		by_id[r.decoder].push_back(r);
	}
	require(by_id.count(baseline), "ne: baseline '" + baseline + "' not in " + csv);
	std::cout << "decoder,ne_vs_" << baseline << '\n';
	for (const auto &id : order)
		std::cout << id << ',' << format_double(normalized_error(by_id[id], by_id[baseline], skip_zero)) << '\n';
}

// latency

void cmd_latency(long n_min, long n_max, long iterations, long partition_size, long hidden_layers)
{
	require(is_power_of_two(n_min) && is_power_of_two(n_max) && n_min <= n_max, "latency: N range must be powers of two with min <= max");
	std::cout << "N,scl,bp" << iterations << ",pnn\n";
	for (long n = n_min; n <= n_max; n *= 2) {
		std::cout << n << ',' << latency_syncs(LatencyKind::scl, {n}) << ',' << latency_syncs(LatencyKind::bp, {n, iterations}) << ',';
		if (partition_size <= n)
			std::cout << latency_syncs(LatencyKind::pnn, {n, 1, partition_size, hidden_layers});
		else
			std::cout << '-';
		std::cout << '\n';
	}
}

// decode

struct DecodeArgs
{
	std::string spec, plan, decoder = "sc";
	double ebn0 = 2.0;
	std::uint64_t seed = 1;
	long frame = 0;
	bool dump = false;
	double l_max = default_l_max;
};

void print_row(const std::string &label, std::span<const double> v)
{
	std::cout << label;
	for (double x : v)
		std::cout << ' ' << std::setprecision(4) << x;
	std::cout << '\n';
}

void cmd_decode(const DecodeArgs &a)
{
	RosterContext ctx;
	if (!a.plan.empty()) {
		ctx.plan = load_plan(existing(a.plan, "plan file")).plan;
		ctx.spec = ctx.plan->spec;
	}
	if (!a.spec.empty())
		ctx.spec = load_code_spec(existing(a.spec, "code spec"));
	require(!a.spec.empty() || ctx.plan, "decode: give --spec or --plan");
	ctx.l_max = a.l_max;
	Frame f = make_frame(ctx.spec, a.ebn0, a.seed, a.frame);
	Bits u_hat;
	std::optional<StageMessages> trace;
	const bool partitioned = a.decoder == "pnn" || a.decoder == "pml" || a.decoder.rfind("pscl", 0) == 0;
	if (partitioned && a.dump) {
		require(ctx.plan.has_value(), "decode: decoder '" + a.decoder + "' needs a partition plan");
		PartitionedConfig pcfg{a.l_max, 1};
		auto dec = a.decoder == "pnn" ? PartitionedDecoder::pnn(*ctx.plan, load_plan_models(*ctx.plan), pcfg)
		           : a.decoder == "pml" ? PartitionedDecoder::oracle(*ctx.plan, pcfg)
		                                : PartitionedDecoder::pscl(*ctx.plan, a.decoder == "pscl" ? 32 : suffix_number(a.decoder, "pscl"), pcfg);
		trace.emplace(ctx.spec.n(), a.l_max);
		u_hat = dec.decode(f.llr, &*trace).u_hat;
	} else if (a.decoder.rfind("bp", 0) == 0 && a.dump) {
		int iters = a.decoder == "bp" ? 50 : suffix_number(a.decoder, "bp");
		auto m = StageMessages::initialized(f.llr, ctx.spec, a.l_max);
		const int last = ctx.spec.n() + 1;
		for (int it = 0; it < iters && last > 1; ++it) {
			propagate_left_to_right(m, 1, last);
			propagate_right_to_left(m, last, 1);
		}
		u_hat = bp_decode(f.llr, ctx.spec, {iters, a.l_max, false}).u_hat;
		trace = std::move(m);
	} else {
		require(!a.dump, "decode: stage dump is available for bp and partitioned decoders");
		u_hat = make_decoder(a.decoder, ctx).make()(f.llr);
	}
	Bits info_hat = extract_info(u_hat, ctx.spec);
	int errors = 0;
	for (std::size_t j = 0; j < info_hat.size(); ++j)
		errors += info_hat[j] != f.info[j];
	auto bits = [](const Bits &b) {
		std::string s;
		for (auto v : b)
			s += v ? '1' : '0';
		return s;
	};
	std::cout << "decoder " << a.decoder << " ebn0_db " << format_double(a.ebn0) << " seed " << a.seed << " frame " << a.frame << '\n';
	std::cout << "u      " << bits(f.u) << "\nu_hat  " << bits(u_hat) << "\nbit_errors " << errors << '\n';
	print_row("llr", f.llr);
	if (trace) {
		for (int s = trace->stages(); s >= 1; --s) {
			print_row("L" + std::to_string(s), trace->L(s));
			print_row("R" + std::to_string(s), trace->R(s));
		}
	}
}

} // namespace

int main(int argc, char **argv)
{
	CLI::App app{"Partitioned neural polar decoding experiments"};
	app.require_subcommand(1);

	ConstructArgs ca;
	auto *construct = app.add_subcommand("construct", "Build a frozen set and write the spec file");
	construct->add_option("--n", ca.n, "Code length N")->required();
	construct->add_option("--k", ca.k, "Information bits k")->required();
	construct->add_option("--eps", ca.eps, "Design erasure probability of the BEC")->check(CLI::Range(0.0, 1.0));
	construct->add_option("--out,-o", ca.out, "Spec file (stdout if omitted)");
	construct->add_option("--base-size", ca.base_size, "Echo the partition profile for this base size");
	construct->add_option("--k-max", ca.k_max, "Merge limit for the echoed profile");

	PlanArgs pa;
	auto *plan = app.add_subcommand("plan", "Partition a code into sub-blocks");
	plan->add_option("--spec", pa.spec, "Spec file")->required();
	plan->add_option("--base-size", pa.base_size, "Initial tile size");
	plan->add_option("--k-max", pa.k_max, "Merge while merged k stays below this");
	plan->add_option("--equal", pa.equal, "M equal blocks instead of merging");
	plan->add_option("--kind", pa.kind, "Decoder for non-trivial blocks: nn or scl");
	plan->add_option("--out,-o", pa.out, "Plan file");

	TrainArgs ta;
	auto *train = app.add_subcommand("train", "Train every nn block of a plan");
	train->add_option("--plan", ta.plan, "Plan file")->required();
	train->add_option("--out-dir", ta.out_dir, "Directory for models and the updated plan")->required();
	train->add_option("--epochs", ta.cfg.epochs);
	train->add_option("--batch-size", ta.cfg.batch_size);
	train->add_option("--lr", ta.cfg.optimizer.learning_rate);
	train->add_option("--final-lr", ta.cfg.final_learning_rate, "exponential decay target, 0 keeps the rate fixed");
	train->add_option("--optimizer", ta.optimizer, "sgd or adam");
	train->add_option("--loss", ta.loss, "bce or mse");
	train->add_option("--snr-low", ta.cfg.snr_low_db);
	train->add_option("--snr-high", ta.cfg.snr_high_db);
	train->add_option("--warmup-epochs", ta.cfg.warmup_epochs, "leading epochs drawn from the warm-up SNR range");
	train->add_option("--warmup-snr-low", ta.cfg.warmup_snr_low_db);
	train->add_option("--warmup-snr-high", ta.cfg.warmup_snr_high_db);
	train->add_option("--rate", ta.cfg.code_rate, "Rate for Eb/N0 to sigma, 0 for the block rate");
	train->add_option("--source", ta.source, "channel or coupled");
	train->add_option("--input-norm", ta.input_norm, "raw_llr, clipped_scaled or sigmoid");
	train->add_option("--hidden", ta.hidden, "Hidden widths, comma separated");
	train->add_option("--seed", ta.cfg.seed);
	train->add_option("--validation-frames", ta.cfg.validation_frames);
	train->add_option("--validation-snr", ta.cfg.validation_snr_db);

	SweepArgs sa;
	auto *sweep = app.add_subcommand("sweep", "BER/BLER sweep of a decoder roster on common random numbers");
	sweep->add_option("--config", sa.config, "JSON experiment config, overrides flags");
	sweep->add_option("--spec", sa.spec, "Spec file");
	sweep->add_option("--plan", sa.plan, "Plan file for partitioned decoders");
	sweep->add_option("--roster", sa.roster, "Comma separated: sc, bp<I>, scl<L>, ml, map, pnn, pscl<L>, pml");
	sweep->add_option("--baseline", sa.baseline, "Decoder id for the NE column");
	sweep->add_option("--grid", sa.grid, "Eb/N0 points: a,b,c or lo:step:hi");
	sweep->add_option("--seed", sa.seed, "Random if omitted; echoed");
	sweep->add_option("--min-frames", sa.min_frames);
	sweep->add_option("--max-frames", sa.max_frames);
	sweep->add_option("--target-errors", sa.target_errors, "Block errors per point");
	sweep->add_option("--workers", sa.workers, "0: PNN_WORKERS or all cores");
	sweep->add_option("--chunk", sa.chunk, "Frames per work unit");
	sweep->add_option("--csv", sa.csv, "CSV output (stdout if omitted)");
	sweep->add_option("--plot", sa.plot, "gnuplot data output");
	sweep->add_option("--l-max", sa.l_max);

	std::string ne_csv, ne_baseline = "scl32";
	bool ne_skip = false;
	auto *ne = app.add_subcommand("ne", "Normalized error of every curve in a CSV");
	ne->add_option("--csv", ne_csv)->required();
	ne->add_option("--baseline", ne_baseline);
	ne->add_flag("--skip-zero", ne_skip, "Skip points where the baseline has no errors");

	long n_min = 16, n_max = 1024, iterations = 1, partition_size = 16, hidden_layers = 3;
	auto *latency = app.add_subcommand("latency", "Synchronization steps of SCL, BP and PNN");
	latency->add_option("--n-min", n_min);
	latency->add_option("--n-max", n_max);
	latency->add_option("--iterations", iterations, "BP iterations I");
	latency->add_option("--partition-size", partition_size, "N_P");
	latency->add_option("--hidden-layers", hidden_layers, "N_H");

	DecodeArgs da;
	auto *decode = app.add_subcommand("decode", "Decode one frame and optionally dump the stage messages");
	decode->add_option("--spec", da.spec);
	decode->add_option("--plan", da.plan);
	decode->add_option("--decoder", da.decoder);
	decode->add_option("--ebn0", da.ebn0);
	decode->add_option("--seed", da.seed);
	decode->add_option("--frame", da.frame);
	decode->add_flag("--dump", da.dump, "Print L and R messages of every stage");
	decode->add_option("--l-max", da.l_max);

	try {
		app.parse(argc, argv);
	} catch (const CLI::ParseError &e) {
		return app.exit(e);
	}

	try {
		if (*construct)
			cmd_construct(ca);
		else if (*plan)
			cmd_plan(pa);
		else if (*train)
			return cmd_train(ta);
		else if (*sweep)
			cmd_sweep(sa);
		else if (*ne)
			cmd_ne(ne_csv, ne_baseline, ne_skip);
		else if (*latency)
			cmd_latency(n_min, n_max, iterations, partition_size, hidden_layers);
		else if (*decode)
			cmd_decode(da);
	} catch (const std::exception &e) {
		std::cerr << "error: " << e.what() << '\n';
		return 1;
	}
	return 0;
}
