/*
Feed-forward network for sub-block decoding

ReLU hidden layers and a sigmoid output layer. Weights are stored as
fan_in x fan_out matrices so a batch of row vectors X maps to X * W + b.
The output is read as P(bit = 1).
*/

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <limits>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "error.hpp"

namespace pnn {

enum class LossKind { binary_cross_entropy, mean_squared_error };

// How channel LLRs are mapped onto the network input.
enum class InputNorm {
	raw_llr,        // unchanged
	clipped_scaled, // clip to [-clip, clip], divide by clip
	sigmoid,        // P(bit = 0) = 1 / (1 + e^-llr), in (0, 1)
};

inline const char *to_string(InputNorm n)
{
	switch (n) {
	case InputNorm::raw_llr: return "raw_llr";
	case InputNorm::clipped_scaled: return "clipped_scaled";
	case InputNorm::sigmoid: return "sigmoid";
	}
	return "?";
}

inline InputNorm parse_input_norm(const std::string &s)
{
	if (s == "raw_llr")
		return InputNorm::raw_llr;
	if (s == "clipped_scaled")
		return InputNorm::clipped_scaled;
	if (s == "sigmoid")
		return InputNorm::sigmoid;
	throw Error("unknown input normalization '" + s + "'");
}

inline double normalize_llr(double llr, InputNorm norm, double clip)
{
	switch (norm) {
	case InputNorm::raw_llr: return llr;
	case InputNorm::clipped_scaled: return std::clamp(llr, -clip, clip) / clip;
	case InputNorm::sigmoid: return 1.0 / (1.0 + std::exp(-llr));
	}
	return llr;
}

template <typename Real>
struct Mlp
{
	using Matrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
	using Row = Eigen::Matrix<Real, 1, Eigen::Dynamic>;

	struct Layer
	{
		Matrix weights; // fan_in x fan_out
		Row biases;     // 1 x fan_out
	};

	std::vector<int> sizes; // d_in, hidden..., d_out
	std::vector<Layer> layers;
	InputNorm input_norm = InputNorm::clipped_scaled;
	double input_clip = 20.0;

	int input_size() const { return sizes.front(); }
	int output_size() const { return sizes.back(); }
	int hidden_layers() const { return static_cast<int>(sizes.size()) - 2; }

	static Mlp zeros(std::vector<int> layer_sizes)
	{
		require(layer_sizes.size() >= 2, "mlp: need at least an input and an output size");
		for (int s : layer_sizes)
			require(s >= 1, "mlp: layer sizes must be positive");
		Mlp m;
		m.sizes = std::move(layer_sizes);
		for (std::size_t l = 0; l + 1 < m.sizes.size(); ++l)
			m.layers.push_back({Matrix::Zero(m.sizes[l], m.sizes[l + 1]), Row::Zero(m.sizes[l + 1])});
		return m;
	}

	// He-uniform weights, zero biases.
	template <typename Rng>
	static Mlp random(std::vector<int> layer_sizes, Rng &rng)
	{
		Mlp m = zeros(std::move(layer_sizes));
		for (auto &layer : m.layers) {
			double bound = std::sqrt(6.0 / layer.weights.rows());
			std::uniform_real_distribution<double> dist(-bound, bound);
			for (Eigen::Index i = 0; i < layer.weights.size(); ++i)
				layer.weights.data()[i] = static_cast<Real>(dist(rng));
		}
		return m;
	}

	std::size_t parameter_count() const
	{
		std::size_t c = 0;
		for (const auto &l : layers)
			c += l.weights.size() + l.biases.size();
		return c;
	}

	bool finite() const
	{
		for (const auto &l : layers)
			if (!l.weights.allFinite() || !l.biases.allFinite())
				return false;
		return true;
	}

	// Pre-sigmoid output of the last layer; rows of x are samples.
	Matrix logits(const Matrix &x) const
	{
		require(x.cols() == input_size(), "mlp_forward: input width " + std::to_string(x.cols()) + " does not match d_in " + std::to_string(input_size()));
		Matrix a = x;
		for (std::size_t l = 0; l < layers.size(); ++l) {
			Matrix z = a * layers[l].weights;
			z.rowwise() += layers[l].biases;
			if (l + 1 < layers.size())
				a = z.cwiseMax(Real(0));
			else
				a = std::move(z);
		}
		return a;
	}

	Matrix forward(const Matrix &x) const
	{
		return logits(x).unaryExpr([](Real v) { return Real(1) / (Real(1) + std::exp(-v)); });
	}

	std::vector<Real> forward(std::span<const Real> x) const
	{
		Matrix in(1, static_cast<Eigen::Index>(x.size()));
		for (std::size_t i = 0; i < x.size(); ++i)
			in(0, i) = x[i];
		Matrix out = forward(in);
		return std::vector<Real>(out.data(), out.data() + out.size());
	}

	// Applies the stored input normalization to raw channel LLRs first.
	std::vector<Real> forward_llr(std::span<const double> llr) const
	{
		std::vector<Real> x(llr.size());
		for (std::size_t i = 0; i < llr.size(); ++i)
			x[i] = static_cast<Real>(normalize_llr(llr[i], input_norm, input_clip));
		return forward(std::span<const Real>(x));
	}

	template <typename Other>
	Mlp<Other> cast() const
	{
		Mlp<Other> m;
		m.sizes = sizes;
		m.input_norm = input_norm;
		m.input_clip = input_clip;
		for (const auto &l : layers)
			m.layers.push_back({l.weights.template cast<Other>(), l.biases.template cast<Other>()});
		return m;
	}
};

using MlpModel = Mlp<float>;

template <typename Real>
struct Gradients
{
	std::vector<typename Mlp<Real>::Matrix> weights;
	std::vector<typename Mlp<Real>::Row> biases;

	static Gradients like(const Mlp<Real> &m)
	{
		Gradients g;
		for (const auto &l : m.layers) {
			g.weights.push_back(Mlp<Real>::Matrix::Zero(l.weights.rows(), l.weights.cols()));
			g.biases.push_back(Mlp<Real>::Row::Zero(l.biases.cols()));
		}
		return g;
	}
};

// Mean loss over every (sample, output) entry plus its exact gradient.
template <typename Real>
Real loss_and_gradients(const Mlp<Real> &model, const typename Mlp<Real>::Matrix &x, const typename Mlp<Real>::Matrix &target, LossKind loss, Gradients<Real> &grad)
{
	using Matrix = typename Mlp<Real>::Matrix;
	require(x.cols() == model.input_size(), "backprop: input width does not match d_in");
	require(target.cols() == model.output_size() && target.rows() == x.rows(), "backprop: target shape does not match the output layer");
	const std::size_t depth = model.layers.size();
	if (grad.weights.size() != depth)
		grad = Gradients<Real>::like(model);

	std::vector<Matrix> act(depth + 1);
	act[0] = x;
	Matrix logits;
	for (std::size_t l = 0; l < depth; ++l) {
		Matrix z = act[l] * model.layers[l].weights;
		z.rowwise() += model.layers[l].biases;
		if (l + 1 < depth) {
			act[l + 1] = z.cwiseMax(Real(0));
		} else {
			logits = z;
			act[l + 1] = z.unaryExpr([](Real v) { return Real(1) / (Real(1) + std::exp(-v)); });
		}
	}
	const Matrix &p = act[depth];
	const Real scale = Real(1) / static_cast<Real>(p.size());
	Real value = 0;
	Matrix delta(p.rows(), p.cols());
	if (loss == LossKind::binary_cross_entropy) {
		// softplus(z) - t z, evaluated stably
		for (Eigen::Index i = 0; i < p.size(); ++i) {
			Real z = logits.data()[i], t = target.data()[i];
			value += std::max(z, Real(0)) + std::log1p(std::exp(-std::abs(z))) - t * z;
			delta.data()[i] = (p.data()[i] - t) * scale;
		}
	} else {
		for (Eigen::Index i = 0; i < p.size(); ++i) {
			Real q = p.data()[i], e = q - target.data()[i];
			value += e * e;
			delta.data()[i] = Real(2) * e * q * (Real(1) - q) * scale;
		}
	}
	for (std::size_t l = depth; l-- > 0;) {
		grad.weights[l].noalias() = act[l].transpose() * delta;
		grad.biases[l] = delta.colwise().sum();
		if (l > 0) {
			Matrix back = delta * model.layers[l].weights.transpose();
			delta = back.cwiseProduct((act[l].array() > Real(0)).matrix().template cast<Real>());
		}
	}
	return value * scale;
}

template <typename Real>
Real evaluate_loss(const Mlp<Real> &model, const typename Mlp<Real>::Matrix &x, const typename Mlp<Real>::Matrix &target, LossKind loss)
{
	auto z = model.logits(x);
	require(target.rows() == z.rows() && target.cols() == z.cols(), "loss: target shape does not match the output layer");
	Real value = 0;
	for (Eigen::Index i = 0; i < z.size(); ++i) {
		Real v = z.data()[i], t = target.data()[i];
		if (loss == LossKind::binary_cross_entropy) {
			value += std::max(v, Real(0)) + std::log1p(std::exp(-std::abs(v))) - t * v;
		} else {
			Real q = Real(1) / (Real(1) + std::exp(-v));
			value += (q - t) * (q - t);
		}
	}
	return value / static_cast<Real>(z.size());
}

// Gradient of a single sample, as used by the finite-difference checks.
template <typename Real>
Gradients<Real> backprop_grad(const Mlp<Real> &model, std::span<const std::type_identity_t<Real>> x, std::span<const std::uint8_t> target, LossKind loss)
{
	require(static_cast<int>(x.size()) == model.input_size(), "backprop_grad: input length does not match d_in");
	require(static_cast<int>(target.size()) == model.output_size(), "backprop_grad: target length does not match d_out");
	typename Mlp<Real>::Matrix in(1, x.size()), t(1, target.size());
	for (std::size_t i = 0; i < x.size(); ++i)
		in(0, i) = x[i];
	for (std::size_t i = 0; i < target.size(); ++i) {
		require(target[i] <= 1, "backprop_grad: target bits must be 0 or 1");
		t(0, i) = target[i];
	}
	auto g = Gradients<Real>::like(model);
	loss_and_gradients(model, in, t, loss, g);
	return g;
}

enum class OptimizerKind { sgd, adam };

struct OptimizerConfig
{
	OptimizerKind kind = OptimizerKind::adam;
	double learning_rate = 1e-3;
	double beta1 = 0.9;
	double beta2 = 0.999;
	double epsilon = 1e-8;
};

template <typename Real>
class Optimizer
{
public:
	Optimizer(const Mlp<Real> &model, OptimizerConfig cfg) : cfg_(cfg), m_(Gradients<Real>::like(model)), v_(Gradients<Real>::like(model))
	{
		require(cfg.learning_rate > 0.0, "optimizer: learning rate must be positive");
	}

	void set_learning_rate(double lr)
	{
		require(lr > 0.0, "optimizer: learning rate must be positive");
		cfg_.learning_rate = lr;
	}

	void step(Mlp<Real> &model, const Gradients<Real> &g)
	{
		++t_;
		const Real lr = static_cast<Real>(cfg_.learning_rate);
		if (cfg_.kind == OptimizerKind::sgd) {
			for (std::size_t l = 0; l < model.layers.size(); ++l) {
				model.layers[l].weights -= lr * g.weights[l];
				model.layers[l].biases -= lr * g.biases[l];
			}
			return;
		}
		const Real b1 = static_cast<Real>(cfg_.beta1), b2 = static_cast<Real>(cfg_.beta2), eps = static_cast<Real>(cfg_.epsilon);
		const Real c1 = Real(1) - static_cast<Real>(std::pow(cfg_.beta1, t_));
		const Real c2 = Real(1) - static_cast<Real>(std::pow(cfg_.beta2, t_));
		auto update = [&](auto &param, auto &m, auto &v, const auto &grad) {
			m = b1 * m + (Real(1) - b1) * grad;
			v = b2 * v + (Real(1) - b2) * grad.cwiseProduct(grad);
			param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
		};
		for (std::size_t l = 0; l < model.layers.size(); ++l) {
			update(model.layers[l].weights, m_.weights[l], v_.weights[l], g.weights[l]);
			update(model.layers[l].biases, m_.biases[l], v_.biases[l], g.biases[l]);
		}
	}

private:
	OptimizerConfig cfg_;
	Gradients<Real> m_, v_;
	long t_ = 0;
};

/*
Model file, version 1:

  pnn-mlp 1
  layers <d_in> <h_1> ... <d_out>
  activations relu sigmoid
  input <raw_llr|clipped_scaled|sigmoid> <clip>
  layer <index> <fan_in> <fan_out>
  <fan_in lines of fan_out weights, row-major>
  <one line of fan_out biases>
  ... repeated per layer
  end

Values are written as shortest round-trip decimals.
*/
inline constexpr int model_file_version = 1;

namespace detail {

template <typename Real>
std::string format_real(Real v)
{
	char buf[64];
	auto r = std::to_chars(buf, buf + sizeof buf, v);
	return std::string(buf, r.ptr);
}

template <typename Real>
Real parse_real(const std::string &tok)
{
	Real v{};
	auto r = std::from_chars(tok.data(), tok.data() + tok.size(), v);
	require(r.ec == std::errc() && r.ptr == tok.data() + tok.size(), "model file: bad number '" + tok + "'");
	require(std::isfinite(v), "model file: non-finite parameter");
	return v;
}

} // namespace detail

template <typename Real>
void write_model(std::ostream &os, const Mlp<Real> &m)
{
	os << "pnn-mlp " << model_file_version << '\n';
	os << "layers";
	for (int s : m.sizes)
		os << ' ' << s;
	os << "\nactivations relu sigmoid\n";
	os << "input " << to_string(m.input_norm) << ' ' << detail::format_real(m.input_clip) << '\n';
	for (std::size_t l = 0; l < m.layers.size(); ++l) {
		const auto &layer = m.layers[l];
		os << "layer " << l << ' ' << layer.weights.rows() << ' ' << layer.weights.cols() << '\n';
		for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
			for (Eigen::Index c = 0; c < layer.weights.cols(); ++c)
				os << (c ? " " : "") << detail::format_real(layer.weights(r, c));
			os << '\n';
		}
		for (Eigen::Index c = 0; c < layer.biases.cols(); ++c)
			os << (c ? " " : "") << detail::format_real(layer.biases(0, c));
		os << '\n';
	}
	os << "end\n";
}

template <typename Real>
Mlp<Real> read_model(std::istream &is)
{
	auto next = [&is](const char *what) {
		std::string tok;
		require(static_cast<bool>(is >> tok), std::string("model file: truncated while reading ") + what);
		return tok;
	};
	require(next("magic") == "pnn-mlp", "model file: missing 'pnn-mlp' header");
	std::string version = next("version");
	require(version == std::to_string(model_file_version), "model file: unsupported version " + version + " (expected " + std::to_string(model_file_version) + ")");
	require(next("layers") == "layers", "model file: expected 'layers'");
	std::string line;
	std::getline(is, line);
	std::istringstream ls(line);
	std::vector<int> sizes{std::istream_iterator<int>(ls), std::istream_iterator<int>()};
	require(sizes.size() >= 2, "model file: need at least two layer sizes");
	require(next("activations") == "activations", "model file: expected 'activations'");
	require(next("hidden activation") == "relu", "model file: only relu hidden activations are supported");
	require(next("output activation") == "sigmoid", "model file: only a sigmoid output is supported");
	require(next("input") == "input", "model file: expected 'input'");
	InputNorm norm = parse_input_norm(next("input normalization"));
	double clip = detail::parse_real<double>(next("input clip"));
	Mlp<Real> m = Mlp<Real>::zeros(sizes);
	m.input_norm = norm;
	m.input_clip = clip;
	for (std::size_t l = 0; l < m.layers.size(); ++l) {
		require(next("layer") == "layer", "model file: expected 'layer'");
		require(next("layer index") == std::to_string(l), "model file: layers out of order");
		require(next("fan_in") == std::to_string(sizes[l]), "model file: fan_in does not match layer sizes");
		require(next("fan_out") == std::to_string(sizes[l + 1]), "model file: fan_out does not match layer sizes");
		auto &layer = m.layers[l];
		for (Eigen::Index r = 0; r < layer.weights.rows(); ++r)
			for (Eigen::Index c = 0; c < layer.weights.cols(); ++c)
				layer.weights(r, c) = detail::parse_real<Real>(next("weights"));
		for (Eigen::Index c = 0; c < layer.biases.cols(); ++c)
			layer.biases(0, c) = detail::parse_real<Real>(next("biases"));
	}
	require(next("end marker") == "end", "model file: expected 'end'");
	return m;
}

template <typename Real>
void save_model(const Mlp<Real> &m, const std::filesystem::path &path)
{
	std::ofstream os(path);
	require(static_cast<bool>(os), "cannot write " + path.string());
	write_model(os, m);
	require(static_cast<bool>(os), "error while writing " + path.string());
}

template <typename Real = float>
Mlp<Real> load_model(const std::filesystem::path &path)
{
	std::ifstream is(path);
	require(static_cast<bool>(is), "cannot read " + path.string());
	return read_model<Real>(is);
}

} // namespace pnn
