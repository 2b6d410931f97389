#pragma once

#include <concepts>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "arts/random.hpp"
#include "arts/types.hpp"

// Small learnable kernels with hand-derived backward passes. Tensors are
// Eigen matrices with one token (frame, joint, sample) per row.
//
// Every module offers
//   Mat forward(const Mat& x) const;                       inference
//   Mat forward(const Mat& x, Cache& cache) const;         training
//   Mat backward(const Cache&, const Mat& dy, M& grad) const;
// where `grad` is a module of the same type whose parameters accumulate
// dL/dparam (see zeros_like).
namespace arts::nn {

enum class Activation { identity, gelu, relu };

const char* to_string(Activation a);
Activation activation_from_string(const std::string& name);

struct Dense {
    Mat weight;  // out x in
    Mat bias;    // 1 x out
    Activation activation = Activation::identity;

    // Uniform in +-1/sqrt(in) for weight and bias.
    static Dense init(int in, int out, Activation activation, Rng& rng);
    static Dense zeros(int in, int out, Activation activation = Activation::identity);
    static Dense identity(int width);

    int in_features() const { return static_cast<int>(weight.cols()); }
    int out_features() const { return static_cast<int>(weight.rows()); }

    struct Cache {
        Mat input;
        Mat pre;
    };
    Mat forward(const Mat& x) const;
    Mat forward(const Mat& x, Cache& cache) const;
    Mat backward(const Cache& cache, const Mat& dy, Dense& grad) const;
};

// Two-layer perceptron by default: in -> hidden (gelu) -> out (identity).
struct Mlp {
    std::vector<Dense> layers;

    static Mlp init(int in, int hidden, int out, Rng& rng);

    int in_features() const { return layers.front().in_features(); }
    int out_features() const { return layers.back().out_features(); }

    struct Cache {
        std::vector<Dense::Cache> layers;
    };
    Mat forward(const Mat& x) const;
    Mat forward(const Mat& x, Cache& cache) const;
    Mat backward(const Cache& cache, const Mat& dy, Mlp& grad) const;
};

struct LayerNorm {
    Mat gamma;  // 1 x C
    Mat beta;   // 1 x C
    double eps = 1e-5;

    static LayerNorm init(int width);

    struct Cache {
        Mat normalized;
        Vec inv_std;
    };
    Mat forward(const Mat& x) const;
    Mat forward(const Mat& x, Cache& cache) const;
    Mat backward(const Cache& cache, const Mat& dy, LayerNorm& grad) const;
};

// Scaled dot-product attention with `heads` heads over width C = heads * d.
struct MultiHeadAttention {
    int heads = 1;
    Dense query;
    Dense key;
    Dense value;
    Dense output;

    static MultiHeadAttention init(int width, int heads, Rng& rng);
    static MultiHeadAttention identity(int width, int heads);

    int width() const { return query.out_features(); }

    struct Cache {
        Dense::Cache query, key, value, output;
        Mat q, k, v;
        std::vector<Mat> weights;  // per head, rows sum to 1
    };
    struct InputGrads {
        Mat query;
        Mat key;
        Mat value;
    };
    Mat forward(const Mat& queries, const Mat& keys, const Mat& values) const;
    Mat forward(const Mat& queries, const Mat& keys, const Mat& values, Cache& cache) const;
    InputGrads backward(const Cache& cache, const Mat& dy, MultiHeadAttention& grad) const;

    std::vector<Mat> attention_weights(const Mat& queries, const Mat& keys) const;
};

// Pre-norm transformer layer. Self-attention when used with forward(x);
// cross-attention (queries from x, keys/values from memory) with forward(x, m).
// An empty feed-forward network disables that sublayer.
struct AttentionBlock {
    LayerNorm norm_query;
    LayerNorm norm_memory;
    MultiHeadAttention attention;
    LayerNorm norm_ffn;
    Mlp ffn;

    static AttentionBlock init(int width, int heads, int ffn_hidden, Rng& rng);

    int width() const { return attention.width(); }

    struct Cache {
        bool cross = false;
        LayerNorm::Cache nq, nm, nf;
        MultiHeadAttention::Cache attention;
        Mlp::Cache ffn;
    };
    Mat forward(const Mat& x) const;
    Mat forward(const Mat& x, Cache& cache) const;
    Mat backward(const Cache& cache, const Mat& dy, AttentionBlock& grad) const;

    Mat forward(const Mat& x, const Mat& memory) const;
    Mat forward(const Mat& x, const Mat& memory, Cache& cache) const;
    // Returns dL/dx; dL/dmemory is accumulated into `grad_memory`.
    Mat backward(const Cache& cache, const Mat& dy, AttentionBlock& grad, Mat& grad_memory) const;

private:
    Mat forward_impl(const Mat& x, const Mat* memory, Cache* cache) const;
};

// ---- parameter traversal ----

template <class T, class U>
concept ModuleOf = std::same_as<std::remove_const_t<T>, U>;

template <class D, class F>
    requires ModuleOf<D, Dense>
void visit_params(D& d, const std::string& prefix, F&& f) {
    f(prefix + "weight", d.weight);
    f(prefix + "bias", d.bias);
}

template <class M, class F>
    requires ModuleOf<M, Mlp>
void visit_params(M& m, const std::string& prefix, F&& f) {
    for (size_t i = 0; i < m.layers.size(); ++i) visit_params(m.layers[i], prefix + std::to_string(i) + ".", f);
}

template <class L, class F>
    requires ModuleOf<L, LayerNorm>
void visit_params(L& l, const std::string& prefix, F&& f) {
    f(prefix + "gamma", l.gamma);
    f(prefix + "beta", l.beta);
}

template <class A, class F>
    requires ModuleOf<A, MultiHeadAttention>
void visit_params(A& a, const std::string& prefix, F&& f) {
    visit_params(a.query, prefix + "query.", f);
    visit_params(a.key, prefix + "key.", f);
    visit_params(a.value, prefix + "value.", f);
    visit_params(a.output, prefix + "output.", f);
}

template <class B, class F>
    requires ModuleOf<B, AttentionBlock>
void visit_params(B& b, const std::string& prefix, F&& f) {
    visit_params(b.norm_query, prefix + "norm_query.", f);
    visit_params(b.norm_memory, prefix + "norm_memory.", f);
    visit_params(b.attention, prefix + "attention.", f);
    visit_params(b.norm_ffn, prefix + "norm_ffn.", f);
    visit_params(b.ffn, prefix + "ffn.", f);
}

template <class M>
std::vector<Mat*> parameters(M& module) {
    std::vector<Mat*> out;
    visit_params(module, "", [&](const std::string&, Mat& p) { out.push_back(&p); });
    return out;
}

template <class M>
std::vector<const Mat*> parameters(const M& module) {
    std::vector<const Mat*> out;
    visit_params(module, "", [&](const std::string&, const Mat& p) { out.push_back(&p); });
    return out;
}

template <class M>
M zeros_like(M module) {
    visit_params(module, "", [](const std::string&, Mat& p) { p.setZero(); });
    return module;
}

template <class M>
Eigen::Index parameter_count(const M& module) {
    Eigen::Index n = 0;
    visit_params(module, "", [&](const std::string&, const Mat& p) { n += p.size(); });
    return n;
}

// ---- optimization ----

struct AdamState {
    std::vector<Mat> first;
    std::vector<Mat> second;
    long step = 0;
};

struct Adam {
    double lr = 3e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    // One bias-corrected Adam update; state is lazily sized on first use.
    void step(std::span<Mat* const> params, std::span<const Mat* const> grads, AdamState& state) const;
};

// ---- gradient checking ----

// Largest relative discrepancy |a - n| / max(|a|, |n|, 1e-6) between analytic
// gradients and fourth-order central differences of `loss` over every entry of
// `params` (which may include module inputs). The fourth-order stencil allows
// a wide step, which keeps roundoff small where the true gradient is zero.
double grad_check(const std::function<double()>& loss, std::span<Mat* const> params,
                  std::span<const Mat> analytic, double eps = 1e-3);

// Convenience wrapper for single-input modules: loss = sum(weights .* forward(x))
// with fixed random weights; checks parameter and input gradients.
template <class M>
double grad_check_module(M& module, Mat& input, std::uint64_t seed, double eps = 1e-3) {
    Rng rng(seed);
    typename M::Cache cache;
    const Mat y = module.forward(input, cache);
    Mat weights(y.rows(), y.cols());
    for (Eigen::Index i = 0; i < weights.size(); ++i) weights.data()[i] = rng.uniform(-1.0, 1.0);
    M grad = zeros_like(module);
    const Mat dx = module.backward(cache, weights, grad);

    std::vector<Mat*> params = parameters(module);
    std::vector<Mat> analytic;
    for (const Mat* g : parameters(grad)) analytic.push_back(*g);
    params.push_back(&input);
    analytic.push_back(dx);
    const auto loss = [&] { return (module.forward(input).array() * weights.array()).sum(); };
    return grad_check(loss, params, analytic, eps);
}

Mat random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng, double scale = 1.0);

}  // namespace arts::nn
