#include "arts/neural.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "arts/error.hpp"

namespace arts::nn {

namespace {

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); }

double gelu_grad(double x) {
    const double cdf = 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2));
    const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
    return cdf + x * pdf;
}

Mat apply(Activation a, const Mat& pre) {
    switch (a) {
    case Activation::identity: return pre;
    case Activation::gelu: return pre.unaryExpr([](double x) { return gelu(x); });
    case Activation::relu: return pre.cwiseMax(0.0);
    }
    return pre;
}

Mat apply_grad(Activation a, const Mat& pre, const Mat& dy) {
    switch (a) {
    case Activation::identity: return dy;
    case Activation::gelu: return dy.cwiseProduct(pre.unaryExpr([](double x) { return gelu_grad(x); }));
    case Activation::relu: return dy.cwiseProduct(pre.unaryExpr([](double x) { return x > 0.0 ? 1.0 : 0.0; }));
    }
    return dy;
}

void softmax_rows(Mat& s) {
    for (Eigen::Index r = 0; r < s.rows(); ++r) {
        const double mx = s.row(r).maxCoeff();
        s.row(r) = (s.row(r).array() - mx).exp();
        s.row(r) /= s.row(r).sum();
    }
}

}  // namespace

const char* to_string(Activation a) {
    switch (a) {
    case Activation::identity: return "identity";
    case Activation::gelu: return "gelu";
    case Activation::relu: return "relu";
    }
    return "identity";
}

Activation activation_from_string(const std::string& name) {
    if (name == "identity") return Activation::identity;
    if (name == "gelu") return Activation::gelu;
    if (name == "relu") return Activation::relu;
    fail(ErrorKind::parse, "unknown activation '" + name + "'");
}

Mat random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng, double scale) {
    Mat m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.uniform(-1.0, 1.0);
    return m;
}

// ---- Dense ----

Dense Dense::init(int in, int out, Activation activation, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    Dense d;
    d.weight = random_matrix(out, in, rng, bound);
    d.bias = random_matrix(1, out, rng, bound);
    d.activation = activation;
    return d;
}

Dense Dense::zeros(int in, int out, Activation activation) {
    return Dense{Mat::Zero(out, in), Mat::Zero(1, out), activation};
}

Dense Dense::identity(int width) { return Dense{Mat::Identity(width, width), Mat::Zero(1, width), Activation::identity}; }

Mat Dense::forward(const Mat& x) const {
    require(x.cols() == weight.cols(), ErrorKind::shape_mismatch,
            "dense: input width " + std::to_string(x.cols()) + " != " + std::to_string(weight.cols()));
    Mat pre = x * weight.transpose();
    pre.rowwise() += bias.row(0);
    return apply(activation, pre);
}

Mat Dense::forward(const Mat& x, Cache& cache) const {
    require(x.cols() == weight.cols(), ErrorKind::shape_mismatch,
            "dense: input width " + std::to_string(x.cols()) + " != " + std::to_string(weight.cols()));
    cache.input = x;
    cache.pre = x * weight.transpose();
    cache.pre.rowwise() += bias.row(0);
    return apply(activation, cache.pre);
}

Mat Dense::backward(const Cache& cache, const Mat& dy, Dense& grad) const {
    const Mat dpre = apply_grad(activation, cache.pre, dy);
    grad.weight.noalias() += dpre.transpose() * cache.input;
    grad.bias += dpre.colwise().sum();
    return dpre * weight;
}

// ---- Mlp ----

Mlp Mlp::init(int in, int hidden, int out, Rng& rng) {
    Mlp m;
    m.layers.push_back(Dense::init(in, hidden, Activation::gelu, rng));
    m.layers.push_back(Dense::init(hidden, out, Activation::identity, rng));
    return m;
}

Mat Mlp::forward(const Mat& x) const {
    Mat h = x;
    for (const Dense& l : layers) h = l.forward(h);
    return h;
}

Mat Mlp::forward(const Mat& x, Cache& cache) const {
    cache.layers.resize(layers.size());
    Mat h = x;
    for (size_t i = 0; i < layers.size(); ++i) h = layers[i].forward(h, cache.layers[i]);
    return h;
}

Mat Mlp::backward(const Cache& cache, const Mat& dy, Mlp& grad) const {
    Mat d = dy;
    for (size_t i = layers.size(); i-- > 0;) d = layers[i].backward(cache.layers[i], d, grad.layers[i]);
    return d;
}

// ---- LayerNorm ----

LayerNorm LayerNorm::init(int width) { return LayerNorm{Mat::Ones(1, width), Mat::Zero(1, width), 1e-5}; }

Mat LayerNorm::forward(const Mat& x) const {
    Cache c;
    return forward(x, c);
}

Mat LayerNorm::forward(const Mat& x, Cache& cache) const {
    require(x.cols() == gamma.cols(), ErrorKind::shape_mismatch, "layer norm: width mismatch");
    const double n = static_cast<double>(x.cols());
    cache.normalized.resize(x.rows(), x.cols());
    cache.inv_std.resize(x.rows());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        const double mean = x.row(r).sum() / n;
        const auto centered = (x.row(r).array() - mean).matrix();
        const double var = centered.squaredNorm() / n;
        cache.inv_std[r] = 1.0 / std::sqrt(var + eps);
        cache.normalized.row(r) = centered * cache.inv_std[r];
    }
    Mat y = cache.normalized.array().rowwise() * gamma.row(0).array();
    y.rowwise() += beta.row(0);
    return y;
}

Mat LayerNorm::backward(const Cache& cache, const Mat& dy, LayerNorm& grad) const {
    const double n = static_cast<double>(dy.cols());
    grad.gamma += dy.cwiseProduct(cache.normalized).colwise().sum();
    grad.beta += dy.colwise().sum();
    const Mat dxhat = dy.array().rowwise() * gamma.row(0).array();
    Mat dx(dy.rows(), dy.cols());
    for (Eigen::Index r = 0; r < dy.rows(); ++r) {
        const double sum = dxhat.row(r).sum();
        const double dot = dxhat.row(r).dot(cache.normalized.row(r));
        dx.row(r) = (cache.inv_std[r] / n) *
                    (n * dxhat.row(r).array() - sum - cache.normalized.row(r).array() * dot).matrix();
    }
    return dx;
}

// ---- MultiHeadAttention ----

MultiHeadAttention MultiHeadAttention::init(int width, int heads, Rng& rng) {
    require(heads > 0 && width % heads == 0, ErrorKind::invalid_argument, "attention width must divide by heads");
    MultiHeadAttention a;
    a.heads = heads;
    a.query = Dense::init(width, width, Activation::identity, rng);
    a.key = Dense::init(width, width, Activation::identity, rng);
    a.value = Dense::init(width, width, Activation::identity, rng);
    a.output = Dense::init(width, width, Activation::identity, rng);
    return a;
}

MultiHeadAttention MultiHeadAttention::identity(int width, int heads) {
    require(heads > 0 && width % heads == 0, ErrorKind::invalid_argument, "attention width must divide by heads");
    return MultiHeadAttention{heads, Dense::identity(width), Dense::identity(width), Dense::identity(width),
                              Dense::identity(width)};
}

Mat MultiHeadAttention::forward(const Mat& queries, const Mat& keys, const Mat& values) const {
    Cache c;
    return forward(queries, keys, values, c);
}

Mat MultiHeadAttention::forward(const Mat& queries, const Mat& keys, const Mat& values, Cache& cache) const {
    const int c = width();
    require(queries.cols() == c && keys.cols() == c && values.cols() == c, ErrorKind::shape_mismatch,
            "attention: input width must equal model width " + std::to_string(c));
    require(keys.rows() == values.rows() && keys.rows() > 0, ErrorKind::shape_mismatch,
            "attention: keys and values must have the same non-zero length");
    cache.q = query.forward(queries, cache.query);
    cache.k = key.forward(keys, cache.key);
    cache.v = value.forward(values, cache.value);
    const int d = c / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    Mat concat(queries.rows(), c);
    cache.weights.resize(heads);
    for (int h = 0; h < heads; ++h) {
        Mat s = cache.q.middleCols(h * d, d) * cache.k.middleCols(h * d, d).transpose() * scale;
        softmax_rows(s);
        concat.middleCols(h * d, d) = s * cache.v.middleCols(h * d, d);
        cache.weights[h] = std::move(s);
    }
    return output.forward(concat, cache.output);
}

MultiHeadAttention::InputGrads MultiHeadAttention::backward(const Cache& cache, const Mat& dy,
                                                            MultiHeadAttention& grad) const {
    const int c = width();
    const int d = c / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    const Mat dconcat = output.backward(cache.output, dy, grad.output);
    Mat dq(cache.q.rows(), c), dk(cache.k.rows(), c), dv(cache.v.rows(), c);
    for (int h = 0; h < heads; ++h) {
        const Mat& a = cache.weights[h];
        const auto dout = dconcat.middleCols(h * d, d);
        dv.middleCols(h * d, d) = a.transpose() * dout;
        const Mat da = dout * cache.v.middleCols(h * d, d).transpose();
        const Vec row_dot = da.cwiseProduct(a).rowwise().sum();
        const Mat ds = (a.array() * (da.colwise() - row_dot).array()).matrix() * scale;
        dq.middleCols(h * d, d) = ds * cache.k.middleCols(h * d, d);
        dk.middleCols(h * d, d) = ds.transpose() * cache.q.middleCols(h * d, d);
    }
    InputGrads out;
    out.query = query.backward(cache.query, dq, grad.query);
    out.key = key.backward(cache.key, dk, grad.key);
    out.value = value.backward(cache.value, dv, grad.value);
    return out;
}

std::vector<Mat> MultiHeadAttention::attention_weights(const Mat& queries, const Mat& keys) const {
    Cache c;
    forward(queries, keys, keys, c);
    return c.weights;
}

// ---- AttentionBlock ----

AttentionBlock AttentionBlock::init(int width, int heads, int ffn_hidden, Rng& rng) {
    AttentionBlock b;
    b.norm_query = LayerNorm::init(width);
    b.norm_memory = LayerNorm::init(width);
    b.attention = MultiHeadAttention::init(width, heads, rng);
    b.norm_ffn = LayerNorm::init(width);
    if (ffn_hidden > 0) b.ffn = Mlp::init(width, ffn_hidden, width, rng);
    return b;
}

Mat AttentionBlock::forward_impl(const Mat& x, const Mat* memory, Cache* cache) const {
    Cache local;
    Cache& c = cache != nullptr ? *cache : local;
    c.cross = memory != nullptr;
    const Mat h = norm_query.forward(x, c.nq);
    Mat x1;
    if (memory != nullptr) {
        const Mat m = norm_memory.forward(*memory, c.nm);
        x1 = x + attention.forward(h, m, m, c.attention);
    } else {
        x1 = x + attention.forward(h, h, h, c.attention);
    }
    if (ffn.layers.empty()) return x1;
    return x1 + ffn.forward(norm_ffn.forward(x1, c.nf), c.ffn);
}

Mat AttentionBlock::forward(const Mat& x) const { return forward_impl(x, nullptr, nullptr); }
Mat AttentionBlock::forward(const Mat& x, Cache& cache) const { return forward_impl(x, nullptr, &cache); }
Mat AttentionBlock::forward(const Mat& x, const Mat& memory) const { return forward_impl(x, &memory, nullptr); }
Mat AttentionBlock::forward(const Mat& x, const Mat& memory, Cache& cache) const {
    return forward_impl(x, &memory, &cache);
}

Mat AttentionBlock::backward(const Cache& cache, const Mat& dy, AttentionBlock& grad) const {
    Mat unused;
    return backward(cache, dy, grad, unused);
}

Mat AttentionBlock::backward(const Cache& cache, const Mat& dy, AttentionBlock& grad, Mat& grad_memory) const {
    Mat dx1 = dy;
    if (!ffn.layers.empty()) {
        const Mat dn = ffn.backward(cache.ffn, dy, grad.ffn);
        dx1 += norm_ffn.backward(cache.nf, dn, grad.norm_ffn);
    }
    const MultiHeadAttention::InputGrads g = attention.backward(cache.attention, dx1, grad.attention);
    Mat dh;
    if (cache.cross) {
        dh = g.query;
        const Mat dm = norm_memory.backward(cache.nm, g.key + g.value, grad.norm_memory);
        if (grad_memory.size() == 0) {
            grad_memory = dm;
        } else {
            grad_memory += dm;
        }
    } else {
        dh = g.query + g.key + g.value;
    }
    return dx1 + norm_query.backward(cache.nq, dh, grad.norm_query);
}

// ---- Adam ----

void Adam::step(std::span<Mat* const> params, std::span<const Mat* const> grads, AdamState& state) const {
    require(params.size() == grads.size(), ErrorKind::shape_mismatch, "adam: parameter/gradient count mismatch");
    if (state.first.size() != params.size()) {
        state.first.clear();
        state.second.clear();
        for (const Mat* p : params) {
            state.first.push_back(Mat::Zero(p->rows(), p->cols()));
            state.second.push_back(Mat::Zero(p->rows(), p->cols()));
        }
        state.step = 0;
    }
    ++state.step;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
    for (size_t i = 0; i < params.size(); ++i) {
        const Mat& g = *grads[i];
        require(g.rows() == params[i]->rows() && g.cols() == params[i]->cols(), ErrorKind::shape_mismatch,
                "adam: gradient shape mismatch");
        state.first[i] = beta1 * state.first[i] + (1.0 - beta1) * g;
        state.second[i] = beta2 * state.second[i] + (1.0 - beta2) * g.cwiseProduct(g);
        const Mat m_hat = state.first[i] / c1;
        const Mat v_hat = state.second[i] / c2;
        params[i]->array() -= lr * m_hat.array() / (v_hat.array().sqrt() + eps);
    }
}

// ---- gradient check ----

double grad_check(const std::function<double()>& loss, std::span<Mat* const> params, std::span<const Mat> analytic,
                  double eps) {
    require(params.size() == analytic.size(), ErrorKind::shape_mismatch, "grad_check: size mismatch");
    double worst = 0.0;
    for (size_t i = 0; i < params.size(); ++i) {
        Mat& p = *params[i];
        require(p.rows() == analytic[i].rows() && p.cols() == analytic[i].cols(), ErrorKind::shape_mismatch,
                "grad_check: gradient shape mismatch");
        for (Eigen::Index k = 0; k < p.size(); ++k) {
            const double saved = p.data()[k];
            const auto at = [&](double offset) {
                p.data()[k] = saved + offset;
                return loss();
            };
            const double numeric = (8.0 * (at(eps) - at(-eps)) - (at(2.0 * eps) - at(-2.0 * eps))) / (12.0 * eps);
            p.data()[k] = saved;
            const double a = analytic[i].data()[k];
            const double denom = std::max({std::abs(a), std::abs(numeric), 1e-6});
            worst = std::max(worst, std::abs(a - numeric) / denom);
        }
    }
    return worst;
}

}  // namespace arts::nn
