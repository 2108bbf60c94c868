#include "muxai/model.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <string>

namespace muxai {

namespace {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<Mat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const Mat<T>>;

struct BlockGeometry {
    int in_channels, out_channels, kernel, padding;
    int in_h, in_w;    // conv input
    int conv_h, conv_w;  // conv output (pre-pool)
    int out_h, out_w;  // pooled output
};

std::vector<BlockGeometry> block_geometry(const ArchConfig& arch) {
    std::vector<BlockGeometry> g;
    int c = 1, h = arch.input_height, w = arch.input_width;
    for (const auto& b : arch.conv_blocks) {
        BlockGeometry bg{c, b.out_channels, b.kernel_size, b.padding, h, w, 0, 0, 0, 0};
        bg.conv_h = h + 2 * b.padding - b.kernel_size + 1;
        bg.conv_w = w + 2 * b.padding - b.kernel_size + 1;
        bg.out_h = bg.conv_h / 2;
        bg.out_w = bg.conv_w / 2;
        g.push_back(bg);
        c = b.out_channels;
        h = bg.out_h;
        w = bg.out_w;
    }
    return g;
}

// Activations are stored channel-major: rows = channels, columns = (batch, y, x).
template <typename T>
void im2col(const Mat<T>& input, int batch, const BlockGeometry& g, Mat<T>& col) {
    const int k = g.kernel;
    const std::ptrdiff_t in_plane = static_cast<std::ptrdiff_t>(g.in_h) * g.in_w;
    const std::ptrdiff_t out_plane = static_cast<std::ptrdiff_t>(g.conv_h) * g.conv_w;
    col.resize(static_cast<Eigen::Index>(g.in_channels) * k * k, batch * out_plane);
    for (int c = 0; c < g.in_channels; ++c) {
        const T* src_c = input.data() + static_cast<std::ptrdiff_t>(c) * input.cols();
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                T* dst = col.data() + static_cast<std::ptrdiff_t>((c * k + ky) * k + kx) * col.cols();
                for (int b = 0; b < batch; ++b) {
                    const T* src = src_c + b * in_plane;
                    T* d = dst + b * out_plane;
                    for (int y = 0; y < g.conv_h; ++y) {
                        const int sy = y + ky - g.padding;
                        T* row = d + static_cast<std::ptrdiff_t>(y) * g.conv_w;
                        if (sy < 0 || sy >= g.in_h) {
                            std::fill(row, row + g.conv_w, T(0));
                            continue;
                        }
                        const T* srow = src + static_cast<std::ptrdiff_t>(sy) * g.in_w;
                        for (int x = 0; x < g.conv_w; ++x) {
                            const int sx = x + kx - g.padding;
                            row[x] = (sx >= 0 && sx < g.in_w) ? srow[sx] : T(0);
                        }
                    }
                }
            }
        }
    }
}

template <typename T>
void col2im(const Mat<T>& col, int batch, const BlockGeometry& g, Mat<T>& grad_input) {
    const int k = g.kernel;
    const std::ptrdiff_t in_plane = static_cast<std::ptrdiff_t>(g.in_h) * g.in_w;
    const std::ptrdiff_t out_plane = static_cast<std::ptrdiff_t>(g.conv_h) * g.conv_w;
    grad_input.setZero(g.in_channels, batch * in_plane);
    for (int c = 0; c < g.in_channels; ++c) {
        T* dst_c = grad_input.data() + static_cast<std::ptrdiff_t>(c) * grad_input.cols();
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                const T* src = col.data() + static_cast<std::ptrdiff_t>((c * k + ky) * k + kx) * col.cols();
                for (int b = 0; b < batch; ++b) {
                    T* dst = dst_c + b * in_plane;
                    const T* s = src + b * out_plane;
                    for (int y = 0; y < g.conv_h; ++y) {
                        const int sy = y + ky - g.padding;
                        if (sy < 0 || sy >= g.in_h) continue;
                        T* drow = dst + static_cast<std::ptrdiff_t>(sy) * g.in_w;
                        const T* srow = s + static_cast<std::ptrdiff_t>(y) * g.conv_w;
                        for (int x = 0; x < g.conv_w; ++x) {
                            const int sx = x + kx - g.padding;
                            if (sx >= 0 && sx < g.in_w) drow[sx] += srow[x];
                        }
                    }
                }
            }
        }
    }
}

// 2x2 stride-2 max pool; `argmax` holds the flat source column of every output.
template <typename T>
void max_pool(const Mat<T>& input, int batch, const BlockGeometry& g, Mat<T>& out, std::vector<std::int32_t>& argmax) {
    const std::ptrdiff_t in_plane = static_cast<std::ptrdiff_t>(g.conv_h) * g.conv_w;
    const std::ptrdiff_t out_plane = static_cast<std::ptrdiff_t>(g.out_h) * g.out_w;
    out.resize(g.out_channels, batch * out_plane);
    argmax.resize(static_cast<std::size_t>(out.size()));
    for (int c = 0; c < g.out_channels; ++c) {
        const T* src_c = input.data() + static_cast<std::ptrdiff_t>(c) * input.cols();
        T* dst_c = out.data() + static_cast<std::ptrdiff_t>(c) * out.cols();
        std::int32_t* am_c = argmax.data() + static_cast<std::ptrdiff_t>(c) * out.cols();
        for (int b = 0; b < batch; ++b) {
            for (int y = 0; y < g.out_h; ++y) {
                for (int x = 0; x < g.out_w; ++x) {
                    std::ptrdiff_t best = b * in_plane + static_cast<std::ptrdiff_t>(2 * y) * g.conv_w + 2 * x;
                    for (int dy = 0; dy < 2; ++dy) {
                        for (int dx = 0; dx < 2; ++dx) {
                            const std::ptrdiff_t idx = b * in_plane + static_cast<std::ptrdiff_t>(2 * y + dy) * g.conv_w + 2 * x + dx;
                            if (src_c[idx] > src_c[best]) best = idx;
                        }
                    }
                    const std::ptrdiff_t o = b * out_plane + static_cast<std::ptrdiff_t>(y) * g.out_w + x;
                    dst_c[o] = src_c[best];
                    am_c[o] = static_cast<std::int32_t>(best);
                }
            }
        }
    }
}

template <typename T>
struct BlockCache {
    Mat<T> col;
    Mat<T> activated;  // post-ReLU, pre-pool
    std::vector<std::int32_t> argmax;
};

template <typename T>
struct ForwardState {
    int batch = 0;
    std::vector<BlockCache<T>> blocks;
    Mat<T> act;       // block input / pooled output
    Mat<T> features;  // last block output, C x (batch*h*w)
    Mat<T> pooled;    // GAP, C x batch
    Mat<T> hidden;    // post-ReLU, hidden x batch
    Mat<T> output;    // 1 x batch

    // Backward scratch; kept here so repeated steps do not reallocate.
    Mat<T> d_out, d_hidden, d_pooled, d_act, d_conv, d_col;
};

// Tensor order: per block (weight, bias), then fc (weight, bias), then out (weight, bias).
template <typename T>
void run_forward(const ArchConfig& arch, const ParamSet<T>& params, std::span<const Image* const> images,
                 ForwardState<T>& st) {
    const auto geom = block_geometry(arch);
    const int batch = static_cast<int>(images.size());
    st.batch = batch;
    st.blocks.resize(geom.size());

    const std::ptrdiff_t plane = static_cast<std::ptrdiff_t>(arch.input_height) * arch.input_width;
    Mat<T>& act = st.act;
    act.resize(1, batch * plane);
    for (int b = 0; b < batch; ++b) {
        const Image& img = *images[static_cast<std::size_t>(b)];
        if (img.height() != arch.input_height || img.width() != arch.input_width)
            throw InputError("image shape does not match the model input");
        const auto& v = img.storage();
        for (std::ptrdiff_t i = 0; i < plane; ++i) act(0, b * plane + i) = static_cast<T>(v[static_cast<std::size_t>(i)]);
    }

    for (std::size_t l = 0; l < geom.size(); ++l) {
        const auto& g = geom[l];
        auto& cache = st.blocks[l];
        Mat<T>& col = cache.col;
        Mat<T>& conv = cache.activated;
        std::vector<std::int32_t>& am = cache.argmax;

        im2col(act, batch, g, col);
        ConstMatMap<T> w(params[2 * l].data(), g.out_channels, static_cast<Eigen::Index>(g.in_channels) * g.kernel * g.kernel);
        Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>> bias(params[2 * l + 1].data(), g.out_channels);
        conv.noalias() = w * col;
        conv.colwise() += bias;
        conv = conv.cwiseMax(T(0));
        max_pool(conv, batch, g, act, am);
    }

    const FeatureShape fs = arch.feature_shape();
    const std::ptrdiff_t fplane = static_cast<std::ptrdiff_t>(fs.height) * fs.width;
    st.features = act;
    st.pooled.resize(fs.channels, batch);
    for (int c = 0; c < fs.channels; ++c)
        for (int b = 0; b < batch; ++b)
            st.pooled(c, b) = st.features.row(c).segment(b * fplane, fplane).sum() / static_cast<T>(fplane);

    const std::size_t fc = 2 * geom.size();
    ConstMatMap<T> w1(params[fc].data(), arch.hidden_width, fs.channels);
    Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>> b1(params[fc + 1].data(), arch.hidden_width);
    st.hidden.noalias() = w1 * st.pooled;
    st.hidden.colwise() += b1;
    st.hidden = st.hidden.cwiseMax(T(0));

    ConstMatMap<T> w2(params[fc + 2].data(), 1, arch.hidden_width);
    st.output.noalias() = w2 * st.hidden;
    st.output.array() += params[fc + 3][0];
}

template <typename T>
void check_batch(const ArchConfig& arch, const ParamSet<T>& params, std::span<const Image* const> images,
                 std::span<const double> targets) {
    if (images.empty()) throw EmptyInputError("empty batch");
    if (images.size() != targets.size()) throw InputError("batch images and targets differ in length");
    if (params.size() != 2 * arch.conv_blocks.size() + 4) throw InputError("parameter set does not match architecture");
}

}  // namespace

// ---------------------------------------------------------------------------

std::string_view provenance_name(Provenance p) noexcept {
    switch (p) {
        case Provenance::original: return "original";
        case Provenance::retrain: return "retrain";
        case Provenance::finetune: return "finetune";
        case Provenance::prune: return "prune";
        case Provenance::reinit: return "reinit";
        case Provenance::confuse: return "confuse";
    }
    return "unknown";
}

Provenance provenance_from_name(std::string_view name) {
    for (auto p : {Provenance::original, Provenance::retrain, Provenance::finetune, Provenance::prune,
                   Provenance::reinit, Provenance::confuse})
        if (provenance_name(p) == name) return p;
    throw ConfigError("unknown provenance tag '" + std::string(name) + "'");
}

std::string_view tensor_kind_name(TensorKind k) noexcept {
    switch (k) {
        case TensorKind::conv_weight: return "conv_weight";
        case TensorKind::conv_bias: return "conv_bias";
        case TensorKind::dense_weight: return "dense_weight";
        case TensorKind::dense_bias: return "dense_bias";
    }
    return "unknown";
}

TensorKind tensor_kind_from_name(std::string_view name) {
    for (auto k : {TensorKind::conv_weight, TensorKind::conv_bias, TensorKind::dense_weight, TensorKind::dense_bias})
        if (tensor_kind_name(k) == name) return k;
    throw ConfigError("unknown tensor kind '" + std::string(name) + "'");
}

int Tensor::fan_in() const noexcept {
    if (shape.size() < 2) return 1;
    int f = 1;
    for (std::size_t i = 1; i < shape.size(); ++i) f *= shape[i];
    return f;
}

void ArchConfig::validate() const {
    if (input_height <= 0 || input_width <= 0) throw ConfigError("input dimensions must be positive");
    if (conv_blocks.empty()) throw ConfigError("at least one conv block is required");
    if (hidden_width <= 0) throw ConfigError("hidden width must be positive");
    int h = input_height, w = input_width;
    for (const auto& b : conv_blocks) {
        if (b.out_channels <= 0 || b.kernel_size <= 0 || b.padding < 0) throw ConfigError("invalid conv block");
        h = (h + 2 * b.padding - b.kernel_size + 1) / 2;
        w = (w + 2 * b.padding - b.kernel_size + 1) / 2;
        if (h < 1 || w < 1) throw ConfigError("conv stack reduces the feature map to nothing");
    }
}

FeatureShape ArchConfig::feature_shape() const {
    validate();
    const auto g = block_geometry(*this);
    return {g.back().out_channels, g.back().out_h, g.back().out_w};
}

ModelSnapshot::ModelSnapshot(ArchConfig arch, std::vector<Tensor> tensors, Provenance tag, std::uint64_t init_seed)
    : arch_(std::move(arch)), tensors_(std::move(tensors)), tag_(tag), init_seed_(init_seed) {
    const auto layout = tensor_layout(arch_);
    if (layout.size() != tensors_.size()) throw ConfigError("tensor count does not match architecture");
    for (std::size_t i = 0; i < layout.size(); ++i) {
        const auto& t = tensors_[i];
        std::size_t n = 1;
        for (int d : layout[i].shape) n *= static_cast<std::size_t>(d);
        if (t.name != layout[i].name || t.kind != layout[i].kind || t.shape != layout[i].shape || t.values.size() != n)
            throw ConfigError("tensor '" + layout[i].name + "' inconsistent with architecture");
    }
}

ModelSnapshot::ModelSnapshot(const ModelSnapshot& source, Provenance tag)
    : arch_(source.arch_), tensors_(source.tensors_), tag_(tag), init_seed_(source.init_seed_) {}

const Tensor& ModelSnapshot::tensor(std::string_view name) const {
    for (const auto& t : tensors_)
        if (t.name == name) return t;
    throw InputError("no tensor named '" + std::string(name) + "'");
}

std::size_t ModelSnapshot::parameter_count() const noexcept {
    std::size_t n = 0;
    for (const auto& t : tensors_) n += t.values.size();
    return n;
}

std::uint64_t ModelSnapshot::weights_hash() const noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& t : tensors_) {
        for (float v : t.values) {
            auto bits = std::bit_cast<std::uint32_t>(v);
            for (int i = 0; i < 4; ++i) {
                h ^= (bits >> (8 * i)) & 0xffu;
                h *= 0x100000001b3ULL;
            }
        }
    }
    return h;
}

std::vector<Tensor> tensor_layout(const ArchConfig& arch) {
    arch.validate();
    std::vector<Tensor> out;
    int in_c = 1;
    for (std::size_t i = 0; i < arch.conv_blocks.size(); ++i) {
        const auto& b = arch.conv_blocks[i];
        const std::string p = "conv" + std::to_string(i);
        out.push_back({p + ".weight", TensorKind::conv_weight, {b.out_channels, in_c, b.kernel_size, b.kernel_size}, {}});
        out.push_back({p + ".bias", TensorKind::conv_bias, {b.out_channels}, {}});
        in_c = b.out_channels;
    }
    out.push_back({"fc.weight", TensorKind::dense_weight, {arch.hidden_width, in_c}, {}});
    out.push_back({"fc.bias", TensorKind::dense_bias, {arch.hidden_width}, {}});
    out.push_back({"out.weight", TensorKind::dense_weight, {1, arch.hidden_width}, {}});
    out.push_back({"out.bias", TensorKind::dense_bias, {1}, {}});
    return out;
}

float draw_init_weight(const Tensor& t, Rng& rng) {
    const float bound = static_cast<float>(std::sqrt(6.0 / static_cast<double>(t.fan_in())));
    return std::uniform_real_distribution<float>(-bound, bound)(rng);
}

ModelSnapshot init_model(const ArchConfig& arch, std::uint64_t seed, Provenance tag) {
    auto tensors = tensor_layout(arch);
    Rng rng(seed);
    for (auto& t : tensors) {
        std::size_t n = 1;
        for (int d : t.shape) n *= static_cast<std::size_t>(d);
        t.values.assign(n, 0.0f);
        if (t.is_weight())
            for (float& v : t.values) v = draw_init_weight(t, rng);
    }
    return ModelSnapshot(arch, std::move(tensors), tag, seed);
}

template <typename T>
ParamSet<T> params_of(const ModelSnapshot& model) {
    ParamSet<T> p;
    p.reserve(model.tensors().size());
    for (const auto& t : model.tensors()) p.emplace_back(t.values.begin(), t.values.end());
    return p;
}

template ParamSet<float> params_of<float>(const ModelSnapshot&);
template ParamSet<double> params_of<double>(const ModelSnapshot&);

ForwardOutput forward(const ModelSnapshot& model, const Image& image) {
    const auto params = params_of<float>(model);
    const Image* ptr = &image;
    ForwardState<float> st;
    run_forward<float>(model.arch(), params, std::span<const Image* const>(&ptr, 1), st);

    ForwardOutput out;
    out.prediction = static_cast<double>(st.output(0, 0));
    out.shape = model.arch().feature_shape();
    out.feature_maps.assign(st.features.data(), st.features.data() + st.features.size());
    return out;
}

std::vector<double> predict(const ModelSnapshot& model, std::span<const Image> images) {
    constexpr std::size_t kChunk = 64;
    const auto params = params_of<float>(model);
    std::vector<double> out;
    out.reserve(images.size());
    std::vector<const Image*> ptrs;
    ForwardState<float> st;
    for (std::size_t start = 0; start < images.size(); start += kChunk) {
        const std::size_t end = std::min(images.size(), start + kChunk);
        ptrs.clear();
        for (std::size_t i = start; i < end; ++i) ptrs.push_back(&images[i]);
        run_forward<float>(model.arch(), params, ptrs, st);
        for (Eigen::Index i = 0; i < st.output.cols(); ++i) out.push_back(static_cast<double>(st.output(0, i)));
    }
    return out;
}

std::vector<double> predict(const ModelSnapshot& model, const DatasetSplit& data) {
    std::vector<Image> images;
    images.reserve(data.size());
    for (const auto& s : data.samples) images.push_back(s.image);
    return predict(model, images);
}

template <typename T>
T batch_loss(const ArchConfig& arch, const ParamSet<T>& params, std::span<const Image* const> images,
             std::span<const double> targets) {
    check_batch(arch, params, images, targets);
    ForwardState<T> st;
    run_forward<T>(arch, params, images, st);
    T loss = 0;
    for (std::size_t b = 0; b < images.size(); ++b) {
        const T e = st.output(0, static_cast<Eigen::Index>(b)) - static_cast<T>(targets[b]);
        loss += e * e;
    }
    return loss / static_cast<T>(images.size());
}

template float batch_loss<float>(const ArchConfig&, const ParamSet<float>&, std::span<const Image* const>, std::span<const double>);
template double batch_loss<double>(const ArchConfig&, const ParamSet<double>&, std::span<const Image* const>, std::span<const double>);

namespace {

template <typename T>
void gradient_into(const ArchConfig& arch, const ParamSet<T>& params, std::span<const Image* const> images,
                   std::span<const double> targets, ForwardState<T>& st, LossGradient<T>& res) {
    check_batch(arch, params, images, targets);
    run_forward<T>(arch, params, images, st);
    const int batch = st.batch;
    const auto geom = block_geometry(arch);
    const FeatureShape fs = arch.feature_shape();

    res.gradient.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) res.gradient[i].resize(params[i].size());
    res.loss = T(0);

    // d(mean sq err)/d(output)
    Mat<T>& d_out = st.d_out;
    d_out.resize(1, batch);
    for (int b = 0; b < batch; ++b) {
        const T e = st.output(0, b) - static_cast<T>(targets[static_cast<std::size_t>(b)]);
        res.loss += e * e;
        d_out(0, b) = T(2) * e / static_cast<T>(batch);
    }
    res.loss /= static_cast<T>(batch);

    const std::size_t fc = 2 * geom.size();
    MatMap<T>(res.gradient[fc + 2].data(), 1, arch.hidden_width).noalias() = d_out * st.hidden.transpose();
    res.gradient[fc + 3][0] = d_out.sum();

    ConstMatMap<T> w2(params[fc + 2].data(), 1, arch.hidden_width);
    Mat<T>& d_hidden = st.d_hidden;
    d_hidden.noalias() = w2.transpose() * d_out;
    d_hidden = d_hidden.cwiseProduct((st.hidden.array() > T(0)).matrix().template cast<T>());
    MatMap<T>(res.gradient[fc].data(), arch.hidden_width, fs.channels).noalias() = d_hidden * st.pooled.transpose();
    Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>>(res.gradient[fc + 1].data(), arch.hidden_width) = d_hidden.rowwise().sum();

    ConstMatMap<T> w1(params[fc].data(), arch.hidden_width, fs.channels);
    Mat<T>& d_pooled = st.d_pooled;
    d_pooled.noalias() = w1.transpose() * d_hidden;  // C x batch

    const std::ptrdiff_t fplane = static_cast<std::ptrdiff_t>(fs.height) * fs.width;
    Mat<T>& d_act = st.d_act;
    d_act.resize(fs.channels, batch * fplane);
    for (int c = 0; c < fs.channels; ++c)
        for (int b = 0; b < batch; ++b)
            d_act.row(c).segment(b * fplane, fplane).setConstant(d_pooled(c, b) / static_cast<T>(fplane));

    Mat<T>& d_conv = st.d_conv;
    Mat<T>& d_col = st.d_col;
    for (std::size_t li = geom.size(); li-- > 0;) {
        const auto& g = geom[li];
        auto& cache = st.blocks[li];
        d_conv.setZero(g.out_channels, cache.activated.cols());
        for (int c = 0; c < g.out_channels; ++c) {
            const std::int32_t* am = cache.argmax.data() + static_cast<std::ptrdiff_t>(c) * d_act.cols();
            T* row = d_conv.data() + static_cast<std::ptrdiff_t>(c) * d_conv.cols();
            const T* src = d_act.data() + static_cast<std::ptrdiff_t>(c) * d_act.cols();
            for (Eigen::Index o = 0; o < d_act.cols(); ++o) row[am[o]] += src[o];
        }
        d_conv = d_conv.cwiseProduct((cache.activated.array() > T(0)).matrix().template cast<T>());

        const Eigen::Index kdim = static_cast<Eigen::Index>(g.in_channels) * g.kernel * g.kernel;
        MatMap<T>(res.gradient[2 * li].data(), g.out_channels, kdim).noalias() = d_conv * cache.col.transpose();
        Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>>(res.gradient[2 * li + 1].data(), g.out_channels) = d_conv.rowwise().sum();
        if (li == 0) break;
        ConstMatMap<T> w(params[2 * li].data(), g.out_channels, kdim);
        d_col.noalias() = w.transpose() * d_conv;
        col2im(d_col, batch, g, d_act);
    }
}

}  // namespace

template <typename T>
LossGradient<T> loss_and_gradient(const ArchConfig& arch, const ParamSet<T>& params,
                                  std::span<const Image* const> images, std::span<const double> targets) {
    ForwardState<T> st;
    LossGradient<T> res;
    gradient_into(arch, params, images, targets, st, res);
    return res;
}

template LossGradient<float> loss_and_gradient<float>(const ArchConfig&, const ParamSet<float>&, std::span<const Image* const>, std::span<const double>);
template LossGradient<double> loss_and_gradient<double>(const ArchConfig&, const ParamSet<double>&, std::span<const Image* const>, std::span<const double>);

void TrainConfig::validate() const {
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
    if (epochs < 0) throw ConfigError("epochs must be >= 0");
}

TrainResult train(const ModelSnapshot& model, const DatasetSplit& data, const TrainConfig& cfg) {
    cfg.validate();
    if (cfg.epochs > 0 && data.empty()) throw EmptyInputError("training on an empty split");

    TrainResult result{ModelSnapshot(model, model.tag()), {}};
    if (cfg.epochs == 0) return result;

    auto params = params_of<float>(model);
    const float lr = static_cast<float>(cfg.learning_rate);
    std::vector<std::size_t> order(data.size());
    std::vector<const Image*> batch_images;
    std::vector<double> batch_targets;
    ForwardState<float> state;
    LossGradient<float> lg;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng rng(derive_seed(cfg.seed, 0xe90c4u, static_cast<std::uint64_t>(epoch)));
        std::shuffle(order.begin(), order.end(), rng);

        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
            batch_images.clear();
            batch_targets.clear();
            for (std::size_t i = start; i < end; ++i) {
                const auto& s = data.samples[order[i]];
                batch_images.push_back(&s.image);
                batch_targets.push_back(static_cast<double>(s.label));
            }
            gradient_into<float>(model.arch(), params, batch_images, batch_targets, state, lg);
            loss_sum += static_cast<double>(lg.loss) * static_cast<double>(end - start);
            for (std::size_t t = 0; t < params.size(); ++t) {
                auto& p = params[t];
                const auto& g = lg.gradient[t];
                for (std::size_t i = 0; i < p.size(); ++i) p[i] -= lr * g[i];
            }
        }
        result.epoch_losses.push_back(loss_sum / static_cast<double>(data.size()));
    }

    auto tensors = result.model.tensors();
    for (std::size_t t = 0; t < tensors.size(); ++t) tensors[t].values = params[t];
    return result;
}

RegressionMetrics regression_metrics(std::span<const double> predictions, std::span<const double> labels) {
    if (predictions.empty()) throw EmptyInputError("regression metrics over no samples");
    if (predictions.size() != labels.size()) throw InputError("predictions and labels differ in length");
    double abs_sum = 0.0, sq_sum = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double e = predictions[i] - labels[i];
        abs_sum += std::abs(e);
        sq_sum += e * e;
    }
    const double n = static_cast<double>(predictions.size());
    return {abs_sum / n, std::sqrt(sq_sum / n)};
}

RegressionMetrics evaluate_regression(const ModelSnapshot& model, const DatasetSplit& data) {
    if (data.empty()) throw EmptyInputError("evaluation on an empty split");
    const auto preds = predict(model, data);
    std::vector<double> labels;
    labels.reserve(data.size());
    for (const auto& s : data.samples) labels.push_back(static_cast<double>(s.label));
    return regression_metrics(preds, labels);
}

}  // namespace muxai
