#include "wildfire/nn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "json.hpp"
#include "wildfire/metrics.hpp"
#include "wildfire/rng.hpp"

namespace wildfire::nn {

namespace {

constexpr double kBnEpsilon = 1e-5;
constexpr double kBnMomentum = 0.1;
constexpr double kLossEpsilon = 1e-12;

Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& x) {
    return 1.0 / (1.0 + (-x.array()).exp());
}

}  // namespace

void GruConfig::validate() const {
    if (input_channels < 1 || seq_len < 1 || hidden_size < 1 || num_layers < 1 || head_hidden < 1 ||
        embedding < 1 || output_classes < 1)
        throw core::ValidationError("gru_config", "all sizes must be >= 1");
    if (dropout < 0.0 || dropout >= 1.0)
        throw core::ValidationError("dropout", "dropout outside [0,1)");
    if (output_classes != core::num_risk_classes)
        throw core::ValidationError("output_classes", "this artifact uses 5 output classes");
}

void TrainConfig::validate() const {
    if (learning_rate <= 0.0) throw core::ValidationError("learning_rate", "learning rate must be > 0");
    if (patience > max_epochs) throw core::ValidationError("patience", "patience exceeds max_epochs");
    if (batch_size < 1) throw core::ValidationError("batch_size", "batch size must be >= 1");
    if (horizon < 1) throw core::ValidationError("horizon", "horizon must be >= 1");
}

GruModel init_model(const GruConfig& config, std::uint64_t seed) {
    config.validate();
    rng::Engine eng(rng::derive_seed(seed, "init"));
    auto uniform_matrix = [&](int rows, int cols, int fan_in) {
        const double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
        Eigen::MatrixXd m(rows, cols);
        for (int c = 0; c < cols; ++c)
            for (int r = 0; r < rows; ++r) m(r, c) = eng.uniform(-s, s);
        return m;
    };

    GruModel model;
    model.config = config;
    for (int l = 0; l < config.num_layers; ++l) {
        const int in = l == 0 ? config.input_channels : config.hidden_size;
        const int h = config.hidden_size;
        GruLayerParams p;
        p.Wz = uniform_matrix(h, in, in);
        p.Wr = uniform_matrix(h, in, in);
        p.Wn = uniform_matrix(h, in, in);
        p.Uz = uniform_matrix(h, h, h);
        p.Ur = uniform_matrix(h, h, h);
        p.Un = uniform_matrix(h, h, h);
        p.bz = Eigen::VectorXd::Zero(h);
        p.br = Eigen::VectorXd::Zero(h);
        p.bn = Eigen::VectorXd::Zero(h);
        model.layers.push_back(std::move(p));
    }
    model.bn_gamma = Eigen::VectorXd::Ones(config.hidden_size);
    model.bn_beta = Eigen::VectorXd::Zero(config.hidden_size);
    model.bn_running_mean = Eigen::VectorXd::Zero(config.hidden_size);
    model.bn_running_var = Eigen::VectorXd::Ones(config.hidden_size);
    model.head1_w = uniform_matrix(config.head_hidden, config.hidden_size, config.hidden_size);
    model.head1_b = Eigen::VectorXd::Zero(config.head_hidden);
    model.head2_w = uniform_matrix(config.embedding, config.head_hidden, config.head_hidden);
    model.head2_b = Eigen::VectorXd::Zero(config.embedding);
    model.head3_w = uniform_matrix(config.output_classes, config.embedding, config.embedding);
    model.head3_b = Eigen::VectorXd::Zero(config.output_classes);
    return model;
}

std::vector<ParamRef> parameters(GruModel& model) {
    std::vector<ParamRef> refs;
    auto add = [&](const std::string& name, Eigen::MatrixXd& m) {
        refs.push_back({name, m.data(), m.size()});
    };
    auto addv = [&](const std::string& name, Eigen::VectorXd& v) {
        refs.push_back({name, v.data(), v.size()});
    };
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        const std::string prefix = "layer" + std::to_string(l) + ".";
        auto& p = model.layers[l];
        add(prefix + "Wz", p.Wz);
        add(prefix + "Wr", p.Wr);
        add(prefix + "Wn", p.Wn);
        add(prefix + "Uz", p.Uz);
        add(prefix + "Ur", p.Ur);
        add(prefix + "Un", p.Un);
        addv(prefix + "bz", p.bz);
        addv(prefix + "br", p.br);
        addv(prefix + "bn", p.bn);
    }
    addv("bn_gamma", model.bn_gamma);
    addv("bn_beta", model.bn_beta);
    add("head1_w", model.head1_w);
    addv("head1_b", model.head1_b);
    add("head2_w", model.head2_w);
    addv("head2_b", model.head2_b);
    add("head3_w", model.head3_w);
    addv("head3_b", model.head3_b);
    return refs;
}

GruGradients zero_like(const GruModel& model) {
    GruGradients g = model;
    for (auto& p : g.layers) {
        p.Wz.setZero();
        p.Wr.setZero();
        p.Wn.setZero();
        p.Uz.setZero();
        p.Ur.setZero();
        p.Un.setZero();
        p.bz.setZero();
        p.br.setZero();
        p.bn.setZero();
    }
    g.bn_gamma.setZero();
    g.bn_beta.setZero();
    g.bn_running_mean.setZero();
    g.bn_running_var.setZero();
    g.head1_w.setZero();
    g.head1_b.setZero();
    g.head2_w.setZero();
    g.head2_b.setZero();
    g.head3_w.setZero();
    g.head3_b.setZero();
    return g;
}

Eigen::MatrixXd forward(GruModel& model, const double* batch_data, int batch_size, Mode mode,
                        ForwardCache* cache, std::uint64_t dropout_seed) {
    const auto& cfg = model.config;
    if (batch_size < 1) throw core::ValidationError("batch", "empty batch");
    const int C = cfg.input_channels;
    const int T = cfg.seq_len;
    const int H = cfg.hidden_size;
    for (int i = 0; i < batch_size * C * T; ++i)
        if (!std::isfinite(batch_data[i]))
            throw core::ValidationError("batch", "non-finite input value");

    const bool training = mode == Mode::Train;
    rng::Engine dropout_eng(rng::derive_seed(dropout_seed, "dropout"));
    const bool use_dropout = training && cfg.dropout > 0.0;
    const double keep = 1.0 - cfg.dropout;

    ForwardCache local;
    ForwardCache& cc = cache ? *cache : local;
    cc.mode = mode;
    const bool keep_cache = cache != nullptr;
    if (keep_cache) {
        cc.x.assign(cfg.num_layers, {});
        cc.h_prev.assign(cfg.num_layers, {});
        cc.z.assign(cfg.num_layers, {});
        cc.r.assign(cfg.num_layers, {});
        cc.n.assign(cfg.num_layers, {});
        cc.rh.assign(cfg.num_layers, {});
        cc.dropout_mask.assign(cfg.num_layers, {});
    }

    // Input sequence as per-timestep matrices (channels x batch).
    std::vector<Eigen::MatrixXd> seq(T, Eigen::MatrixXd(C, batch_size));
    for (int b = 0; b < batch_size; ++b)
        for (int c = 0; c < C; ++c)
            for (int t = 0; t < T; ++t)
                seq[t](c, b) = batch_data[(static_cast<std::size_t>(b) * C + c) * T + t];

    Eigen::MatrixXd h;
    for (int l = 0; l < cfg.num_layers; ++l) {
        const auto& p = model.layers[l];
        h = Eigen::MatrixXd::Zero(H, batch_size);
        std::vector<Eigen::MatrixXd> outputs(T);
        for (int t = 0; t < T; ++t) {
            const Eigen::MatrixXd& x = seq[t];
            Eigen::MatrixXd z = sigmoid((p.Wz * x + p.Uz * h).colwise() + p.bz);
            Eigen::MatrixXd r = sigmoid((p.Wr * x + p.Ur * h).colwise() + p.br);
            Eigen::MatrixXd rh = r.cwiseProduct(h);
            Eigen::MatrixXd n = ((p.Wn * x + p.Un * rh).colwise() + p.bn).array().tanh();
            Eigen::MatrixXd h_next =
                (1.0 - z.array()).matrix().cwiseProduct(h) + z.cwiseProduct(n);
            if (keep_cache) {
                cc.x[l].push_back(x);
                cc.h_prev[l].push_back(h);
                cc.z[l].push_back(std::move(z));
                cc.r[l].push_back(std::move(r));
                cc.n[l].push_back(std::move(n));
                cc.rh[l].push_back(std::move(rh));
            }
            h = std::move(h_next);
            outputs[t] = h;
        }
        if (l + 1 < cfg.num_layers) {
            // Inter-layer dropout on the full output sequence.
            for (int t = 0; t < T; ++t) {
                if (use_dropout) {
                    Eigen::MatrixXd mask(H, batch_size);
                    for (int b = 0; b < batch_size; ++b)
                        for (int row = 0; row < H; ++row)
                            mask(row, b) = dropout_eng.bernoulli(keep) ? 1.0 / keep : 0.0;
                    outputs[t] = outputs[t].cwiseProduct(mask);
                    if (keep_cache) cc.dropout_mask[l].push_back(std::move(mask));
                } else if (keep_cache) {
                    cc.dropout_mask[l].push_back(Eigen::MatrixXd::Ones(H, batch_size));
                }
            }
            seq = std::move(outputs);
        }
    }

    // Batch normalization over the last hidden state of the top layer.
    cc.last_hidden = h;
    Eigen::VectorXd mean, var;
    if (training) {
        mean = h.rowwise().mean();
        Eigen::MatrixXd centered = h.colwise() - mean;
        var = centered.array().square().rowwise().mean();
        model.bn_running_mean = (1.0 - kBnMomentum) * model.bn_running_mean + kBnMomentum * mean;
        model.bn_running_var = (1.0 - kBnMomentum) * model.bn_running_var + kBnMomentum * var;
    } else {
        mean = model.bn_running_mean;
        var = model.bn_running_var;
    }
    const Eigen::VectorXd inv_std = (var.array() + kBnEpsilon).rsqrt();
    Eigen::MatrixXd normalized =
        ((h.colwise() - mean).array().colwise() * inv_std.array()).matrix();
    Eigen::MatrixXd bn_out =
        (normalized.array().colwise() * model.bn_gamma.array()).matrix().colwise() + model.bn_beta;
    cc.bn_normalized = normalized;
    cc.bn_mean = mean;
    cc.bn_var = var;

    if (use_dropout) {
        Eigen::MatrixXd mask(H, batch_size);
        for (int b = 0; b < batch_size; ++b)
            for (int row = 0; row < H; ++row)
                mask(row, b) = dropout_eng.bernoulli(keep) ? 1.0 / keep : 0.0;
        bn_out = bn_out.cwiseProduct(mask);
        cc.head_dropout_mask = std::move(mask);
    } else {
        cc.head_dropout_mask = Eigen::MatrixXd::Ones(H, batch_size);
    }
    cc.bn_out = bn_out;

    Eigen::MatrixXd a1 = ((model.head1_w * bn_out).colwise() + model.head1_b).cwiseMax(0.0);
    Eigen::MatrixXd a2 = ((model.head2_w * a1).colwise() + model.head2_b).cwiseMax(0.0);
    Eigen::MatrixXd logits = (model.head3_w * a2).colwise() + model.head3_b;
    cc.a1 = a1;
    cc.a2 = a2;

    // Column-wise softmax with max subtraction.
    Eigen::MatrixXd probs(logits.rows(), logits.cols());
    for (int b = 0; b < logits.cols(); ++b) {
        const Eigen::VectorXd shifted = logits.col(b).array() - logits.col(b).maxCoeff();
        Eigen::VectorXd e = shifted.array().exp();
        probs.col(b) = e / e.sum();
    }
    cc.probs = probs;
    return probs;
}

double wk_loss(const Eigen::MatrixXd& probs, const std::vector<int>& labels,
               Eigen::MatrixXd* dprobs) {
    const int C = static_cast<int>(probs.rows());
    const int B = static_cast<int>(probs.cols());
    if (B == 0 || static_cast<int>(labels.size()) != B)
        throw core::ValidationError("labels", "label count does not match batch");
    for (int y : labels)
        if (y < 0 || y >= C) throw core::ValidationError("labels", "label outside class range");

    Eigen::MatrixXd weights(C, C);
    const double denom = static_cast<double>((C - 1) * (C - 1));
    for (int i = 0; i < C; ++i)
        for (int j = 0; j < C; ++j) weights(i, j) = static_cast<double>((i - j) * (i - j)) / denom;

    Eigen::VectorXd counts = Eigen::VectorXd::Zero(C);
    for (int y : labels) counts(y) += 1.0;
    const Eigen::VectorXd mean_pred = probs.rowwise().mean();

    double numerator = 0.0;
    for (int b = 0; b < B; ++b) numerator += weights.row(labels[b]).dot(probs.col(b));
    // w_bar(j) = sum_i counts(i) W(i,j); D = (1/B) sum_j w_bar(j) sum_b p(j,b)
    const Eigen::VectorXd w_bar = weights.transpose() * counts;
    double denominator = w_bar.dot(mean_pred);
    denominator = std::max(denominator, kLossEpsilon);
    const double loss = numerator / denominator;

    if (dprobs) {
        dprobs->resize(C, B);
        for (int b = 0; b < B; ++b)
            for (int j = 0; j < C; ++j)
                (*dprobs)(j, b) =
                    (weights(labels[b], j) - loss * w_bar(j) / static_cast<double>(B)) / denominator;
    }
    return loss;
}

GruGradients backward(const GruModel& model, const ForwardCache& cache,
                      const std::vector<int>& labels) {
    if (cache.mode != Mode::Train)
        throw core::ValidationError("mode", "backward requires a train-mode forward cache");
    const auto& cfg = model.config;
    const int B = static_cast<int>(cache.probs.cols());
    const int T = cfg.seq_len;

    GruGradients grads = zero_like(model);

    Eigen::MatrixXd dprobs;
    wk_loss(cache.probs, labels, &dprobs);

    // Softmax backward: dlogits = p * (dp - (p . dp)).
    Eigen::MatrixXd dlogits(dprobs.rows(), B);
    for (int b = 0; b < B; ++b) {
        const double dot = cache.probs.col(b).dot(dprobs.col(b));
        dlogits.col(b) = cache.probs.col(b).cwiseProduct(dprobs.col(b).array().matrix() -
                                                         Eigen::VectorXd::Constant(dprobs.rows(), dot));
    }

    grads.head3_w = dlogits * cache.a2.transpose();
    grads.head3_b = dlogits.rowwise().sum();
    Eigen::MatrixXd da2 = model.head3_w.transpose() * dlogits;
    da2 = da2.cwiseProduct((cache.a2.array() > 0.0).cast<double>().matrix());

    grads.head2_w = da2 * cache.a1.transpose();
    grads.head2_b = da2.rowwise().sum();
    Eigen::MatrixXd da1 = model.head2_w.transpose() * da2;
    da1 = da1.cwiseProduct((cache.a1.array() > 0.0).cast<double>().matrix());

    grads.head1_w = da1 * cache.bn_out.transpose();
    grads.head1_b = da1.rowwise().sum();
    Eigen::MatrixXd dbn_out = model.head1_w.transpose() * da1;
    dbn_out = dbn_out.cwiseProduct(cache.head_dropout_mask);

    // Batch-norm backward (batch statistics).
    grads.bn_beta = dbn_out.rowwise().sum();
    grads.bn_gamma = dbn_out.cwiseProduct(cache.bn_normalized).rowwise().sum();
    const Eigen::VectorXd inv_std = (cache.bn_var.array() + kBnEpsilon).rsqrt();
    Eigen::MatrixXd dxhat = (dbn_out.array().colwise() * model.bn_gamma.array()).matrix();
    const Eigen::VectorXd sum_dxhat = dxhat.rowwise().sum();
    const Eigen::VectorXd sum_dxhat_xhat = dxhat.cwiseProduct(cache.bn_normalized).rowwise().sum();
    Eigen::MatrixXd dlast(dxhat.rows(), B);
    for (int b = 0; b < B; ++b)
        dlast.col(b) =
            (inv_std.array() / B) *
            (B * dxhat.col(b).array() - sum_dxhat.array() -
             cache.bn_normalized.col(b).array() * sum_dxhat_xhat.array());

    // BPTT, top layer down. d_out[t] is the gradient flowing into h_t of the
    // current layer from above (head for the top layer, next layer otherwise).
    std::vector<Eigen::MatrixXd> d_out(T, Eigen::MatrixXd::Zero(cfg.hidden_size, B));
    d_out[T - 1] = dlast;
    for (int l = cfg.num_layers - 1; l >= 0; --l) {
        const auto& p = model.layers[l];
        auto& g = grads.layers[l];
        std::vector<Eigen::MatrixXd> d_below;
        if (l > 0) d_below.assign(T, Eigen::MatrixXd::Zero(cfg.hidden_size, B));

        Eigen::MatrixXd dh = Eigen::MatrixXd::Zero(cfg.hidden_size, B);
        for (int t = T - 1; t >= 0; --t) {
            dh += d_out[t];
            const auto& x = cache.x[l][t];
            const auto& h_prev = cache.h_prev[l][t];
            const auto& z = cache.z[l][t];
            const auto& r = cache.r[l][t];
            const auto& n = cache.n[l][t];
            const auto& rh = cache.rh[l][t];

            Eigen::MatrixXd dz =
                dh.cwiseProduct(n - h_prev).cwiseProduct(z).cwiseProduct((1.0 - z.array()).matrix());
            Eigen::MatrixXd dn = dh.cwiseProduct(z).cwiseProduct((1.0 - n.array().square()).matrix());
            Eigen::MatrixXd dh_prev = dh.cwiseProduct((1.0 - z.array()).matrix());

            g.Wn += dn * x.transpose();
            g.Un += dn * rh.transpose();
            g.bn += dn.rowwise().sum();
            Eigen::MatrixXd drh = p.Un.transpose() * dn;
            Eigen::MatrixXd dr = drh.cwiseProduct(h_prev);
            dh_prev += drh.cwiseProduct(r);
            Eigen::MatrixXd dr_pre =
                dr.cwiseProduct(r).cwiseProduct((1.0 - r.array()).matrix());
            g.Wr += dr_pre * x.transpose();
            g.Ur += dr_pre * h_prev.transpose();
            g.br += dr_pre.rowwise().sum();
            dh_prev += p.Ur.transpose() * dr_pre;

            g.Wz += dz * x.transpose();
            g.Uz += dz * h_prev.transpose();
            g.bz += dz.rowwise().sum();
            dh_prev += p.Uz.transpose() * dz;

            if (l > 0) {
                Eigen::MatrixXd dx = p.Wz.transpose() * dz + p.Wr.transpose() * dr_pre +
                                     p.Wn.transpose() * dn;
                d_below[t] = dx.cwiseProduct(cache.dropout_mask[l - 1][t]);
            }
            dh = std::move(dh_prev);
        }
        if (l > 0) d_out = std::move(d_below);
    }

    for (auto ref : parameters(grads)) {
        for (std::ptrdiff_t i = 0; i < ref.size; ++i)
            if (!std::isfinite(ref.data[i]))
                throw core::ValidationError(ref.name, "non-finite gradient in " + ref.name);
    }
    return grads;
}

AdamState init_adam(GruModel& model) {
    AdamState state;
    for (auto ref : parameters(model)) {
        state.m.push_back(Eigen::VectorXd::Zero(ref.size));
        state.v.push_back(Eigen::VectorXd::Zero(ref.size));
    }
    return state;
}

void adam_step(GruModel& model, GruGradients& gradients, AdamState& state, double learning_rate) {
    const auto model_refs = parameters(model);
    const auto grad_refs = parameters(gradients);
    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t p = 0; p < model_refs.size(); ++p) {
        double* w = model_refs[p].data;
        const double* g = grad_refs[p].data;
        auto& m = state.m[p];
        auto& v = state.v[p];
        for (std::ptrdiff_t i = 0; i < model_refs[p].size; ++i) {
            m(i) = state.beta1 * m(i) + (1.0 - state.beta1) * g[i];
            v(i) = state.beta2 * v(i) + (1.0 - state.beta2) * g[i] * g[i];
            w[i] -= learning_rate * (m(i) / bc1) / (std::sqrt(v(i) / bc2) + state.epsilon);
        }
    }
}

namespace {

std::vector<int> predict_classes(GruModel& model, const features::WindowTensor& windows) {
    const auto fc = predict(model, windows);
    return fc.predicted_class;
}

}  // namespace

TrainResult train(const features::WindowTensor& train_windows, const features::WindowTensor& val_windows,
                  const GruConfig& gru_config, const TrainConfig& train_config) {
    gru_config.validate();
    train_config.validate();
    if (train_windows.n_windows == 0) throw core::ValidationError("train", "empty training set");
    if (static_cast<int>(train_windows.n_channels) != gru_config.input_channels ||
        static_cast<int>(train_windows.seq_len) != gru_config.seq_len)
        throw core::ValidationError("train", "window shape does not match GRU config");

    GruModel model = init_model(gru_config, train_config.seed);
    AdamState adam = init_adam(model);
    rng::Engine shuffle_eng(rng::derive_seed(train_config.seed, "shuffle"));

    TrainResult result;
    result.best_model = model;
    result.best_val_iou = -1.0;

    const std::size_t n = train_windows.n_windows;
    const std::size_t stride = train_windows.n_channels * train_windows.seq_len;
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::vector<double> batch_buffer;
    std::vector<int> batch_labels;

    int epochs_since_improvement = 0;
    for (int epoch = 0; epoch < train_config.max_epochs; ++epoch) {
        for (std::size_t i = n; i > 1; --i)
            std::swap(order[i - 1], order[shuffle_eng.uniform_index(i)]);

        double epoch_loss = 0.0;
        std::size_t seen = 0;
        for (std::size_t start = 0; start < n; start += train_config.batch_size) {
            const std::size_t bsz = std::min<std::size_t>(train_config.batch_size, n - start);
            batch_buffer.resize(bsz * stride);
            batch_labels.resize(bsz);
            for (std::size_t b = 0; b < bsz; ++b) {
                const std::size_t w = order[start + b];
                std::copy_n(train_windows.data.data() + w * stride, stride,
                            batch_buffer.data() + b * stride);
                batch_labels[b] = train_windows.labels[w];
            }
            ForwardCache cache;
            const std::uint64_t dropout_seed = rng::derive_seed(
                train_config.seed, "epoch", static_cast<std::uint64_t>(epoch) * 1000003 + start);
            forward(model, batch_buffer.data(), static_cast<int>(bsz), Mode::Train, &cache,
                    dropout_seed);
            const double loss = wk_loss(cache.probs, batch_labels);
            GruGradients grads = backward(model, cache, batch_labels);
            adam_step(model, grads, adam, train_config.learning_rate);
            epoch_loss += loss * static_cast<double>(bsz);
            seen += bsz;
        }
        epoch_loss /= static_cast<double>(seen);

        double val_iou = 0.0;
        if (val_windows.n_windows > 0) {
            const auto pred = predict_classes(model, val_windows);
            val_iou = metrics::ordinal_iou(val_windows.labels, pred);
        }
        result.history.push_back({epoch_loss, val_iou});

        if (val_iou > result.best_val_iou + 1e-12) {
            result.best_val_iou = val_iou;
            result.best_model = model;
            result.best_epoch = epoch;
            epochs_since_improvement = 0;
        } else {
            ++epochs_since_improvement;
            if (epochs_since_improvement > train_config.patience) break;
        }
    }
    return result;
}

int argmax_class(const std::array<double, core::num_risk_classes>& probs) {
    int best = 0;
    for (int c = 1; c < core::num_risk_classes; ++c)
        if (probs[c] > probs[best]) best = c;  // strict: ties go low
    return best;
}

Forecast predict(GruModel& model, const features::WindowTensor& windows) {
    const auto& cfg = model.config;
    if (static_cast<int>(windows.n_channels) != cfg.input_channels ||
        static_cast<int>(windows.seq_len) != cfg.seq_len)
        throw core::ValidationError("windows", "window shape does not match GRU config");

    Forecast fc;
    fc.target = windows.target;
    fc.horizon = windows.horizon;
    fc.zone = windows.window_zone;
    fc.date = windows.label_date;
    const std::size_t stride = windows.n_channels * windows.seq_len;
    constexpr std::size_t chunk = 512;
    for (std::size_t start = 0; start < windows.n_windows; start += chunk) {
        const std::size_t bsz = std::min(chunk, windows.n_windows - start);
        const auto probs =
            forward(model, windows.data.data() + start * stride, static_cast<int>(bsz), Mode::Eval);
        for (std::size_t b = 0; b < bsz; ++b) {
            std::array<double, core::num_risk_classes> p{};
            for (int c = 0; c < core::num_risk_classes; ++c) p[c] = probs(c, static_cast<int>(b));
            fc.probabilities.push_back(p);
            fc.predicted_class.push_back(argmax_class(p));
        }
    }
    return fc;
}

namespace {

nlohmann::json vector_to_json(const double* data, std::ptrdiff_t size) {
    nlohmann::json arr = nlohmann::json::array();
    for (std::ptrdiff_t i = 0; i < size; ++i) arr.push_back(data[i]);
    return arr;
}

}  // namespace

std::string checkpoint_to_json(const GruModel& model, const TrainConfig& train_config,
                               double best_val_iou) {
    nlohmann::json doc;
    doc["format_version"] = 1;
    const auto& c = model.config;
    doc["gru_config"] = {{"input_channels", c.input_channels}, {"seq_len", c.seq_len},
                         {"hidden_size", c.hidden_size},       {"num_layers", c.num_layers},
                         {"head_hidden", c.head_hidden},       {"embedding", c.embedding},
                         {"output_classes", c.output_classes}, {"dropout", c.dropout}};
    doc["train_config"] = {{"learning_rate", train_config.learning_rate},
                           {"max_epochs", train_config.max_epochs},
                           {"patience", train_config.patience},
                           {"batch_size", train_config.batch_size},
                           {"seed", train_config.seed},
                           {"horizon", train_config.horizon}};
    doc["best_val_iou"] = best_val_iou;
    nlohmann::json params;
    GruModel& mutable_model = const_cast<GruModel&>(model);
    for (auto ref : parameters(mutable_model)) params[ref.name] = vector_to_json(ref.data, ref.size);
    params["bn_running_mean"] =
        vector_to_json(model.bn_running_mean.data(), model.bn_running_mean.size());
    params["bn_running_var"] =
        vector_to_json(model.bn_running_var.data(), model.bn_running_var.size());
    doc["parameters"] = std::move(params);
    return doc.dump(2);
}

GruModel checkpoint_from_json(const std::string& json_text, TrainConfig* train_config,
                              double* best_val_iou) {
    const auto doc = nlohmann::json::parse(json_text);
    if (doc.at("format_version").get<int>() != 1)
        throw core::ValidationError("format_version", "unsupported checkpoint version");
    const auto& gc = doc.at("gru_config");
    GruConfig cfg;
    cfg.input_channels = gc.at("input_channels").get<int>();
    cfg.seq_len = gc.at("seq_len").get<int>();
    cfg.hidden_size = gc.at("hidden_size").get<int>();
    cfg.num_layers = gc.at("num_layers").get<int>();
    cfg.head_hidden = gc.at("head_hidden").get<int>();
    cfg.embedding = gc.at("embedding").get<int>();
    cfg.output_classes = gc.at("output_classes").get<int>();
    cfg.dropout = gc.at("dropout").get<double>();
    GruModel model = init_model(cfg, 0);
    const auto& params = doc.at("parameters");
    auto load = [&](const std::string& name, double* data, std::ptrdiff_t size) {
        const auto& arr = params.at(name);
        if (static_cast<std::ptrdiff_t>(arr.size()) != size)
            throw core::ValidationError(name, "parameter size mismatch in checkpoint");
        for (std::ptrdiff_t i = 0; i < size; ++i) data[i] = arr[i].get<double>();
    };
    for (auto ref : parameters(model)) load(ref.name, ref.data, ref.size);
    load("bn_running_mean", model.bn_running_mean.data(), model.bn_running_mean.size());
    load("bn_running_var", model.bn_running_var.data(), model.bn_running_var.size());
    if (train_config) {
        const auto& tc = doc.at("train_config");
        train_config->learning_rate = tc.at("learning_rate").get<double>();
        train_config->max_epochs = tc.at("max_epochs").get<int>();
        train_config->patience = tc.at("patience").get<int>();
        train_config->batch_size = tc.at("batch_size").get<int>();
        train_config->seed = tc.at("seed").get<std::uint64_t>();
        train_config->horizon = tc.at("horizon").get<int>();
    }
    if (best_val_iou) *best_val_iou = doc.at("best_val_iou").get<double>();
    return model;
}

}  // namespace wildfire::nn
