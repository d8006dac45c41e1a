#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "wildfire/core.hpp"
#include "wildfire/features.hpp"

namespace wildfire::nn {

struct GruConfig {
    int input_channels = 1;
    int seq_len = 11;
    int hidden_size = 128;
    int num_layers = 2;
    int head_hidden = 256;
    int embedding = 64;
    int output_classes = 5;
    double dropout = 0.03;

    void validate() const;
};

struct TrainConfig {
    double learning_rate = 5e-4;
    int max_epochs = 3000;
    int patience = 100;
    int batch_size = 128;
    std::uint64_t seed = 42;
    int horizon = 1;

    void validate() const;
};

/// One stacked-GRU layer: z = sigmoid(Wz x + Uz h + bz),
/// r = sigmoid(Wr x + Ur h + br), n = tanh(Wn x + Un (r*h) + bn),
/// h' = (1 - z)*h + z*n.
struct GruLayerParams {
    Eigen::MatrixXd Wz, Wr, Wn;  // hidden x input
    Eigen::MatrixXd Uz, Ur, Un;  // hidden x hidden
    Eigen::VectorXd bz, br, bn;
};

/// All learnable state: stacked GRU layers, batch normalization over the
/// last hidden state, and the three affine head layers with ReLU between.
struct GruModel {
    GruConfig config;
    std::vector<GruLayerParams> layers;
    Eigen::VectorXd bn_gamma, bn_beta;
    Eigen::VectorXd bn_running_mean, bn_running_var;
    Eigen::MatrixXd head1_w;  // head_hidden x hidden
    Eigen::VectorXd head1_b;
    Eigen::MatrixXd head2_w;  // embedding x head_hidden
    Eigen::VectorXd head2_b;
    Eigen::MatrixXd head3_w;  // classes x embedding
    Eigen::VectorXd head3_b;
};

/// Uniform fan-in initialization, zero biases, seed-controlled.
GruModel init_model(const GruConfig& config, std::uint64_t seed);

/// Flattened view over every learnable tensor, in a fixed order shared by
/// gradients, the optimizer and the checkpoint format.
struct ParamRef {
    std::string name;
    double* data;
    std::ptrdiff_t size;
};
std::vector<ParamRef> parameters(GruModel& model);

/// Gradients mirror the model's tensor layout.
using GruGradients = GruModel;
GruGradients zero_like(const GruModel& model);

enum class Mode { Train, Eval };

/// Everything the backward pass needs from one forward pass.
struct ForwardCache {
    // per layer, per timestep
    std::vector<std::vector<Eigen::MatrixXd>> x, h_prev, z, r, n, rh;
    std::vector<std::vector<Eigen::MatrixXd>> dropout_mask;  // between layers, per timestep
    Eigen::MatrixXd last_hidden;       // hidden x B, before batch norm
    Eigen::MatrixXd bn_normalized;     // (x - mu) / sqrt(var + eps)
    Eigen::VectorXd bn_mean, bn_var;   // batch statistics used
    Eigen::MatrixXd bn_out;
    Eigen::MatrixXd head_dropout_mask;
    Eigen::MatrixXd a1, a2;            // post-ReLU head activations
    Eigen::MatrixXd probs;             // classes x B
    Mode mode = Mode::Eval;
};

/// Batch forward pass. `batch` is [window][channel][time] flattened the same
/// way WindowTensor stores it; columns of the returned probability matrix are
/// windows. Train mode uses batch statistics and applies dropout (seeded);
/// eval mode uses running moments and no dropout. Updates running moments in
/// train mode.
Eigen::MatrixXd forward(GruModel& model, const double* batch_data, int batch_size, Mode mode,
                        ForwardCache* cache = nullptr, std::uint64_t dropout_seed = 0);

/// Quadratic weighted-kappa surrogate: sum_ij W_ij O_ij / sum_ij W_ij E_ij
/// with W_ij = (i-j)^2/16, O the soft confusion and E the outer product of
/// label counts and the mean predicted distribution.
double wk_loss(const Eigen::MatrixXd& probs, const std::vector<int>& labels,
               Eigen::MatrixXd* dprobs = nullptr);

/// Full backpropagation (loss -> softmax -> head -> batch norm -> BPTT).
/// Forward must have run in train mode on the same batch with `cache`.
GruGradients backward(const GruModel& model, const ForwardCache& cache,
                      const std::vector<int>& labels);

struct AdamState {
    std::vector<Eigen::VectorXd> m, v;
    long step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

AdamState init_adam(GruModel& model);
void adam_step(GruModel& model, GruGradients& gradients, AdamState& state, double learning_rate);

struct EpochStats {
    double train_loss = 0.0;
    double val_iou = 0.0;
};

struct TrainResult {
    GruModel best_model;
    std::vector<EpochStats> history;
    int best_epoch = 0;       // index into history
    double best_val_iou = 0.0;
};

/// Trains with seeded shuffling and early stopping on validation ordinal IoU
/// (maximized). Undersampling must already be applied to `train`.
TrainResult train(const features::WindowTensor& train, const features::WindowTensor& val,
                  const GruConfig& gru_config, const TrainConfig& train_config);

/// Per-window class probabilities and argmax class (ties to the lower class).
struct Forecast {
    core::TargetKind target = core::TargetKind::DFE;
    int horizon = 1;
    std::vector<core::ZoneId> zone;
    std::vector<core::Date> date;
    std::vector<std::array<double, core::num_risk_classes>> probabilities;
    std::vector<int> predicted_class;
};

Forecast predict(GruModel& model, const features::WindowTensor& windows);

int argmax_class(const std::array<double, core::num_risk_classes>& probs);

/// Versioned JSON checkpoint round-trip.
std::string checkpoint_to_json(const GruModel& model, const TrainConfig& train_config,
                               double best_val_iou);
GruModel checkpoint_from_json(const std::string& json_text, TrainConfig* train_config = nullptr,
                              double* best_val_iou = nullptr);

}  // namespace wildfire::nn
