#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "wildfire/core.hpp"
#include "wildfire/features.hpp"
#include "wildfire/targets.hpp"

namespace wildfire::baselines {

/// Prediction for day t is the observed class at t - horizon within one
/// contiguous series; days without enough history predict class 0.
std::vector<int> persistence_predict(std::span<const int> observed, int horizon);

/// Most frequent historical class per (zone, ISO week), ties to the lower
/// class; unseen keys fall back to the global training modal class.
struct WeekModeTable {
    std::map<std::pair<int, int>, int> mode;  // (zone code, iso week) -> class
    int fallback = 0;
};

struct LabeledDay {
    core::ZoneId zone;
    core::Date date;
    int label = 0;
};

WeekModeTable week_mode_fit(std::span<const LabeledDay> training);
int week_mode_predict(const WeekModeTable& table, core::ZoneId zone, const core::Date& date);

/// Zone-wise Poisson rates fitted by maximum likelihood (the training mean).
struct PoissonRates {
    std::map<int, double> lambda;  // zone code -> rate
    double pooled = 0.0;           // fallback for zones without training rows
};

struct CountDay {
    core::ZoneId zone;
    double count = 0.0;
};

PoissonRates poisson_fit(std::span<const CountDay> training);

/// Most probable class under Poisson(lambda) with counts bucketed through the
/// binning model (class 0 is exactly {0}); ties to the lower class.
int poisson_predict_class(double lambda, const targets::BinningModel& binning);
int poisson_predict(const PoissonRates& rates, core::ZoneId zone,
                    const targets::BinningModel& binning);

/// Multinomial logistic regression over last-day window features, with the
/// majority-class proportion scanned on the validation set.
struct LogRegModel {
    Eigen::MatrixXd weights;  // classes x features
    Eigen::VectorXd intercepts;
    double chosen_rho = 1.0;
    double chosen_val_iou = 0.0;
    bool converged = true;
    double final_gradient_norm = 0.0;
};

struct LogRegOptions {
    int max_iterations = 400;
    double learning_rate = 0.5;
    double tolerance = 1e-5;  // on the gradient max-norm
    std::uint64_t seed = 42;
};

/// Fits one multinomial regression by full-batch gradient descent on the
/// cross-entropy. Rows are samples.
LogRegModel logreg_fit(const Eigen::MatrixXd& x, const std::vector<int>& y,
                       const LogRegOptions& options = {});

std::vector<int> logreg_predict(const LogRegModel& model, const Eigen::MatrixXd& x);
Eigen::MatrixXd logreg_probabilities(const LogRegModel& model, const Eigen::MatrixXd& x);

/// Cross-entropy value and gradient at the given parameters (exposed for the
/// finite-difference check).
double logreg_loss(const Eigen::MatrixXd& weights, const Eigen::VectorXd& intercepts,
                   const Eigen::MatrixXd& x, const std::vector<int>& y,
                   Eigen::MatrixXd* dweights = nullptr, Eigen::VectorXd* dintercepts = nullptr);

/// Scans the majority-proportion grid: for each rho, class-0 training rows
/// are subsampled until class 0 forms at most fraction rho of the effective
/// set, a model is fitted, and the rho maximizing validation ordinal IoU is
/// kept (ties to the smaller rho).
LogRegModel logreg_train(const Eigen::MatrixXd& train_x, const std::vector<int>& train_y,
                         const Eigen::MatrixXd& val_x, const std::vector<int>& val_y,
                         std::span<const double> rho_grid, const LogRegOptions& options = {});

/// Last-day feature slice of each window, rows = windows.
Eigen::MatrixXd last_day_features(const features::WindowTensor& windows);

}  // namespace wildfire::baselines
