#include "wildfire/baselines.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "wildfire/metrics.hpp"
#include "wildfire/rng.hpp"

namespace wildfire::baselines {

std::vector<int> persistence_predict(std::span<const int> observed, int horizon) {
    if (horizon < 1) throw core::ValidationError("horizon", "horizon must be >= 1");
    std::vector<int> pred(observed.size(), 0);
    for (std::size_t i = static_cast<std::size_t>(horizon); i < observed.size(); ++i)
        pred[i] = observed[i - horizon];
    return pred;
}

namespace {

int modal_class(const std::array<int, core::num_risk_classes>& counts) {
    int best = 0;
    for (int c = 1; c < core::num_risk_classes; ++c)
        if (counts[c] > counts[best]) best = c;  // strict: ties go low
    return best;
}

}  // namespace

WeekModeTable week_mode_fit(std::span<const LabeledDay> training) {
    if (training.empty()) throw core::ValidationError("training", "empty training set");
    std::map<std::pair<int, int>, std::array<int, core::num_risk_classes>> counts;
    std::array<int, core::num_risk_classes> global{};
    for (const auto& day : training) {
        const auto cal = core::make_calendar_features(day.date);
        counts[{day.zone.code, cal.iso_week}][day.label] += 1;
        global[day.label] += 1;
    }
    WeekModeTable table;
    for (const auto& [key, c] : counts) table.mode[key] = modal_class(c);
    table.fallback = modal_class(global);
    return table;
}

int week_mode_predict(const WeekModeTable& table, core::ZoneId zone, const core::Date& date) {
    const auto cal = core::make_calendar_features(date);
    const auto it = table.mode.find({zone.code, cal.iso_week});
    return it != table.mode.end() ? it->second : table.fallback;
}

PoissonRates poisson_fit(std::span<const CountDay> training) {
    if (training.empty()) throw core::ValidationError("training", "empty training set");
    std::map<int, std::pair<double, std::size_t>> sums;
    double total = 0.0;
    for (const auto& day : training) {
        if (day.count < 0.0) throw core::ValidationError("count", "negative count");
        auto& s = sums[day.zone.code];
        s.first += day.count;
        s.second += 1;
        total += day.count;
    }
    PoissonRates rates;
    for (const auto& [zone, s] : sums) rates.lambda[zone] = s.first / static_cast<double>(s.second);
    rates.pooled = total / static_cast<double>(training.size());
    return rates;
}

int poisson_predict_class(double lambda, const targets::BinningModel& binning) {
    if (lambda < 0.0) throw core::ValidationError("lambda", "negative rate");
    // P(N = 0) is class 0's whole mass; positive counts map through the
    // binning. Sum the pmf far enough into the tail to be negligible.
    std::array<double, core::num_risk_classes> mass{};
    mass[0] = std::exp(-lambda);
    double pmf = mass[0];
    double cumulative = pmf;
    const int cap = static_cast<int>(std::ceil(binning.boundaries[2] + 10.0 * (lambda + 1.0))) + 50;
    for (int k = 1; k <= cap && cumulative < 1.0 - 1e-12; ++k) {
        pmf *= lambda / static_cast<double>(k);
        mass[targets::assign_class(static_cast<double>(k), binning).level] += pmf;
        cumulative += pmf;
    }
    int best = 0;
    for (int c = 1; c < core::num_risk_classes; ++c)
        if (mass[c] > mass[best]) best = c;  // ties go low
    return best;
}

int poisson_predict(const PoissonRates& rates, core::ZoneId zone,
                    const targets::BinningModel& binning) {
    const auto it = rates.lambda.find(zone.code);
    return poisson_predict_class(it != rates.lambda.end() ? it->second : rates.pooled, binning);
}

double logreg_loss(const Eigen::MatrixXd& weights, const Eigen::VectorXd& intercepts,
                   const Eigen::MatrixXd& x, const std::vector<int>& y,
                   Eigen::MatrixXd* dweights, Eigen::VectorXd* dintercepts) {
    const int n = static_cast<int>(x.rows());
    const int classes = static_cast<int>(weights.rows());
    if (static_cast<int>(y.size()) != n)
        throw core::ValidationError("labels", "label count mismatch");

    // logits: n x classes
    Eigen::MatrixXd logits = (x * weights.transpose()).rowwise() + intercepts.transpose();
    double loss = 0.0;
    Eigen::MatrixXd probs(n, classes);
    for (int i = 0; i < n; ++i) {
        const double m = logits.row(i).maxCoeff();
        Eigen::RowVectorXd e = (logits.row(i).array() - m).exp();
        const double s = e.sum();
        probs.row(i) = e / s;
        loss -= std::log(std::max(probs(i, y[i]), 1e-300));
    }
    loss /= static_cast<double>(n);
    if (dweights || dintercepts) {
        Eigen::MatrixXd delta = probs;  // n x classes
        for (int i = 0; i < n; ++i) delta(i, y[i]) -= 1.0;
        delta /= static_cast<double>(n);
        if (dweights) *dweights = delta.transpose() * x;
        if (dintercepts) *dintercepts = delta.colwise().sum().transpose();
    }
    return loss;
}

LogRegModel logreg_fit(const Eigen::MatrixXd& x, const std::vector<int>& y,
                       const LogRegOptions& options) {
    LogRegModel model;
    model.weights = Eigen::MatrixXd::Zero(core::num_risk_classes, x.cols());
    model.intercepts = Eigen::VectorXd::Zero(core::num_risk_classes);
    double grad_norm = 0.0;
    for (int iter = 0; iter < options.max_iterations; ++iter) {
        Eigen::MatrixXd dw;
        Eigen::VectorXd db;
        logreg_loss(model.weights, model.intercepts, x, y, &dw, &db);
        grad_norm = std::max(dw.cwiseAbs().maxCoeff(), db.cwiseAbs().maxCoeff());
        if (grad_norm < options.tolerance) {
            model.converged = true;
            model.final_gradient_norm = grad_norm;
            return model;
        }
        model.weights -= options.learning_rate * dw;
        model.intercepts -= options.learning_rate * db;
    }
    model.converged = false;
    model.final_gradient_norm = grad_norm;
    return model;
}

Eigen::MatrixXd logreg_probabilities(const LogRegModel& model, const Eigen::MatrixXd& x) {
    Eigen::MatrixXd logits = (x * model.weights.transpose()).rowwise() + model.intercepts.transpose();
    Eigen::MatrixXd probs(logits.rows(), logits.cols());
    for (int i = 0; i < logits.rows(); ++i) {
        const double m = logits.row(i).maxCoeff();
        Eigen::RowVectorXd e = (logits.row(i).array() - m).exp();
        probs.row(i) = e / e.sum();
    }
    return probs;
}

std::vector<int> logreg_predict(const LogRegModel& model, const Eigen::MatrixXd& x) {
    const auto probs = logreg_probabilities(model, x);
    std::vector<int> pred(probs.rows());
    for (int i = 0; i < probs.rows(); ++i) {
        int best = 0;
        for (int c = 1; c < probs.cols(); ++c)
            if (probs(i, c) > probs(i, best)) best = c;
        pred[i] = best;
    }
    return pred;
}

LogRegModel logreg_train(const Eigen::MatrixXd& train_x, const std::vector<int>& train_y,
                         const Eigen::MatrixXd& val_x, const std::vector<int>& val_y,
                         std::span<const double> rho_grid, const LogRegOptions& options) {
    if (rho_grid.empty()) throw core::ValidationError("rho_grid", "empty proportion grid");

    std::vector<std::size_t> zero_rows, positive_rows;
    for (std::size_t i = 0; i < train_y.size(); ++i)
        (train_y[i] == 0 ? zero_rows : positive_rows).push_back(i);

    LogRegModel best;
    double best_iou = -1.0;
    for (const double rho : rho_grid) {
        if (rho <= 0.0 || rho > 1.0)
            throw core::ValidationError("rho", "majority proportion outside (0,1]");
        // Keep n0' class-0 rows so they form at most fraction rho.
        std::size_t keep0 = zero_rows.size();
        if (rho < 1.0 && !positive_rows.empty()) {
            const double target =
                rho / (1.0 - rho) * static_cast<double>(positive_rows.size());
            keep0 = std::min<std::size_t>(zero_rows.size(),
                                          static_cast<std::size_t>(std::ceil(target)));
        }
        std::vector<std::size_t> shuffled = zero_rows;
        rng::Engine eng(rng::derive_seed(options.seed, "logreg_rho",
                                         static_cast<std::uint64_t>(rho * 1e6)));
        for (std::size_t i = shuffled.size(); i > 1; --i)
            std::swap(shuffled[i - 1], shuffled[eng.uniform_index(i)]);
        std::vector<std::size_t> rows = positive_rows;
        rows.insert(rows.end(), shuffled.begin(), shuffled.begin() + keep0);
        std::sort(rows.begin(), rows.end());

        Eigen::MatrixXd x(rows.size(), train_x.cols());
        std::vector<int> y(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            x.row(i) = train_x.row(static_cast<int>(rows[i]));
            y[i] = train_y[rows[i]];
        }
        LogRegModel model = logreg_fit(x, y, options);
        model.chosen_rho = rho;
        const auto val_pred = logreg_predict(model, val_x);
        model.chosen_val_iou = metrics::ordinal_iou(val_y, val_pred);
        if (model.chosen_val_iou > best_iou + 1e-12) {
            best_iou = model.chosen_val_iou;
            best = model;
        }
    }
    return best;
}

Eigen::MatrixXd last_day_features(const features::WindowTensor& windows) {
    Eigen::MatrixXd x(windows.n_windows, windows.n_channels);
    for (std::size_t w = 0; w < windows.n_windows; ++w)
        for (std::size_t c = 0; c < windows.n_channels; ++c)
            x(static_cast<int>(w), static_cast<int>(c)) = windows.at(w, c, windows.seq_len - 1);
    return x;
}

}  // namespace wildfire::baselines
