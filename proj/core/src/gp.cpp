#include "grc/gp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>

namespace grc::gp {

namespace {

void append_value(std::string& line, double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    line += buf;
}

// Cholesky factor of K + sigma_omega^2 I and the weights alpha.
struct GramFactor {
    Eigen::MatrixXd chol_lower;
    Eigen::VectorXd alpha;
};

GramFactor factor_gram(const Hyperparams& hp, const ObservationWindow& win) {
    const auto m = static_cast<Eigen::Index>(win.size());
    Eigen::MatrixXd k(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = i; j < m; ++j) {
            k(i, j) = kernel(hp, win.input(i), win.input(j));
            k(j, i) = k(i, j);
        }
    }
    k.diagonal().array() += hp.sigma_omega_sq;
    Eigen::LLT<Eigen::MatrixXd> llt(k);
    if (llt.info() != Eigen::Success) {
        throw NumericalError("gp: gram matrix is ill-conditioned");
    }
    return {llt.matrixL(), llt.solve(win.outputs())};
}

Prediction predict_with(const GramFactor& fac, const Hyperparams& hp,
                        const ObservationWindow& win, const Eigen::VectorXd& a_star) {
    const auto m = static_cast<Eigen::Index>(win.size());
    Eigen::VectorXd ks(m);
    for (Eigen::Index i = 0; i < m; ++i) ks[i] = kernel(hp, a_star, win.input(i));
    const Eigen::VectorXd v =
        fac.chol_lower.triangularView<Eigen::Lower>().solve(ks);
    Prediction out;
    out.mu = ks.dot(fac.alpha);
    out.sigma_sq = std::max(0.0, kernel(hp, a_star, a_star) - v.squaredNorm());
    return out;
}

}  // namespace

void Hyperparams::validate() const {
    if (!(sigma_eta_sq > 0.0)) throw ConfigError("gp: sigma_eta_sq must be positive");
    if (!(sigma_omega_sq > 0.0)) throw ConfigError("gp: sigma_omega_sq must be positive");
    if (length_scales.size() == 0 || (length_scales.array() <= 0.0).any()) {
        throw ConfigError("gp: length scales must all be positive");
    }
}

ObservationWindow::ObservationWindow(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ == 0) throw ConfigError("gp: window capacity must be at least 1");
}

void ObservationWindow::ingest(const Eigen::VectorXd& input, double output) {
    if (!inputs_.empty() && input.size() != inputs_.front().size()) {
        throw std::invalid_argument("gp: observation dimension differs from the window");
    }
    if (inputs_.size() == capacity_) {
        inputs_.erase(inputs_.begin());
        outputs_.erase(outputs_.begin());
    }
    inputs_.push_back(input);
    outputs_.push_back(output);
}

Eigen::VectorXd ObservationWindow::outputs() const {
    return Eigen::Map<const Eigen::VectorXd>(outputs_.data(),
                                             static_cast<Eigen::Index>(outputs_.size()));
}

void ObservationWindow::to_csv(std::ostream& os) const {
    if (empty()) return;
    const Eigen::Index dim = inputs_.front().size();
    std::string line;
    for (Eigen::Index d = 0; d < dim; ++d) {
        line += "a" + std::to_string(d + 1) + ",";
    }
    line += "y\n";
    os << line;
    for (std::size_t i = 0; i < inputs_.size(); ++i) {
        line.clear();
        for (Eigen::Index d = 0; d < dim; ++d) {
            append_value(line, inputs_[i][d]);
            line += ',';
        }
        append_value(line, outputs_[i]);
        line += '\n';
        os << line;
    }
}

ObservationWindow ObservationWindow::from_csv(std::istream& is, std::size_t capacity) {
    ObservationWindow win(capacity);
    std::string line;
    if (!std::getline(is, line)) return win;  // empty stream => empty window
    const auto cols = static_cast<Eigen::Index>(std::count(line.begin(), line.end(), ',')) + 1;
    if (cols < 2) throw std::invalid_argument("gp: window csv needs input columns and an output");
    const Eigen::Index dim = cols - 1;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream row(line);
        std::string cell;
        Eigen::VectorXd input(dim);
        for (Eigen::Index d = 0; d < dim; ++d) {
            if (!std::getline(row, cell, ',')) {
                throw std::invalid_argument("gp: window csv row is too short");
            }
            input[d] = std::stod(cell);
        }
        if (!std::getline(row, cell, ',')) {
            throw std::invalid_argument("gp: window csv row is missing the output");
        }
        win.ingest(input, std::stod(cell));
    }
    return win;
}

double kernel(const Hyperparams& hp, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() != b.size() || a.size() != hp.length_scales.size()) {
        throw std::invalid_argument("gp: kernel input dimension mismatch");
    }
    const double d2 = ((a - b).array() / hp.length_scales.array()).square().sum();
    return hp.sigma_eta_sq * std::exp(-0.5 * d2);
}

Prediction predict(const Hyperparams& hp, const ObservationWindow& win,
                   const Eigen::VectorXd& a_star) {
    hp.validate();
    if (win.empty()) return {0.0, hp.sigma_eta_sq};
    return predict_with(factor_gram(hp, win), hp, win, a_star);
}

double log_marginal_likelihood(const Hyperparams& hp, const ObservationWindow& win) {
    hp.validate();
    if (win.empty()) {
        throw std::invalid_argument("gp: log marginal likelihood needs observations");
    }
    const GramFactor fac = factor_gram(hp, win);
    const auto m = static_cast<double>(win.size());
    return -0.5 * win.outputs().dot(fac.alpha) -
           fac.chol_lower.diagonal().array().log().sum() -
           0.5 * m * std::log(2.0 * std::numbers::pi);
}

double rho_component(const Prediction& pred, double beta_sqrt) {
    if (beta_sqrt < 0.0) throw std::invalid_argument("gp: beta_sqrt must be nonnegative");
    return std::abs(pred.mu) + beta_sqrt * std::sqrt(std::max(0.0, pred.sigma_sq));
}

double rho_aggregate(const Eigen::VectorXd& components) {
    if ((components.array() < 0.0).any()) {
        throw std::invalid_argument("gp: rho components must be nonnegative");
    }
    return components.norm();
}

Hyperparams tune_hyperparams(const ObservationWindow& win, const Hyperparams& base,
                             const TuneGrid& grid) {
    if (grid.sigma_eta_sq.empty() || grid.length_scale.empty()) {
        throw std::invalid_argument("gp: tuning grid must not be empty");
    }
    if (win.size() < 10) {
        throw std::invalid_argument("gp: tuning needs at least 10 observations");
    }
    const Eigen::Index dim = win.input(0).size();
    Hyperparams best;
    double best_lml = -std::numeric_limits<double>::infinity();
    for (double s : grid.sigma_eta_sq) {
        for (double l : grid.length_scale) {
            Hyperparams cand;
            cand.sigma_eta_sq = s;
            cand.length_scales = Eigen::VectorXd::Constant(dim, l);
            cand.sigma_omega_sq = base.sigma_omega_sq;
            const double lml = log_marginal_likelihood(cand, win);
            if (lml > best_lml) {
                best_lml = lml;
                best = cand;
            }
        }
    }
    return best;
}

double information_gain_greedy(const Hyperparams& hp,
                               const std::vector<Eigen::VectorXd>& candidates,
                               std::size_t budget, double sigma_bar_sq) {
    hp.validate();
    if (candidates.empty()) throw std::invalid_argument("gp: no candidates");
    if (budget == 0) throw std::invalid_argument("gp: budget must be at least 1");
    if (!(sigma_bar_sq > 0.0)) throw std::invalid_argument("gp: sigma_bar_sq must be positive");

    // Marginal gain of a point is 0.5 log(1 + sigma^2(point)/sigma_bar^2)
    // with the posterior taken at noise level sigma_bar^2.
    Hyperparams noisy = hp;
    noisy.sigma_omega_sq = sigma_bar_sq;
    const std::size_t picks = std::min(budget, candidates.size());
    ObservationWindow selected(picks);
    std::vector<bool> used(candidates.size(), false);

    double total = 0.0;
    for (std::size_t step = 0; step < picks; ++step) {
        double best_var = -1.0;
        std::size_t best_idx = 0;
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            if (used[i]) continue;
            const double var = predict(noisy, selected, candidates[i]).sigma_sq;
            if (var > best_var) {
                best_var = var;
                best_idx = i;
            }
        }
        used[best_idx] = true;
        selected.ingest(candidates[best_idx], 0.0);
        total += 0.5 * std::log1p(best_var / sigma_bar_sq);
    }
    return total;
}

Regressor::Regressor(Hyperparams hp, std::size_t window_capacity)
    : hp_(std::move(hp)), win_(window_capacity) {
    hp_.validate();
}

void Regressor::ingest(const Eigen::VectorXd& input, double output) {
    win_.ingest(input, output);
    refactor();
}

void Regressor::refactor() {
    const GramFactor fac = factor_gram(hp_, win_);
    chol_lower_ = fac.chol_lower;
    alpha_ = fac.alpha;
}

Prediction Regressor::predict(const Eigen::VectorXd& a_star) const {
    if (win_.empty()) return {0.0, hp_.sigma_eta_sq};
    return predict_with({chol_lower_, alpha_}, hp_, win_, a_star);
}

double Regressor::log_marginal_likelihood() const {
    if (win_.empty()) {
        throw std::invalid_argument("gp: log marginal likelihood needs observations");
    }
    const auto m = static_cast<double>(win_.size());
    return -0.5 * win_.outputs().dot(alpha_) -
           chol_lower_.diagonal().array().log().sum() -
           0.5 * m * std::log(2.0 * std::numbers::pi);
}

void ConfidenceConfig::validate() const {
    if (beta_sqrt.size() == 0 || (beta_sqrt.array() < 0.0).any()) {
        throw ConfigError("gp: confidence multipliers must be nonnegative");
    }
}

Bank::Bank(const Hyperparams& hp, Eigen::Index outputs, std::size_t window_capacity,
           ConfidenceConfig confidence)
    : confidence_(std::move(confidence)) {
    confidence_.validate();
    if (confidence_.beta_sqrt.size() != outputs) {
        throw ConfigError("gp: bank needs one confidence multiplier per output");
    }
    regressors_.reserve(static_cast<std::size_t>(outputs));
    for (Eigen::Index i = 0; i < outputs; ++i) regressors_.emplace_back(hp, window_capacity);
}

void Bank::ingest(const Eigen::VectorXd& input, const Eigen::VectorXd& outputs) {
    if (outputs.size() != this->outputs()) {
        throw std::invalid_argument("gp: bank ingest needs one output per regressor");
    }
    for (Eigen::Index i = 0; i < outputs.size(); ++i) {
        regressors_[static_cast<std::size_t>(i)].ingest(input, outputs[i]);
    }
}

Prediction Bank::predict(Eigen::Index output, const Eigen::VectorXd& a_star) const {
    return regressors_.at(static_cast<std::size_t>(output)).predict(a_star);
}

Eigen::VectorXd Bank::means(const Eigen::VectorXd& a_star) const {
    Eigen::VectorXd mu(outputs());
    for (Eigen::Index i = 0; i < mu.size(); ++i) {
        mu[i] = regressors_[static_cast<std::size_t>(i)].predict(a_star).mu;
    }
    return mu;
}

double Bank::rho(const Eigen::VectorXd& a_star) const {
    Eigen::VectorXd comps(outputs());
    for (Eigen::Index i = 0; i < comps.size(); ++i) {
        comps[i] = rho_component(regressors_[static_cast<std::size_t>(i)].predict(a_star),
                                 confidence_.beta_sqrt[i]);
    }
    return rho_aggregate(comps);
}

}  // namespace grc::gp
