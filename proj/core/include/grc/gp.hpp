#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "grc/errors.hpp"

namespace grc::gp {

// Squared-exponential kernel hyperparameters. length_scales holds the
// diagonal of the bandwidth matrix, one entry per input dimension.
struct Hyperparams {
    double sigma_eta_sq = 1.0;      // prior variance
    Eigen::VectorXd length_scales;  // per-dimension, all > 0
    double sigma_omega_sq = 1e-6;   // observation-noise variance

    void validate() const;  // throws ConfigError
};

struct Prediction {
    double mu = 0.0;
    double sigma_sq = 0.0;
};

// Fixed-capacity FIFO of (input, output) observations; the oldest pair is
// evicted to make room once the window is full. Insertion order is kept.
class ObservationWindow {
public:
    explicit ObservationWindow(std::size_t capacity);

    void ingest(const Eigen::VectorXd& input, double output);

    std::size_t size() const { return inputs_.size(); }
    std::size_t capacity() const { return capacity_; }
    bool empty() const { return inputs_.empty(); }
    const Eigen::VectorXd& input(std::size_t i) const { return inputs_[i]; }
    double output(std::size_t i) const { return outputs_[i]; }
    Eigen::VectorXd outputs() const;

    // Columns: one per input feature, then the output. Values round-trip
    // exactly.
    void to_csv(std::ostream& os) const;
    static ObservationWindow from_csv(std::istream& is, std::size_t capacity);

private:
    std::size_t capacity_;
    std::vector<Eigen::VectorXd> inputs_;
    std::vector<double> outputs_;
};

// k(a, b) = sigma_eta^2 exp(-0.5 sum_i ((a_i - b_i)/l_i)^2)
double kernel(const Hyperparams& hp, const Eigen::VectorXd& a, const Eigen::VectorXd& b);

// Exact posterior (zero prior mean). An empty window yields the prior
// (0, sigma_eta^2).
Prediction predict(const Hyperparams& hp, const ObservationWindow& win,
                   const Eigen::VectorXd& a_star);

double log_marginal_likelihood(const Hyperparams& hp, const ObservationWindow& win);

// max(|mu - b sigma|, |mu + b sigma|) = |mu| + b sigma
double rho_component(const Prediction& pred, double beta_sqrt);

// Euclidean norm of the per-output bounds; components must be nonnegative.
double rho_aggregate(const Eigen::VectorXd& components);

// Grid for offline evidence maximisation: prior variances crossed with a
// shared isotropic length scale. Noise variance is taken from the base
// hyperparameters.
struct TuneGrid {
    std::vector<double> sigma_eta_sq;
    std::vector<double> length_scale;
};

Hyperparams tune_hyperparams(const ObservationWindow& win, const Hyperparams& base,
                             const TuneGrid& grid);

// Greedy lower-bound estimate of the maximum information gain
// 0.5 log det(I + K / sigma_bar_sq) over subsets of the candidates, built by
// repeatedly adding the candidate with the largest posterior variance.
// Offline diagnostic; monotone nondecreasing in the budget.
double information_gain_greedy(const Hyperparams& hp,
                               const std::vector<Eigen::VectorXd>& candidates,
                               std::size_t budget, double sigma_bar_sq);

// Per-output confidence multipliers for the interval |mu| + beta_sqrt sigma.
struct ConfidenceConfig {
    Eigen::VectorXd beta_sqrt;  // one nonnegative entry per regressor

    void validate() const;  // throws ConfigError
};

// One GP with a cached Gram factorisation. ingest rebuilds the
// factorisation, so predictions are cheap and const. Reads are safe from
// several threads; ingest needs exclusive access.
class Regressor {
public:
    Regressor(Hyperparams hp, std::size_t window_capacity);

    void ingest(const Eigen::VectorXd& input, double output);
    Prediction predict(const Eigen::VectorXd& a_star) const;
    double log_marginal_likelihood() const;

    const ObservationWindow& window() const { return win_; }
    const Hyperparams& hyperparams() const { return hp_; }

private:
    void refactor();

    Hyperparams hp_;
    ObservationWindow win_;
    Eigen::MatrixXd chol_lower_;  // L with L L^T = K + sigma_omega^2 I
    Eigen::VectorXd alpha_;       // (K + sigma_omega^2 I)^{-1} y
};

// N independent regressors sharing one input stream, one per output
// dimension. ingest updates every window before returning, so a prediction
// never sees a half-updated bank; predictions are const and may run
// concurrently.
class Bank {
public:
    Bank(const Hyperparams& hp, Eigen::Index outputs, std::size_t window_capacity,
         ConfidenceConfig confidence);

    void ingest(const Eigen::VectorXd& input, const Eigen::VectorXd& outputs);
    Prediction predict(Eigen::Index output, const Eigen::VectorXd& a_star) const;
    Eigen::VectorXd means(const Eigen::VectorXd& a_star) const;

    // aggregate bound sqrt(sum_i (|mu_i| + beta_i sigma_i)^2) at a query
    double rho(const Eigen::VectorXd& a_star) const;

    Eigen::Index outputs() const { return static_cast<Eigen::Index>(regressors_.size()); }
    const Regressor& regressor(Eigen::Index i) const {
        return regressors_[static_cast<std::size_t>(i)];
    }
    const ConfidenceConfig& confidence() const { return confidence_; }

private:
    std::vector<Regressor> regressors_;
    ConfidenceConfig confidence_;
};

}  // namespace grc::gp
