#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

namespace elicit {

constexpr double kProbTolerance = 1e-12;

// Finite discrete distribution over real atoms, kept sorted with strictly
// increasing support. Atom values are compared exactly (bit equality), which
// is the convention for every conditioning event in this library.
class Belief {
public:
    Belief() = default;

    static Belief dirac(double x) {
        Belief b;
        b.atoms_ = {x};
        b.probs_ = {1.0};
        return b;
    }

    // Merges mass at exactly-equal atoms, drops non-positive weights.
    // If `normalize` is set the weights are rescaled to sum to one.
    static Belief from_weighted(std::vector<std::pair<double, double>> mass, bool normalize = false) {
        std::map<double, double> acc;
        double total = 0.0;
        for (const auto& [x, w] : mass) {
            if (w <= 0.0) continue;
            acc[x] += w;
            total += w;
        }
        if (acc.empty()) throw std::invalid_argument("Belief: empty support");
        Belief b;
        for (const auto& [x, w] : acc) {
            b.atoms_.push_back(x);
            b.probs_.push_back(normalize ? w / total : w);
        }
        return b;
    }

    std::size_t size() const { return atoms_.size(); }
    double atom(std::size_t i) const { return atoms_[i]; }
    double prob(std::size_t i) const { return probs_[i]; }
    const std::vector<double>& atoms() const { return atoms_; }
    const std::vector<double>& probs() const { return probs_; }

    double total_mass() const {
        double s = 0.0;
        for (double p : probs_) s += p;
        return s;
    }

    // P(X <= z)
    double cdf(double z) const {
        double s = 0.0;
        for (std::size_t i = 0; i < atoms_.size() && atoms_[i] <= z; ++i) s += probs_[i];
        return s;
    }

    double prob_at(double x) const {
        auto it = std::lower_bound(atoms_.begin(), atoms_.end(), x);
        if (it != atoms_.end() && *it == x) return probs_[static_cast<std::size_t>(it - atoms_.begin())];
        return 0.0;
    }

    double mass_at_least(double t) const {
        double s = 0.0;
        for (std::size_t i = 0; i < atoms_.size(); ++i)
            if (atoms_[i] >= t) s += probs_[i];
        return s;
    }

    double mean() const {
        double m = 0.0;
        for (std::size_t i = 0; i < atoms_.size(); ++i) m += atoms_[i] * probs_[i];
        return m;
    }

    double variance() const {
        double m = mean(), v = 0.0;
        for (std::size_t i = 0; i < atoms_.size(); ++i) v += probs_[i] * (atoms_[i] - m) * (atoms_[i] - m);
        return v;
    }

    bool is_dirac_at(double x, double tol = kProbTolerance) const {
        return prob_at(x) >= 1.0 - tol;
    }

    double min_atom() const { return atoms_.front(); }
    double max_atom() const { return atoms_.back(); }

private:
    std::vector<double> atoms_;
    std::vector<double> probs_;
};

}  // namespace elicit
