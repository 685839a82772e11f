#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bundlechoice/matrix.hpp"

namespace bundlechoice {

/// The choice set {(0,0),(1,0),(0,1),(1,1)} indexed 0..3.
inline constexpr int kNumAlternatives = 4;

inline constexpr int alt_d1(int alt) { return (alt == 1 || alt == 3) ? 1 : 0; }
inline constexpr int alt_d2(int alt) { return (alt == 2 || alt == 3) ? 1 : 0; }

inline const char* alt_label(int alt) {
    static const char* labels[] = {"00", "10", "01", "11"};
    return labels[alt];
}

inline int alt_from_label(const std::string& s) {
    for (int a = 0; a < kNumAlternatives; ++a)
        if (s == alt_label(a)) return a;
    throw std::invalid_argument("unknown choice label: " + s);
}

/// Free coefficients under the first-coefficient-equals-one normalization:
/// the full coefficient on x_j is (1, beta_free...), on w it is
/// (1, gamma_free...). rho1/rho2/rho_b multiply the common regressors s.
struct ModelParams {
    std::vector<double> beta_free;
    std::vector<double> gamma_free;
    std::vector<double> rho1;
    std::vector<double> rho2;
    std::optional<std::vector<double>> rho_b;

    std::vector<double> beta_full() const {
        std::vector<double> b{1.0};
        b.insert(b.end(), beta_free.begin(), beta_free.end());
        return b;
    }
    std::vector<double> gamma_full() const {
        std::vector<double> r{1.0};
        r.insert(r.end(), gamma_free.begin(), gamma_free.end());
        return r;
    }
};

/// Cross-sectional sample. Choices are stored as alternative indices; the
/// one-hot representation y(i, d) is derived and therefore exactly one-hot.
struct ChoiceSample {
    Matrix x1, x2;  // N x k1 each
    Matrix w;       // N x k2
    Matrix s;       // N x k3 (k3 may be 0)
    std::vector<int> choice;  // N entries in 0..3

    std::vector<bool> discrete_x;  // length k1, applies to both x1 and x2
    std::vector<bool> discrete_w;  // length k2

    std::size_t size() const { return choice.size(); }
    std::size_t k1() const { return x1.cols(); }
    std::size_t k2() const { return w.cols(); }
    std::size_t k3() const { return s.cols(); }

    double y(std::size_t i, int alt) const { return choice[i] == alt ? 1.0 : 0.0; }

    void validate() const {
        const std::size_t n = size();
        if (x1.rows() != n || x2.rows() != n || w.rows() != n || (s.cols() > 0 && s.rows() != n))
            throw std::invalid_argument("ChoiceSample: inconsistent row counts");
        if (x1.cols() != x2.cols())
            throw std::invalid_argument("ChoiceSample: x1/x2 column mismatch");
        if (discrete_x.size() != k1() || discrete_w.size() != k2())
            throw std::invalid_argument("ChoiceSample: discrete mask size mismatch");
        for (int c : choice)
            if (c < 0 || c >= kNumAlternatives)
                throw std::invalid_argument("ChoiceSample: choice index out of range");
    }
};

/// Panel sample: per period t, the same block layout as ChoiceSample.
/// Fixed effects live only inside the generator; estimators see covariates
/// and choices only.
struct PanelChoiceSample {
    std::size_t n_agents = 0;
    std::size_t periods = 0;  // T >= 2
    std::vector<Matrix> x1, x2, w, s;          // T matrices, N x k each
    std::vector<std::vector<int>> choice;      // [T][N]

    std::vector<bool> discrete_x;
    std::vector<bool> discrete_w;

    std::size_t k1() const { return x1.empty() ? 0 : x1[0].cols(); }
    std::size_t k2() const { return w.empty() ? 0 : w[0].cols(); }
    std::size_t k3() const { return s.empty() ? 0 : s[0].cols(); }

    double y(std::size_t t, std::size_t i, int alt) const {
        return choice[t][i] == alt ? 1.0 : 0.0;
    }

    void validate() const {
        if (periods < 2) throw std::invalid_argument("PanelChoiceSample: need T >= 2");
        if (x1.size() != periods || x2.size() != periods || w.size() != periods ||
            s.size() != periods || choice.size() != periods)
            throw std::invalid_argument("PanelChoiceSample: period count mismatch");
        for (std::size_t t = 0; t < periods; ++t) {
            if (x1[t].rows() != n_agents || choice[t].size() != n_agents)
                throw std::invalid_argument("PanelChoiceSample: agent count mismatch");
        }
    }
};

/// Unobservables for a single agent(-period). alpha terms are panel-only.
struct LatentDraw {
    double eps1 = 0.0;
    double eps2 = 0.0;
    double eta = 0.0;  // >= 0
    double alpha1 = 0.0;
    double alpha2 = 0.0;
    double alpha_b = 0.0;
};

}  // namespace bundlechoice
