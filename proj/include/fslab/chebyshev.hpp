#pragma once

#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "fslab/errors.hpp"

namespace fslab {

// Chebyshev-Gauss-Lobatto collocation on [0,1], nodes ascending
// (sigma_0 = 0, sigma_{m-1} = 1), with the barycentric differentiation
// matrix and Clenshaw-Curtis quadrature weights.
struct ChebyshevGrid {
    int m = 0;
    Eigen::VectorXd nodes;   // sigma_j
    Eigen::MatrixXd D;       // first-derivative matrix
    Eigen::MatrixXd D2;      // D*D
    Eigen::VectorXd weights; // integrates over [0,1]

    explicit ChebyshevGrid(int m_) : m(m_) {
        if (m < 4) throw DomainError("ChebyshevGrid: need at least 4 nodes");
        const int N = m - 1;
        const double pi = std::numbers::pi;

        nodes.resize(m);
        for (int j = 0; j <= N; ++j) nodes[j] = 0.5 * (1.0 - std::cos(pi * j / N));

        // Barycentric weights for CGL nodes keep the (-1)^j / half-endpoint
        // pattern under the affine map to [0,1].
        Eigen::VectorXd w(m);
        for (int j = 0; j <= N; ++j) {
            w[j] = (j % 2 == 0) ? 1.0 : -1.0;
            if (j == 0 || j == N) w[j] *= 0.5;
        }
        D.setZero(m, m);
        for (int i = 0; i <= N; ++i) {
            double diag = 0.0;
            for (int j = 0; j <= N; ++j) {
                if (i == j) continue;
                D(i, j) = (w[j] / w[i]) / (nodes[i] - nodes[j]);
                diag -= D(i, j);
            }
            D(i, i) = diag;
        }
        D2 = D * D;

        // Clenshaw-Curtis weights (exact for the polynomial space spanned
        // by the nodes), scaled from [-1,1] to the unit interval.
        Eigen::VectorXd cc(m);
        cc.setZero();
        if (N % 2 == 0) {
            cc[0] = cc[N] = 1.0 / (double(N) * N - 1.0);
        } else {
            cc[0] = cc[N] = 1.0 / (double(N) * N);
        }
        for (int i = 1; i < N; ++i) {
            const double theta = pi * i / N;
            double v = 1.0;
            for (int k = 1; k <= (N % 2 == 0 ? N / 2 - 1 : (N - 1) / 2); ++k)
                v -= 2.0 * std::cos(2.0 * k * theta) / (4.0 * double(k) * k - 1.0);
            if (N % 2 == 0) v -= std::cos(N * theta) / (double(N) * N - 1.0);
            cc[i] = 2.0 * v / N;
        }
        // Built for descending cos ordering; our nodes ascend, weights are
        // symmetric so only the overall 1/2 scale matters.
        weights = 0.5 * cc;
    }
};

} // namespace fslab
