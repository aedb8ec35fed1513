#pragma once

// Small dense helpers for categorical policies over candidate feature rows.

#include <cmath>
#include <limits>

#include <Eigen/Dense>

namespace hsrl::math {

template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> log_softmax(const Eigen::MatrixBase<Derived>& logits)
{
    using Scalar = typename Derived::Scalar;
    const Scalar top = logits.maxCoeff();
    const auto shifted = (logits.array() - top).eval();
    const Scalar lse = std::log(shifted.exp().sum());
    return (shifted - lse).matrix();
}

template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> softmax(const Eigen::MatrixBase<Derived>& logits)
{
    return log_softmax(logits).array().exp().matrix();
}

/// E_p[f] for feature rows `features` (K x F) and probabilities `p` (K).
template <typename DerivedF, typename DerivedP>
Eigen::Matrix<typename DerivedF::Scalar, Eigen::Dynamic, 1> expected_features(const Eigen::MatrixBase<DerivedF>& features,
                                                                               const Eigen::MatrixBase<DerivedP>& p)
{
    return features.transpose() * p;
}

/// KL(p || q) from log-probability vectors.
template <typename DerivedP, typename DerivedQ>
typename DerivedP::Scalar kl_divergence(const Eigen::MatrixBase<DerivedP>& log_p, const Eigen::MatrixBase<DerivedQ>& log_q)
{
    return (log_p.array().exp() * (log_p.array() - log_q.array())).sum();
}

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m)
{
    return m.array().isFinite().all();
}

}  // namespace hsrl::math
