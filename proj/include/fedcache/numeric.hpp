#ifndef FEDCACHE_NUMERIC_HPP
#define FEDCACHE_NUMERIC_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace fedcache {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using RealVector = Vector<double>;
using RealMatrix = Matrix<double>;

/// Teacher probabilities are floored at this value before taking logs.
inline constexpr double kTeacherFloor = 1e-12;

namespace detail {

inline void require(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
}

}  // namespace detail

/// Tempered softmax, exp(x_i / T) / sum_j exp(x_j / T), evaluated after
/// subtracting the maximum logit.
template <typename Derived>
Vector<typename Derived::Scalar> softmax_temp(const Eigen::MatrixBase<Derived>& logits,
                                              typename Derived::Scalar temperature) {
    using Scalar = typename Derived::Scalar;
    detail::require(logits.size() > 0, "softmax_temp: empty logits");
    detail::require(logits.allFinite(), "softmax_temp: non-finite logits");
    detail::require(temperature > Scalar(0) && std::isfinite(temperature),
                    "softmax_temp: temperature must be positive");
    const Scalar peak = logits.maxCoeff();
    Vector<Scalar> out = ((logits.array() - peak) / temperature).exp().matrix();
    out /= out.sum();
    return out;
}

/// -log(pred[label]).
template <typename Derived>
typename Derived::Scalar cross_entropy(const Eigen::MatrixBase<Derived>& pred, Eigen::Index label) {
    detail::require(label >= 0 && label < pred.size(), "cross_entropy: label out of range");
    return -std::log(pred(label));
}

/// Soft-target cross entropy, -sum_j target[j] * log(pred[j]).
template <typename DerivedP, typename DerivedT>
typename DerivedP::Scalar soft_cross_entropy(const Eigen::MatrixBase<DerivedP>& pred,
                                             const Eigen::MatrixBase<DerivedT>& target) {
    using Scalar = typename DerivedP::Scalar;
    detail::require(pred.size() == target.size(), "soft_cross_entropy: length mismatch");
    Scalar acc = 0;
    for (Eigen::Index j = 0; j < pred.size(); ++j) {
        if (target(j) > Scalar(0)) acc -= target(j) * std::log(pred(j));
    }
    return acc;
}

/// KL(student || teacher) = sum_i s_i log(s_i / t_i), the student first.
/// Teacher entries are floored at kTeacherFloor; 0 log 0 is taken as 0.
template <typename DerivedS, typename DerivedT>
typename DerivedS::Scalar kl_div(const Eigen::MatrixBase<DerivedS>& student,
                                 const Eigen::MatrixBase<DerivedT>& teacher) {
    using Scalar = typename DerivedS::Scalar;
    detail::require(student.size() == teacher.size(), "kl_div: length mismatch");
    Scalar acc = 0;
    for (Eigen::Index i = 0; i < student.size(); ++i) {
        const Scalar s = student(i);
        if (s <= Scalar(0)) continue;
        const Scalar t = std::max<Scalar>(teacher(i), Scalar(kTeacherFloor));
        acc += s * std::log(s / t);
    }
    return std::max<Scalar>(acc, Scalar(0));
}

/// d/dlogits of cross_entropy(softmax_temp(logits, T), label), given the
/// softmax output.
template <typename Derived>
Vector<typename Derived::Scalar> cross_entropy_logit_grad(const Eigen::MatrixBase<Derived>& probs,
                                                          Eigen::Index label,
                                                          typename Derived::Scalar temperature) {
    detail::require(label >= 0 && label < probs.size(), "cross_entropy_logit_grad: label out of range");
    Vector<typename Derived::Scalar> g = probs;
    g(label) -= 1;
    return g / temperature;
}

/// d/dlogits of soft_cross_entropy(softmax_temp(logits, T), target) for a
/// target that sums to one.
template <typename DerivedP, typename DerivedT>
Vector<typename DerivedP::Scalar> soft_cross_entropy_logit_grad(const Eigen::MatrixBase<DerivedP>& probs,
                                                                const Eigen::MatrixBase<DerivedT>& target,
                                                                typename DerivedP::Scalar temperature) {
    detail::require(probs.size() == target.size(), "soft_cross_entropy_logit_grad: length mismatch");
    return (probs - target) / temperature;
}

/// d/dlogits of kl_div(softmax_temp(logits, T), teacher), given the student
/// softmax output: s_j (log(s_j / t_j) - KL) / T. The teacher is a constant.
template <typename DerivedS, typename DerivedT>
Vector<typename DerivedS::Scalar> kl_logit_grad(const Eigen::MatrixBase<DerivedS>& student,
                                                const Eigen::MatrixBase<DerivedT>& teacher,
                                                typename DerivedS::Scalar temperature) {
    using Scalar = typename DerivedS::Scalar;
    detail::require(student.size() == teacher.size(), "kl_logit_grad: length mismatch");
    const Eigen::Index n = student.size();
    Vector<Scalar> log_ratio(n);
    Scalar kl = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const Scalar s = student(i);
        if (s <= Scalar(0)) {
            log_ratio(i) = 0;
            continue;
        }
        log_ratio(i) = std::log(s / std::max<Scalar>(teacher(i), Scalar(kTeacherFloor)));
        kl += s * log_ratio(i);
    }
    return (student.array() * (log_ratio.array() - kl)).matrix() / temperature;
}

template <typename DerivedP, typename DerivedG>
Vector<typename DerivedP::Scalar> sgd_step(const Eigen::MatrixBase<DerivedP>& params,
                                           const Eigen::MatrixBase<DerivedG>& grads,
                                           typename DerivedP::Scalar lr) {
    detail::require(params.size() == grads.size(), "sgd_step: length mismatch");
    return params - lr * grads;
}

/// Central-difference gradient of `loss` at `point`. Test oracle only.
template <typename Fn>
RealVector finite_diff_grad(Fn&& loss, const RealVector& point, double eps) {
    RealVector grad(point.size());
    RealVector probe = point;
    for (Eigen::Index i = 0; i < point.size(); ++i) {
        probe(i) = point(i) + eps;
        const double up = loss(probe);
        probe(i) = point(i) - eps;
        const double down = loss(probe);
        probe(i) = point(i);
        grad(i) = (up - down) / (2.0 * eps);
    }
    return grad;
}

/// Index of the largest entry; ties go to the lowest index.
template <typename Derived>
Eigen::Index argmax(const Eigen::MatrixBase<Derived>& v) {
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < v.size(); ++i) {
        if (v(i) > v(best)) best = i;
    }
    return best;
}

}  // namespace fedcache

#endif
