#pragma once

// Sharpness scores of a frame and their gradients with respect to the bin
// values. Both scores are maximized.

#include <cmath>
#include <string>

#include "fbp/binning.hpp"
#include "fbp/error.hpp"
#include "fbp/special_functions.hpp"

namespace fbp {

/// Negative binomial parameters. With the default convention the pmf is
/// Gamma(h+r) / (Gamma(h+1) Gamma(r)) (1-p)^r p^h; the swapped convention
/// exchanges p and 1-p.
struct NBParams {
  double r = 0.3;
  double p = 0.8;
  bool swap_p = false;

  void validate() const {
    if (!(r > 0.0) || !std::isfinite(r))
      throw Error(ErrorCode::InvalidArgument, "negative binomial r must be positive");
    if (!(p > 0.0 && p < 1.0)) throw Error(ErrorCode::InvalidArgument, "negative binomial p must lie in (0, 1)");
  }

  double success() const { return swap_p ? 1.0 - p : p; }
  double failure() const { return swap_p ? p : 1.0 - p; }
};

struct ScoreKind {
  enum class Kind { Variance, LogLikelihood };
  Kind kind = Kind::Variance;
  NBParams nb{};

  static ScoreKind variance() { return {Kind::Variance, {}}; }
  static ScoreKind loglik(NBParams nb = {}) { return {Kind::LogLikelihood, nb}; }

  std::string name() const { return kind == Kind::Variance ? "var" : "ll"; }
};

namespace detail {

inline void require_nonempty(const Frame& f) {
  if (f.values.empty()) throw Error(ErrorCode::EmptyFrame, "score of an empty frame");
}

inline void require_nonnegative(const Frame& f) {
  for (double h : f.values)
    if (h < 0.0) throw Error(ErrorCode::NegativeBinValue, "log-likelihood needs nonnegative bins");
}

inline double mean(const Frame& f) { return f.sum() / static_cast<double>(f.size()); }

}  // namespace detail

/// Population variance over all W*H bins.
inline double score_variance(const Frame& frame) {
  detail::require_nonempty(frame);
  const double mu = detail::mean(frame);
  double s = 0.0;
  for (double h : frame.values) s += (h - mu) * (h - mu);
  return s / static_cast<double>(frame.size());
}

inline Frame adjoint_variance(const Frame& frame) {
  detail::require_nonempty(frame);
  const double mu = detail::mean(frame);
  const double scale = 2.0 / static_cast<double>(frame.size());
  Frame out(frame.grid);
  for (std::size_t i = 0; i < frame.size(); ++i) out.values[i] = scale * (frame.values[i] - mu);
  return out;
}

inline double nb_log_pmf(double h, const NBParams& nb) {
  return log_gamma(h + nb.r) - log_gamma(h + 1.0) - log_gamma(nb.r) +
         nb.r * std::log(nb.failure()) + h * std::log(nb.success());
}

inline double score_loglik(const Frame& frame, const NBParams& nb = {}) {
  nb.validate();
  detail::require_nonempty(frame);
  detail::require_nonnegative(frame);
  double s = 0.0;
  for (double h : frame.values) s += nb_log_pmf(h, nb);
  return s;
}

/// d/dh log NB(h | r, p) = psi(h + r) - psi(h + 1) + ln p.
inline Frame adjoint_loglik(const Frame& frame, const NBParams& nb = {}) {
  nb.validate();
  detail::require_nonempty(frame);
  detail::require_nonnegative(frame);
  const double log_p = std::log(nb.success());
  Frame out(frame.grid);
  for (std::size_t i = 0; i < frame.size(); ++i) {
    const double h = frame.values[i];
    out.values[i] = digamma(h + nb.r) - digamma(h + 1.0) + log_p;
  }
  return out;
}

inline double score(const ScoreKind& kind, const Frame& frame) {
  return kind.kind == ScoreKind::Kind::Variance ? score_variance(frame)
                                                : score_loglik(frame, kind.nb);
}

inline Frame score_adjoint(const ScoreKind& kind, const Frame& frame) {
  return kind.kind == ScoreKind::Kind::Variance ? adjoint_variance(frame)
                                                : adjoint_loglik(frame, kind.nb);
}

}  // namespace fbp
