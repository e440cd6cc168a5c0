/* Copyright 2026 The fpmkit Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fpm/error.hpp"
#include "fpm/fft.hpp"
#include "fpm/forward.hpp"
#include "fpm/image.hpp"
#include "fpm/tv.hpp"

namespace fpm {

enum class Fidelity { l1_smoothed, l2 };
/// zeros is a stationary point of the energy (the modulus and TV gradients both
/// vanish there): the run keeps the zero image with a flat energy trace.
enum class InitKind { zeros, cc_measurement };

inline std::string to_string(Fidelity f) { return f == Fidelity::l2 ? "l2" : "l1_smoothed"; }
inline std::string to_string(InitKind i) {
  return i == InitKind::zeros ? "zeros" : "cc_measurement";
}

inline Fidelity fidelity_from_string(const std::string& s) {
  if (s == "l1_smoothed" || s == "l1") return Fidelity::l1_smoothed;
  if (s == "l2") return Fidelity::l2;
  throw ConfigError("unknown fidelity '" + s + "' (expected l1_smoothed or l2)");
}

inline InitKind init_from_string(const std::string& s) {
  if (s == "zeros") return InitKind::zeros;
  if (s == "cc_measurement" || s == "cc") return InitKind::cc_measurement;
  throw ConfigError("unknown init '" + s + "' (expected zeros or cc_measurement)");
}

struct ReconSettings {
  double alpha = 1e-3;
  int iterations = 500;
  double step = 1.0;
  Fidelity fidelity = Fidelity::l1_smoothed;
  double eps_abs = 1e-8;
  double eps_fid = 1e-6;
  bool backtracking = true;
  InitKind init = InitKind::cc_measurement;

  void validate() const {
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ConfigError("alpha must be >= 0");
    if (iterations < 1) throw ConfigError("iterations must be >= 1");
    if (!(step > 0.0) || !std::isfinite(step)) throw ConfigError("step must be > 0");
    if (!(eps_abs > 0.0)) throw ConfigError("eps_abs must be > 0");
    if (!(eps_fid > 0.0)) throw ConfigError("eps_fid must be > 0");
  }
};

struct ReconResult {
  RealImage estimate;
  /// Energy after each iteration.
  std::vector<double> energy_trace;
  ReconSettings settings;
  /// Set when backtracking exhausted its halvings; the run stops there and the
  /// trace ends at that iteration.
  bool stalled = false;
};

/// Raised when the energy turns non-finite; carries the iterations done so far.
class ReconAborted : public NumericalError {
 public:
  ReconAborted(const std::string& what, ReconResult partial)
      : NumericalError(what), partial_(std::move(partial)) {}
  const ReconResult& partial() const noexcept { return partial_; }

 private:
  ReconResult partial_;
};

namespace detail {

struct Fidelity1D {
  Fidelity kind;
  double eps;

  double value(double f, double m) const {
    const double d = m - f;
    return kind == Fidelity::l2 ? 0.5 * d * d : std::sqrt(d * d + eps * eps);
  }
  /// Derivative with respect to the model value m.
  double slope(double f, double m) const {
    const double d = m - f;
    return kind == Fidelity::l2 ? d : d / std::sqrt(d * d + eps * eps);
  }
};

/// Forward operator of a stack: per-LED band-limited fields g_l = F^-1 M_l F u
/// with smoothed moduli, optionally mixed by a multiplex matrix.
class StackOperator {
 public:
  StackOperator(const MeasurementStack& stack, Extent u_extent) {
    require_same_extent(u_extent, stack.extent, "reconstruction");
    if (stack.channels.empty()) return;
    for (const auto& ch : stack.channels) {
      require_same_extent(ch.extent(), stack.extent, "stack channel");
    }
    masks_ = make_pupil_masks(stack.meta.grid, stack.extent);
    const int expected = stack.multiplexed() ? stack.meta.multiplex->rows() : stack.meta.grid.count();
    if (stack.multiplexed() && stack.meta.multiplex->cols() != stack.meta.grid.count()) {
      throw ConfigError("multiplex matrix columns do not match the stack's LED grid");
    }
    if (stack.count() != expected) {
      throw ConfigError("stack has " + std::to_string(stack.count()) +
                        " channels but its metadata implies " + std::to_string(expected));
    }
    if (stack.multiplexed()) beta_ = stack.meta.multiplex;
  }

  bool empty() const noexcept { return masks_.empty(); }

  struct Evaluation {
    std::vector<ComplexField> fields;  // g_l
    std::vector<RealImage> moduli;     // m_l = sqrt(|g_l|^2 + eps^2)
  };

  Evaluation evaluate(const RealImage& u, double eps_abs) const {
    Evaluation ev;
    if (empty()) return ev;
    const ComplexField spectrum = fft2(to_complex(u));
    const double eps2 = eps_abs * eps_abs;
    ev.fields.reserve(masks_.size());
    ev.moduli.reserve(masks_.size());
    for (const auto& mask : masks_) {
      ComplexField masked = spectrum;
      mask.apply(masked);
      ComplexField g = ifft2(masked);
      RealImage m(u.extent());
      for (std::size_t i = 0; i < g.size(); ++i) m[i] = std::sqrt(std::norm(g[i]) + eps2);
      ev.fields.push_back(std::move(g));
      ev.moduli.push_back(std::move(m));
    }
    return ev;
  }

  /// Model prediction for stack channel k.
  RealImage predict(const Evaluation& ev, int k) const {
    if (!beta_) return ev.moduli[static_cast<std::size_t>(k)];
    RealImage out(ev.moduli.front().extent(), 0.0);
    for (int l = 0; l < beta_->cols(); ++l) {
      const double w = (*beta_)(k, l);
      if (w == 0.0) continue;
      const auto& m = ev.moduli[static_cast<std::size_t>(l)];
      for (std::size_t i = 0; i < out.size(); ++i) out[i] += w * m[i];
    }
    return out;
  }

  /// Per-LED weights dE/dm_l from per-channel residual slopes dE/dh_k.
  std::vector<RealImage> led_weights(std::vector<RealImage> channel_slopes) const {
    if (!beta_) return channel_slopes;
    std::vector<RealImage> out;
    out.reserve(masks_.size());
    const Extent e = channel_slopes.front().extent();
    for (int l = 0; l < beta_->cols(); ++l) {
      RealImage w(e, 0.0);
      for (int k = 0; k < beta_->rows(); ++k) {
        const double b = (*beta_)(k, l);
        if (b == 0.0) continue;
        const auto& s = channel_slopes[static_cast<std::size_t>(k)];
        for (std::size_t i = 0; i < w.size(); ++i) w[i] += b * s[i];
      }
      out.push_back(std::move(w));
    }
    return out;
  }

  /// Re( sum_l F^-1 M_l F (w_l g_l / m_l) ): the chain rule through the
  /// smoothed modulus and the self-adjoint band-limiting operator.
  RealImage backproject(const Evaluation& ev, const std::vector<RealImage>& weights) const {
    const Extent e = ev.fields.front().extent();
    ComplexField accum(e, 0.0);
    for (std::size_t l = 0; l < masks_.size(); ++l) {
      ComplexField v(e);
      const auto& g = ev.fields[l];
      const auto& m = ev.moduli[l];
      const auto& w = weights[l];
      for (std::size_t i = 0; i < v.size(); ++i) v[i] = g[i] * (w[i] / m[i]);
      ComplexField spec = fft2(v);
      const auto& support = masks_[l].support();
      for (std::size_t i = 0; i < spec.size(); ++i) {
        if (support[i] != 0) accum[i] += spec[i];
      }
    }
    const ComplexField back = ifft2(accum);
    RealImage out(e);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = back[i].real();
    return out;
  }

 private:
  std::vector<PupilMask> masks_;
  std::optional<MultiplexMatrix> beta_;
};

struct EnergyAndGradient {
  double energy = 0.0;
  std::optional<RealImage> gradient;
};

inline EnergyAndGradient data_term(const RealImage& u, const MeasurementStack& stack,
                                   const StackOperator& op, const ReconSettings& s,
                                   bool with_gradient) {
  EnergyAndGradient out;
  if (op.empty()) {
    if (with_gradient) out.gradient = RealImage(u.extent(), 0.0);
    return out;
  }
  const Fidelity1D h{s.fidelity, s.eps_fid};
  const auto ev = op.evaluate(u, s.eps_abs);
  std::vector<RealImage> slopes;
  if (with_gradient) slopes.reserve(stack.channels.size());
  for (int k = 0; k < stack.count(); ++k) {
    const RealImage model = op.predict(ev, k);
    const RealImage& f = stack.channels[static_cast<std::size_t>(k)];
    RealImage slope(u.extent());
    for (std::size_t i = 0; i < model.size(); ++i) {
      out.energy += h.value(f[i], model[i]);
      if (with_gradient) slope[i] = h.slope(f[i], model[i]);
    }
    if (with_gradient) slopes.push_back(std::move(slope));
  }
  if (with_gradient) out.gradient = op.backproject(ev, op.led_weights(std::move(slopes)));
  return out;
}

inline EnergyAndGradient total_energy(const RealImage& u, const MeasurementStack& stack,
                                      const StackOperator& op, const ReconSettings& s,
                                      bool with_gradient) {
  EnergyAndGradient out = data_term(u, stack, op, s, with_gradient);
  if (s.alpha > 0.0) {
    out.energy += s.alpha * tv(u, s.eps_abs);
    if (with_gradient) {
      const RealImage tg = tv_gradient(u, s.eps_abs);
      for (std::size_t i = 0; i < tg.size(); ++i) (*out.gradient)[i] += s.alpha * tg[i];
    }
  }
  return out;
}

inline RealImage projected_step(const RealImage& u, const RealImage& grad, double step) {
  RealImage out(u.extent());
  for (std::size_t i = 0; i < u.size(); ++i) out[i] = std::max(0.0, u[i] - step * grad[i]);
  return out;
}

}  // namespace detail

/// Sum over channels of H(f_k, model_k), with the modulus smoothed by eps_abs.
inline double data_energy(const RealImage& u, const MeasurementStack& stack,
                          const ReconSettings& settings) {
  const detail::StackOperator op(stack, u.extent());
  return detail::data_term(u, stack, op, settings, false).energy;
}

/// data_energy + alpha * tv.
inline double energy(const RealImage& u, const MeasurementStack& stack,
                     const ReconSettings& settings) {
  const detail::StackOperator op(stack, u.extent());
  return detail::total_energy(u, stack, op, settings, false).energy;
}

/// Gradient of `energy` with respect to the real image u.
inline RealImage energy_gradient(const RealImage& u, const MeasurementStack& stack,
                                 const ReconSettings& settings) {
  const detail::StackOperator op(stack, u.extent());
  return *detail::total_energy(u, stack, op, settings, true).gradient;
}

/// Starting point for `reconstruct`. For multiplexed stacks the on-axis image
/// is not measured; the cc_measurement start then uses the channel mean
/// divided by the mean row sum of the multiplex matrix.
inline RealImage initial_estimate(const MeasurementStack& stack, InitKind init) {
  if (init == InitKind::zeros) return RealImage(stack.extent, 0.0);
  if (stack.channels.empty()) {
    throw ConfigError("cc_measurement initialization needs a non-empty stack");
  }
  if (!stack.multiplexed()) return stack.on_axis();
  const auto& beta = *stack.meta.multiplex;
  double weight = 0.0;
  for (double w : beta.weights()) weight += w;
  weight /= beta.rows();
  RealImage u(stack.extent, 0.0);
  if (weight <= 0.0) return u;
  for (const auto& ch : stack.channels) {
    for (std::size_t i = 0; i < u.size(); ++i) u[i] += ch[i];
  }
  for (double& v : u) v /= (weight * stack.count());
  return u;
}

/// Projected gradient descent on energy(). `initial` overrides settings.init.
inline ReconResult reconstruct(const MeasurementStack& stack, const ReconSettings& settings,
                               std::optional<RealImage> initial = std::nullopt) {
  settings.validate();
  ReconResult result;
  result.settings = settings;
  result.energy_trace.reserve(static_cast<std::size_t>(settings.iterations));

  RealImage u = initial ? std::move(*initial) : initial_estimate(stack, settings.init);
  require_same_extent(u.extent(), stack.extent, "reconstruct initial estimate");
  for (double& v : u) v = std::max(0.0, v);

  const detail::StackOperator op(stack, u.extent());
  auto abort = [&](const std::string& why) {
    result.estimate = u;
    throw ReconAborted("reconstruct: " + why + " after " +
                           std::to_string(result.energy_trace.size()) + " iterations",
                       result);
  };

  double current = detail::total_energy(u, stack, op, settings, false).energy;
  if (!std::isfinite(current)) abort("initial energy is not finite");

  // Backtracking starts each iteration from twice the last accepted step,
  // capped at the configured step, and halves until the energy does not rise.
  constexpr int kMaxHalvings = 30;
  double trial_step = settings.step;
  for (int it = 0; it < settings.iterations; ++it) {
    const RealImage grad = *detail::total_energy(u, stack, op, settings, true).gradient;
    if (!is_finite(grad)) abort("gradient is not finite");

    if (!settings.backtracking) {
      u = detail::projected_step(u, grad, settings.step);
      current = detail::total_energy(u, stack, op, settings, false).energy;
      if (!std::isfinite(current)) abort("energy is not finite");
      result.energy_trace.push_back(current);
      continue;
    }

    bool accepted = false;
    double t = trial_step;
    for (int halving = 0; halving <= kMaxHalvings; ++halving, t *= 0.5) {
      RealImage candidate = detail::projected_step(u, grad, t);
      const double e = detail::total_energy(candidate, stack, op, settings, false).energy;
      if (std::isfinite(e) && e <= current) {
        u = std::move(candidate);
        current = e;
        accepted = true;
        break;
      }
    }
    result.energy_trace.push_back(current);
    if (!accepted) {
      result.stalled = true;
      break;
    }
    trial_step = std::min(settings.step, 2.0 * t);
  }

  result.estimate = std::move(u);
  return result;
}

}  // namespace fpm
