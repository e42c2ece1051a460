// Copyright 2026 The kdctc Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef KDCTC_DISTILL_DISTILL_HPP
#define KDCTC_DISTILL_DISTILL_HPP

// Teacher-student objectives. The student and teacher are both softened with
// the same temperature; the CTC branch always sees the untempered softmax.
// No T^2 rescaling is applied to the distillation gradient.

#include <cmath>
#include <string>

#include <nlohmann/json.hpp>

#include "kdctc/ctc/alphabet.hpp"
#include "kdctc/ctc/ctc_loss.hpp"
#include "kdctc/numcore/errors.hpp"
#include "kdctc/numcore/math.hpp"
#include "kdctc/numcore/tensor.hpp"

namespace kdctc::distill {

struct DistillConfig {
  double lambda = 0.9;
  double temperature = 4.0;

  void validate() const {
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("distill: lambda must be in [0,1]");
    if (!(temperature > 0.0)) throw ConfigError("distill: temperature must be > 0");
  }

  nlohmann::json to_json() const { return {{"lambda", lambda}, {"temperature", temperature}}; }
  static DistillConfig from_json(const nlohmann::json& j) {
    DistillConfig c{j.value("lambda", 0.9), j.value("temperature", 4.0)};
    c.validate();
    return c;
  }
};

/// Frozen teacher posteriors at temperature T for one utterance.
struct SoftTargets {
  Tensor probs;  // N x |S|, rows stochastic
  std::string teacher_id;
  double temperature = 1.0;
};

inline Tensor tempered_softmax(const Tensor& logits, double temperature) {
  if (!(temperature > 0.0)) throw ConfigError("tempered_softmax: T must be > 0");
  for (double v : logits.values())
    if (!std::isfinite(v)) throw NumericError("tempered_softmax: non-finite logit");
  Tensor out = logits;
  for (std::size_t t = 0; t < out.rows(); ++t) softmax_inplace(out.row(t), 1.0 / temperature);
  return out;
}

/// Sum over frames of the teacher distribution's entropy.
inline double target_entropy(const SoftTargets& targets) {
  double h = 0.0;
  for (double p : targets.probs.values())
    if (p > 0.0) h -= p * std::log(p);
  return h;
}

/// Frame-summed cross-entropy from teacher to tempered student, with its
/// gradient (O' - O'_ref) / T w.r.t. the student logits.
inline ctc::LossAndGrad ce_to_teacher(const Tensor& student_logits, const SoftTargets& targets,
                                      double temperature) {
  if (targets.temperature != temperature) {
    throw ConfigError("ce_to_teacher: targets were made at T=" +
                      std::to_string(targets.temperature) + ", requested T=" +
                      std::to_string(temperature));
  }
  if (targets.probs.rank() != 2 || targets.probs.rows() != student_logits.rows()) {
    throw AlignmentError("ce_to_teacher: teacher has " +
                         std::to_string(targets.probs.rank() == 2 ? targets.probs.rows() : 0) +
                         " frames, student has " + std::to_string(student_logits.rows()));
  }
  if (targets.probs.cols() != student_logits.cols()) {
    throw ShapeError("ce_to_teacher: symbol count mismatch");
  }
  const double inv_t = 1.0 / temperature;
  ctc::LossAndGrad out{0.0, Tensor::matrix(student_logits.rows(), student_logits.cols())};
  for (std::size_t t = 0; t < student_logits.rows(); ++t) {
    const auto z = student_logits.row(t);
    double m = kNegInf;
    for (double v : z) m = std::max(m, v * inv_t);
    double s = 0.0;
    for (double v : z) s += std::exp(v * inv_t - m);
    const double lse = m + std::log(s);
    const auto ref = targets.probs.row(t);
    auto g = out.grad.row(t);
    for (std::size_t k = 0; k < z.size(); ++k) {
      const double log_q = z[k] * inv_t - lse;
      if (ref[k] > 0.0) out.loss -= ref[k] * log_q;
      g[k] = (std::exp(log_q) - ref[k]) * inv_t;
    }
  }
  return out;
}

/// lambda * CE(teacher, student) + (1 - lambda) * CTC(label).
inline ctc::LossAndGrad combined_loss(const Tensor& student_logits, const SoftTargets& targets,
                                      const ctc::LabelSequence& label, int blank,
                                      const DistillConfig& cfg) {
  cfg.validate();
  const auto ce = ce_to_teacher(student_logits, targets, cfg.temperature);
  const auto ctc = ctc::ctc_loss_grad(student_logits, label, blank);
  const double l = cfg.lambda, r = 1.0 - cfg.lambda;
  ctc::LossAndGrad out{l * ce.loss + r * ctc.loss, Tensor::matrix(ce.grad.rows(), ce.grad.cols())};
  for (std::size_t i = 0; i < out.grad.size(); ++i) out.grad[i] = l * ce.grad[i] + r * ctc.grad[i];
  return out;
}

/// lambda * KL(teacher || student) + (1 - lambda) * CTC. KL is the
/// cross-entropy minus the (constant) teacher entropy, so the gradient is
/// exactly that of combined_loss.
inline ctc::LossAndGrad kl_adaptation_loss(const Tensor& student_logits, const SoftTargets& targets,
                                           const ctc::LabelSequence& label, int blank,
                                           const DistillConfig& cfg) {
  auto out = combined_loss(student_logits, targets, label, blank, cfg);
  out.loss -= cfg.lambda * target_entropy(targets);
  return out;
}

inline SoftTargets make_soft_targets(const Tensor& teacher_logits, double temperature,
                                     std::string teacher_id) {
  return {tempered_softmax(teacher_logits, temperature), std::move(teacher_id), temperature};
}

}  // namespace kdctc::distill

#endif  // KDCTC_DISTILL_DISTILL_HPP
