// SPDX-License-Identifier: Apache-2.0
//
// Causal NLL and the anchored preference objective (APO-down) on a tabular
// toy policy:
//
//   r(x, F, S) = beta * (log pi_theta(S | x, F) - log pi_ref(S | x, F))
//   L = mean_batch[ sigmoid(r_w) - sigmoid(r_w - r_l) ]
//
// The batch loss/gradient kernel is OpenMP-parallel over tuples with a
// fixed-order reduction; serial:: holds the direct reference version.
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "vocalplan/dataset.hpp"
#include "vocalplan/errors.hpp"

namespace vocalplan {

/// Next-token logits indexed by the previous `context_length` tokens.
/// Positions before the start of a sequence read as a dedicated START symbol.
class ToyPolicy {
 public:
  ToyPolicy(std::size_t vocab_size, std::size_t context_length = 1);

  /// Logits drawn i.i.d. from N(0, scale^2).
  static ToyPolicy random(std::size_t vocab_size, std::size_t context_length, std::uint64_t seed,
                          double scale = 1.0);

  std::size_t vocab_size() const noexcept { return vocab_; }
  std::size_t context_length() const noexcept { return order_; }
  std::size_t context_count() const noexcept { return contexts_; }

  /// Context key for predicting sequence[position].
  std::size_t context_key(std::span<const TokenId> sequence, std::size_t position) const;

  std::span<double> logits(std::size_t context) {
    return {params_.data() + context * vocab_, vocab_};
  }
  std::span<const double> logits(std::size_t context) const {
    return {params_.data() + context * vocab_, vocab_};
  }
  double log_normalizer(std::size_t context) const;

  std::vector<double>& parameters() noexcept { return params_; }
  const std::vector<double>& parameters() const noexcept { return params_; }

  /// Throws InputError if any token is outside the vocabulary.
  void check_tokens(std::span<const TokenId> tokens) const;

  bool operator==(const ToyPolicy&) const = default;

 private:
  std::size_t vocab_;
  std::size_t order_;
  std::size_t contexts_;
  std::vector<double> params_;
};

struct ApoConfig {
  double beta = 0.1;
  double learning_rate = 0.5;
  std::size_t epochs = 1;
  void validate() const;
};

/// Training produced a non-finite loss.
class NonFiniteLossError : public Error {
 public:
  NonFiniteLossError(std::size_t step, double value);
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

double sigmoid(double x);

/// log pi(target | prefix), summed over target positions.
double sequence_logprob(const ToyPolicy& policy, std::span<const TokenId> prefix,
                        std::span<const TokenId> target);

/// Mean -log pi(y_i | y_<i) over positions whose loss_mask is set.
/// Position 0 never contributes.
double nll_loss(const ToyPolicy& policy, const TokenSequence& sequence);

/// Gradient of the mask-weighted mean NLL over a batch (each position counts once).
std::vector<double> nll_grad(const ToyPolicy& policy, std::span<const TokenSequence> batch);
double nll_loss(const ToyPolicy& policy, std::span<const TokenSequence> batch);

double implicit_reward(const ToyPolicy& theta, const ToyPolicy& ref, std::span<const TokenId> prefix,
                       std::span<const TokenId> target, double beta);

struct ApoEvaluation {
  double loss = 0.0;
  std::vector<double> gradient;  ///< aligned with ToyPolicy::parameters()
};

double apo_down_loss(const ToyPolicy& theta, const ToyPolicy& ref,
                     std::span<const PreferenceTuple> batch, double beta);
std::vector<double> apo_down_grad(const ToyPolicy& theta, const ToyPolicy& ref,
                                  std::span<const PreferenceTuple> batch, double beta);
ApoEvaluation apo_down_evaluate(const ToyPolicy& theta, const ToyPolicy& ref,
                                std::span<const PreferenceTuple> batch, double beta);

namespace serial {
ApoEvaluation apo_down_evaluate(const ToyPolicy& theta, const ToyPolicy& ref,
                                std::span<const PreferenceTuple> batch, double beta);
}  // namespace serial

struct ApoTrainResult {
  ToyPolicy policy;
  /// losses[k] is the batch loss after k updates (epochs + 1 entries).
  std::vector<double> losses;
};

/// Full-batch gradient descent, one update per epoch.
ApoTrainResult train_apo(const ToyPolicy& theta, const ToyPolicy& ref,
                         std::span<const PreferenceTuple> data, const ApoConfig& config);

/// Full-batch gradient descent on the NLL objective; returns per-step losses.
std::vector<double> train_nll(ToyPolicy& policy, std::span<const TokenSequence> data,
                              double learning_rate, std::size_t steps);

/// Mean over tuples of log pi(S_w | prefix) - log pi(S_l | prefix).
double preference_margin(const ToyPolicy& policy, std::span<const PreferenceTuple> data);

}  // namespace vocalplan
