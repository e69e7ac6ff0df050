// SPDX-License-Identifier: Apache-2.0
#include "vocalplan/apo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <fmt/format.h>

namespace vocalplan {

namespace {

constexpr std::size_t kMaxParameters = std::size_t{1} << 26;

std::size_t checked_context_count(std::size_t vocab, std::size_t order) {
  if (vocab < 2) throw InputError(fmt::format("toy policy needs vocab_size >= 2, got {}", vocab));
  std::size_t count = 1;
  for (std::size_t i = 0; i < order; ++i) {
    if (count > kMaxParameters / (vocab + 1)) {
      throw InputError(fmt::format("toy policy with vocab {} and context {} is too large", vocab, order));
    }
    count *= vocab + 1;
  }
  if (count > kMaxParameters / vocab) {
    throw InputError(fmt::format("toy policy with vocab {} and context {} is too large", vocab, order));
  }
  return count;
}

double log_sum_exp(std::span<const double> row) {
  const double peak = *std::max_element(row.begin(), row.end());
  double sum = 0.0;
  for (double v : row) sum += std::exp(v - peak);
  return peak + std::log(sum);
}

}  // namespace

ToyPolicy::ToyPolicy(std::size_t vocab_size, std::size_t context_length)
    : vocab_(vocab_size),
      order_(context_length),
      contexts_(checked_context_count(vocab_size, context_length)),
      params_(contexts_ * vocab_, 0.0) {}

ToyPolicy ToyPolicy::random(std::size_t vocab_size, std::size_t context_length, std::uint64_t seed,
                            double scale) {
  ToyPolicy policy(vocab_size, context_length);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, scale);
  for (auto& p : policy.params_) p = normal(rng);
  return policy;
}

std::size_t ToyPolicy::context_key(std::span<const TokenId> sequence, std::size_t position) const {
  std::size_t key = 0;
  std::size_t radix = 1;
  for (std::size_t back = 1; back <= order_; ++back) {
    const std::size_t symbol = position >= back ? sequence[position - back] : vocab_;
    key += symbol * radix;
    radix *= vocab_ + 1;
  }
  return key;
}

double ToyPolicy::log_normalizer(std::size_t context) const { return log_sum_exp(logits(context)); }

void ToyPolicy::check_tokens(std::span<const TokenId> tokens) const {
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] >= vocab_) {
      throw InputError(fmt::format("token {} at position {} is outside the vocabulary of size {}",
                                   tokens[i], i, vocab_));
    }
  }
}

void ApoConfig::validate() const {
  if (!(beta > 0.0) || !std::isfinite(beta)) throw InputError(fmt::format("beta must be positive, got {}", beta));
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw InputError(fmt::format("learning rate must be non-negative, got {}", learning_rate));
  }
}

NonFiniteLossError::NonFiniteLossError(std::size_t step, double value)
    : Error(fmt::format("non-finite loss {} at step {}", value, step)), step_(step) {}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

namespace {

std::vector<TokenId> concat(std::span<const TokenId> a, std::span<const TokenId> b) {
  std::vector<TokenId> out;
  out.reserve(a.size() + b.size());
  out.insert(out.end(), a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

double logprob_at(const ToyPolicy& policy, std::span<const TokenId> seq, std::size_t i) {
  const std::size_t ctx = policy.context_key(seq, i);
  return policy.logits(ctx)[seq[i]] - policy.log_normalizer(ctx);
}

// Adds coef * d/dtheta log pi(seq[i] | context) for every i in [from, seq.size()).
void accumulate_logprob_grad(const ToyPolicy& policy, std::span<const TokenId> seq,
                             std::size_t from, double coef, std::vector<double>& grad) {
  const std::size_t v = policy.vocab_size();
  for (std::size_t i = from; i < seq.size(); ++i) {
    const std::size_t ctx = policy.context_key(seq, i);
    const auto row = policy.logits(ctx);
    const double lse = policy.log_normalizer(ctx);
    double* g = grad.data() + ctx * v;
    for (std::size_t k = 0; k < v; ++k) g[k] -= coef * std::exp(row[k] - lse);
    g[seq[i]] += coef;
  }
}

void check_batch(const ToyPolicy& theta, const ToyPolicy& ref, std::span<const PreferenceTuple> batch,
                 double beta) {
  if (batch.empty()) throw InputError("APO batch is empty");
  if (!(beta > 0.0)) throw InputError(fmt::format("beta must be positive, got {}", beta));
  if (theta.vocab_size() != ref.vocab_size() || theta.context_length() != ref.context_length()) {
    throw InputError("theta and reference policies differ in shape");
  }
}

struct TupleTerms {
  double loss = 0.0;
  double coef_chosen = 0.0;    // dL_j / d log pi_theta(S_w)
  double coef_rejected = 0.0;  // dL_j / d log pi_theta(S_l)
};

TupleTerms tuple_terms(const ToyPolicy& theta, const ToyPolicy& ref, const PreferenceTuple& t,
                       double beta) {
  const auto prefix = t.prefix();
  const double r_w = implicit_reward(theta, ref, prefix, t.chosen, beta);
  const double r_l = implicit_reward(theta, ref, prefix, t.rejected, beta);
  const double s_w = sigmoid(r_w);
  const double s_m = sigmoid(r_w - r_l);
  TupleTerms out;
  out.loss = s_w - s_m;
  const double d_anchor = s_w * (1.0 - s_w);
  const double d_margin = s_m * (1.0 - s_m);
  out.coef_chosen = beta * (d_anchor - d_margin);
  out.coef_rejected = beta * d_margin;
  return out;
}

}  // namespace

double sequence_logprob(const ToyPolicy& policy, std::span<const TokenId> prefix,
                        std::span<const TokenId> target) {
  if (target.empty()) throw InputError("sequence_logprob: empty target");
  policy.check_tokens(prefix);
  policy.check_tokens(target);
  const auto seq = concat(prefix, target);
  double total = 0.0;
  for (std::size_t i = prefix.size(); i < seq.size(); ++i) total += logprob_at(policy, seq, i);
  return total;
}

double nll_loss(const ToyPolicy& policy, const TokenSequence& sequence) {
  return nll_loss(policy, std::span<const TokenSequence>(&sequence, 1));
}

double nll_loss(const ToyPolicy& policy, std::span<const TokenSequence> batch) {
  double total = 0.0;
  std::size_t count = 0;
  for (const auto& seq : batch) {
    if (seq.size() < 2) throw InputError("nll_loss: sequence needs at least two tokens");
    if (seq.loss_mask.size() != seq.size()) throw InputError("nll_loss: mask length mismatch");
    policy.check_tokens(seq.tokens);
    for (std::size_t i = 1; i < seq.size(); ++i) {
      if (!seq.loss_mask[i]) continue;
      total -= logprob_at(policy, seq.tokens, i);
      ++count;
    }
  }
  if (count == 0) throw InputError("nll_loss: loss mask selects no positions");
  return total / static_cast<double>(count);
}

std::vector<double> nll_grad(const ToyPolicy& policy, std::span<const TokenSequence> batch) {
  std::size_t count = 0;
  for (const auto& seq : batch) {
    if (seq.size() < 2) throw InputError("nll_grad: sequence needs at least two tokens");
    if (seq.loss_mask.size() != seq.size()) throw InputError("nll_grad: mask length mismatch");
    policy.check_tokens(seq.tokens);
    for (std::size_t i = 1; i < seq.size(); ++i) count += seq.loss_mask[i] ? 1 : 0;
  }
  if (count == 0) throw InputError("nll_grad: loss mask selects no positions");
  std::vector<double> grad(policy.parameters().size(), 0.0);
  const double coef = -1.0 / static_cast<double>(count);
  const std::size_t v = policy.vocab_size();
  for (const auto& seq : batch) {
    for (std::size_t i = 1; i < seq.size(); ++i) {
      if (!seq.loss_mask[i]) continue;
      const std::size_t ctx = policy.context_key(seq.tokens, i);
      const auto row = policy.logits(ctx);
      const double lse = policy.log_normalizer(ctx);
      double* g = grad.data() + ctx * v;
      for (std::size_t k = 0; k < v; ++k) g[k] -= coef * std::exp(row[k] - lse);
      g[seq.tokens[i]] += coef;
    }
  }
  return grad;
}

double implicit_reward(const ToyPolicy& theta, const ToyPolicy& ref, std::span<const TokenId> prefix,
                       std::span<const TokenId> target, double beta) {
  if (!(beta > 0.0)) throw InputError(fmt::format("beta must be positive, got {}", beta));
  return beta * (sequence_logprob(theta, prefix, target) - sequence_logprob(ref, prefix, target));
}

ApoEvaluation apo_down_evaluate(const ToyPolicy& theta, const ToyPolicy& ref,
                                std::span<const PreferenceTuple> batch, double beta) {
  check_batch(theta, ref, batch, beta);
  for (const auto& t : batch) {
    theta.check_tokens(t.prefix());
    theta.check_tokens(t.chosen);
    theta.check_tokens(t.rejected);
  }

  const auto n = static_cast<std::ptrdiff_t>(batch.size());
  std::vector<TupleTerms> terms(batch.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t j = 0; j < n; ++j) {
    terms[static_cast<std::size_t>(j)] = tuple_terms(theta, ref, batch[static_cast<std::size_t>(j)], beta);
  }

  // Fixed-order reduction into per-row target weights and row totals; the
  // softmax part is then applied row by row in parallel.
  const std::size_t v = theta.vocab_size();
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  std::vector<double> target_weight(theta.parameters().size(), 0.0);
  std::vector<double> row_weight(theta.context_count(), 0.0);
  std::vector<unsigned char> touched(theta.context_count(), 0);
  ApoEvaluation out;
  for (std::size_t j = 0; j < batch.size(); ++j) {
    out.loss += terms[j].loss;
    const auto prefix = batch[j].prefix();
    for (const auto* part : {&batch[j].chosen, &batch[j].rejected}) {
      const double coef = (part == &batch[j].chosen ? terms[j].coef_chosen : terms[j].coef_rejected) * inv_n;
      const auto seq = concat(prefix, *part);
      for (std::size_t i = prefix.size(); i < seq.size(); ++i) {
        const std::size_t ctx = theta.context_key(seq, i);
        target_weight[ctx * v + seq[i]] += coef;
        row_weight[ctx] += coef;
        touched[ctx] = 1;
      }
    }
  }
  out.loss *= inv_n;

  out.gradient.assign(theta.parameters().size(), 0.0);
  const auto contexts = static_cast<std::ptrdiff_t>(theta.context_count());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < contexts; ++c) {
    const auto ctx = static_cast<std::size_t>(c);
    if (!touched[ctx]) continue;
    const auto row = theta.logits(ctx);
    const double lse = theta.log_normalizer(ctx);
    double* g = out.gradient.data() + ctx * v;
    const double* w = target_weight.data() + ctx * v;
    for (std::size_t k = 0; k < v; ++k) g[k] = w[k] - row_weight[ctx] * std::exp(row[k] - lse);
  }
  return out;
}

namespace serial {

ApoEvaluation apo_down_evaluate(const ToyPolicy& theta, const ToyPolicy& ref,
                                std::span<const PreferenceTuple> batch, double beta) {
  check_batch(theta, ref, batch, beta);
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  ApoEvaluation out;
  out.gradient.assign(theta.parameters().size(), 0.0);
  for (const auto& t : batch) {
    const TupleTerms terms = tuple_terms(theta, ref, t, beta);
    out.loss += terms.loss * inv_n;
    const auto prefix = t.prefix();
    accumulate_logprob_grad(theta, concat(prefix, t.chosen), prefix.size(), terms.coef_chosen * inv_n,
                            out.gradient);
    accumulate_logprob_grad(theta, concat(prefix, t.rejected), prefix.size(),
                            terms.coef_rejected * inv_n, out.gradient);
  }
  return out;
}

}  // namespace serial

double apo_down_loss(const ToyPolicy& theta, const ToyPolicy& ref,
                     std::span<const PreferenceTuple> batch, double beta) {
  check_batch(theta, ref, batch, beta);
  double total = 0.0;
  for (const auto& t : batch) total += tuple_terms(theta, ref, t, beta).loss;
  return total / static_cast<double>(batch.size());
}

std::vector<double> apo_down_grad(const ToyPolicy& theta, const ToyPolicy& ref,
                                  std::span<const PreferenceTuple> batch, double beta) {
  return apo_down_evaluate(theta, ref, batch, beta).gradient;
}

ApoTrainResult train_apo(const ToyPolicy& theta, const ToyPolicy& ref,
                         std::span<const PreferenceTuple> data, const ApoConfig& config) {
  config.validate();
  if (data.empty()) throw InputError("train_apo: no preference tuples");
  ApoTrainResult result{theta, {}};
  result.losses.reserve(config.epochs + 1);
  auto& params = result.policy.parameters();
  for (std::size_t step = 0;; ++step) {
    auto eval = apo_down_evaluate(result.policy, ref, data, config.beta);
    if (!std::isfinite(eval.loss)) throw NonFiniteLossError(step, eval.loss);
    result.losses.push_back(eval.loss);
    if (step == config.epochs) break;
    for (std::size_t k = 0; k < params.size(); ++k) params[k] -= config.learning_rate * eval.gradient[k];
  }
  return result;
}

std::vector<double> train_nll(ToyPolicy& policy, std::span<const TokenSequence> data,
                              double learning_rate, std::size_t steps) {
  std::vector<double> losses;
  losses.reserve(steps + 1);
  auto& params = policy.parameters();
  for (std::size_t step = 0;; ++step) {
    const double loss = nll_loss(policy, data);
    if (!std::isfinite(loss)) throw NonFiniteLossError(step, loss);
    losses.push_back(loss);
    if (step == steps) break;
    const auto grad = nll_grad(policy, data);
    for (std::size_t k = 0; k < params.size(); ++k) params[k] -= learning_rate * grad[k];
  }
  return losses;
}

double preference_margin(const ToyPolicy& policy, std::span<const PreferenceTuple> data) {
  if (data.empty()) throw InputError("preference_margin: no tuples");
  double total = 0.0;
  for (const auto& t : data) {
    const auto prefix = t.prefix();
    total += sequence_logprob(policy, prefix, t.chosen) - sequence_logprob(policy, prefix, t.rejected);
  }
  return total / static_cast<double>(data.size());
}

}  // namespace vocalplan
