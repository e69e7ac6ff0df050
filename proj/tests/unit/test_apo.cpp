// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <omp.h>

#include "doctest.h"
#include "oracles.hpp"
#include "vocalplan/apo.hpp"
#include "vocalplan/errors.hpp"

using namespace vocalplan;
namespace vt = vocalplan::testing;

namespace {

std::vector<TokenId> random_tokens(std::mt19937_64& rng, std::size_t vocab, std::size_t lo, std::size_t hi) {
  std::vector<TokenId> out(std::uniform_int_distribution<std::size_t>(lo, hi)(rng));
  for (auto& t : out) t = static_cast<TokenId>(std::uniform_int_distribution<std::size_t>(0, vocab - 1)(rng));
  return out;
}

/// Random tuple for a toy of the given vocab (>= 3 so BOS/SEP fit).
PreferenceTuple random_tuple(std::mt19937_64& rng, std::size_t vocab, std::size_t max_len) {
  PreferenceTuple t;
  t.text = "toy";
  t.text_tokens = random_tokens(rng, vocab, 1, 2);
  t.plan = random_tokens(rng, vocab, 1, 2);
  t.chosen = random_tokens(rng, vocab, 1, max_len);
  t.rejected = random_tokens(rng, vocab, 1, max_len);
  return t;
}

/// Context-2 (SEP) row set to the given probabilities; every other row zero.
ToyPolicy sep_row_policy(std::size_t vocab, const std::vector<double>& probs) {
  ToyPolicy p(vocab, 1);
  auto row = p.logits(vocab::kSep);
  for (std::size_t k = 0; k < vocab; ++k) row[k] = std::log(probs[k]);
  return p;
}

PreferenceTuple single_step_tuple(TokenId chosen, std::vector<TokenId> rejected) {
  return PreferenceTuple{"x", {}, {}, {chosen}, std::move(rejected)};
}

}  // namespace

TEST_CASE("toy policy shape and validation") {
  const ToyPolicy p(5, 1);
  CHECK(p.context_count() == 6);
  CHECK(p.parameters().size() == 30);
  CHECK_THROWS_AS(ToyPolicy(1, 1), InputError);
  CHECK_THROWS_AS(ToyPolicy(100000, 3), InputError);
  CHECK_THROWS_AS(p.check_tokens(std::vector<TokenId>{0, 5}), InputError);

  const ToyPolicy q(3, 2);
  CHECK(q.context_count() == 16);
  const std::vector<TokenId> seq = {2, 1, 0};
  CHECK(q.context_key(seq, 0) == 3 + 3 * 4);  // START, START
  CHECK(q.context_key(seq, 1) == 2 + 3 * 4);  // 2, START
  CHECK(q.context_key(seq, 2) == 1 + 2 * 4);  // 1, 2
  CHECK(ToyPolicy::random(4, 1, 9) == ToyPolicy::random(4, 1, 9));
  CHECK_FALSE(ToyPolicy::random(4, 1, 9) == ToyPolicy::random(4, 1, 10));
}

TEST_CASE("sigmoid is stable") {
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(sigmoid(0.2) == doctest::Approx(0.549834).epsilon(1e-6));
  CHECK(sigmoid(-800.0) == 0.0);
  CHECK(sigmoid(800.0) == 1.0);
  CHECK(std::isfinite(sigmoid(-1e308)));
}

TEST_CASE("sequence_logprob examples") {
  const ToyPolicy uniform(4, 1);
  CHECK(sequence_logprob(uniform, std::vector<TokenId>{1}, std::vector<TokenId>{0, 2, 3}) ==
        doctest::Approx(3.0 * std::log(0.25)));
  CHECK(sequence_logprob(uniform, std::vector<TokenId>{1}, std::vector<TokenId>{0, 2, 3}) ==
        doctest::Approx(-4.1589).epsilon(1e-4));

  ToyPolicy peaked(4, 1);
  for (std::size_t c = 0; c < peaked.context_count(); ++c) peaked.logits(c)[2] = 30.0;
  CHECK(std::abs(sequence_logprob(peaked, std::vector<TokenId>{}, std::vector<TokenId>{2, 2})) < 1e-10);

  CHECK_THROWS_AS(sequence_logprob(uniform, std::vector<TokenId>{1}, std::vector<TokenId>{}), InputError);
  CHECK_THROWS_AS(sequence_logprob(uniform, std::vector<TokenId>{1}, std::vector<TokenId>{4}), InputError);
  CHECK_THROWS_AS(sequence_logprob(uniform, std::vector<TokenId>{7}, std::vector<TokenId>{0}), InputError);
}

TEST_CASE("sequence_logprob matches chain-rule enumeration") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t v = std::uniform_int_distribution<std::size_t>(2, 4)(rng);
    const ToyPolicy p = ToyPolicy::random(v, 1, rng(), 1.5);
    std::vector<std::vector<double>> table(v + 1);
    for (std::size_t c = 0; c <= v; ++c) table[c].assign(p.logits(c).begin(), p.logits(c).end());
    const auto prefix = random_tokens(rng, v, 0, 3);
    const auto target = random_tokens(rng, v, 1, 4);
    const double expected = std::log(vt::chain_rule_probability(table, prefix, target));
    CHECK(sequence_logprob(p, prefix, target) == doctest::Approx(expected).epsilon(1e-12).scale(1.0));
  }
}

TEST_CASE("probabilities over all continuations sum to one") {
  const ToyPolicy p = ToyPolicy::random(3, 2, 5, 1.0);
  const std::vector<TokenId> prefix = {1, 2};
  double total = 0.0;
  for (TokenId a = 0; a < 3; ++a)
    for (TokenId b = 0; b < 3; ++b)
      for (TokenId c = 0; c < 3; ++c) total += std::exp(sequence_logprob(p, prefix, std::vector<TokenId>{a, b, c}));
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("nll_loss examples") {
  const ToyPolicy uniform(4, 1);
  TokenSequence s{{1, 0, 3, 2, 2, 3}, {false, true, true, true, true, true}};
  CHECK(nll_loss(uniform, s) == doctest::Approx(std::log(4.0)));

  const ToyPolicy p = ToyPolicy::random(4, 1, 8, 1.0);
  TokenSequence half = s;
  half.loss_mask = {false, true, false, true, false, true};
  auto nlp = [&](std::size_t i) {
    const auto row = p.logits(s.tokens[i - 1]);
    double z = 0.0;
    for (double l : row) z += std::exp(l);
    return -std::log(std::exp(row[s.tokens[i]]) / z);
  };
  CHECK(nll_loss(p, half) == doctest::Approx((nlp(1) + nlp(3) + nlp(5)) / 3.0).epsilon(1e-12));

  TokenSequence none = s;
  none.loss_mask.assign(6, false);
  CHECK_THROWS_AS(nll_loss(p, none), InputError);
  CHECK_THROWS_AS(nll_loss(p, TokenSequence{{1}, {true}}), InputError);
}

TEST_CASE("nll_loss equals an independent per-position recomputation") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t v = std::uniform_int_distribution<std::size_t>(2, 6)(rng);
    const ToyPolicy p = ToyPolicy::random(v, 1, rng(), 2.0);
    TokenSequence s;
    s.tokens = random_tokens(rng, v, 2, 12);
    for (std::size_t i = 0; i < s.size(); ++i) s.loss_mask.push_back(i == 1 || rng() % 2);
    double total = 0.0;
    int count = 0;
    for (std::size_t i = 1; i < s.size(); ++i) {
      if (!s.loss_mask[i]) continue;
      std::vector<double> row(p.logits(s.tokens[i - 1]).begin(), p.logits(s.tokens[i - 1]).end());
      double z = 0.0;
      for (double l : row) z += std::exp(l);
      total -= std::log(std::exp(row[s.tokens[i]]) / z);
      ++count;
    }
    CHECK(nll_loss(p, s) == doctest::Approx(total / count).epsilon(1e-12));
  }
}

TEST_CASE("nll gradient matches finite differences and training lowers the loss") {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t v = std::uniform_int_distribution<std::size_t>(2, 5)(rng);
    ToyPolicy p = ToyPolicy::random(v, 1, rng(), 1.0);
    std::vector<TokenSequence> batch(2);
    for (auto& s : batch) {
      s.tokens = random_tokens(rng, v, 2, 6);
      s.loss_mask.assign(s.size(), true);
      s.loss_mask[0] = false;
    }
    const auto grad = nll_grad(p, batch);
    const auto fd = vt::central_difference(
        [&](const std::vector<double>& x) {
          ToyPolicy q = p;
          q.parameters() = x;
          return nll_loss(q, batch);
        },
        p.parameters(), 1e-5);
    for (std::size_t k = 0; k < grad.size(); ++k) CHECK(std::abs(grad[k] - fd[k]) < 1e-6);

    const auto losses = train_nll(p, batch, 0.5, 20);
    CHECK(losses.size() == 21);
    CHECK(losses.back() < losses.front());
  }
}

TEST_CASE("implicit reward examples") {
  std::mt19937_64 rng(5);
  const ToyPolicy ref = ToyPolicy::random(4, 1, 1, 1.0);
  const std::vector<TokenId> prefix = {1, 3, 2}, target = {0, 3};
  CHECK(implicit_reward(ref, ref, prefix, target, 0.1) == 0.0);

  // Uniform theta against a ref that gives the target 2 nats less.
  const double q = std::log(2.0) + 2.0 / 3.0;
  ToyPolicy skewed(2, 1);
  for (std::size_t c = 0; c < skewed.context_count(); ++c) skewed.logits(c)[1] = std::log(std::exp(q) - 1.0);
  const ToyPolicy flat(2, 1);
  const std::vector<TokenId> zeros = {0, 0, 0};
  CHECK(sequence_logprob(flat, {}, zeros) - sequence_logprob(skewed, {}, zeros) == doctest::Approx(2.0));
  CHECK(implicit_reward(flat, skewed, {}, zeros, 0.1) == doctest::Approx(0.2));
  CHECK(implicit_reward(flat, skewed, {}, zeros, 0.2) == doctest::Approx(2.0 * implicit_reward(flat, skewed, {}, zeros, 0.1)));
  CHECK_THROWS_AS(implicit_reward(flat, skewed, {}, zeros, 0.0), InputError);
}

TEST_CASE("APO-down closed-form cases") {
  const ToyPolicy ref(4, 1);  // uniform: every step has log 1/4
  const std::vector<PreferenceTuple> batch = {single_step_tuple(3, {0})};

  // beta 1: r_w = 0.2 and r_l = -0.1
  const double p3 = 0.25 * std::exp(0.2), p0 = 0.25 * std::exp(-0.1);
  const double rest = (1.0 - p3 - p0) / 2.0;
  const ToyPolicy theta = sep_row_policy(4, {p0, rest, rest, p3});
  CHECK(implicit_reward(theta, ref, batch[0].prefix(), batch[0].chosen, 1.0) == doctest::Approx(0.2));
  CHECK(implicit_reward(theta, ref, batch[0].prefix(), batch[0].rejected, 1.0) == doctest::Approx(-0.1));
  const double loss = apo_down_loss(theta, ref, batch, 1.0);
  CHECK(std::abs(loss - (-0.024609)) <= 1e-6);
  CHECK(std::abs(loss - (sigmoid(0.2) - sigmoid(0.3))) <= 1e-12);

  // beta 5: r_w = 0 and r_l = 5
  const double q0 = 0.25 * std::exp(1.0);
  const double q_rest = (1.0 - 0.25 - q0) / 2.0;
  const ToyPolicy theta2 = sep_row_policy(4, {q0, q_rest, q_rest, 0.25});
  CHECK(std::abs(apo_down_loss(theta2, ref, batch, 5.0) - 0.493307) <= 1e-6);

  CHECK(apo_down_loss(ref, ref, batch, 0.1) == 0.0);
  CHECK_THROWS_AS(apo_down_loss(ref, ref, std::vector<PreferenceTuple>{}, 0.1), InputError);
  CHECK_THROWS_AS(apo_down_loss(ToyPolicy(5, 1), ref, batch, 0.1), InputError);
}

TEST_CASE("APO-down loss is bounded and vanishes at the reference") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t v = std::uniform_int_distribution<std::size_t>(3, 6)(rng);
    const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 3)(rng);
    const double scale = 1.0;
    const ToyPolicy theta = ToyPolicy::random(v, n, rng(), scale);
    const ToyPolicy ref = ToyPolicy::random(v, n, rng(), scale);
    std::vector<PreferenceTuple> batch;
    const std::size_t size = std::uniform_int_distribution<std::size_t>(1, 8)(rng);
    for (std::size_t j = 0; j < size; ++j) batch.push_back(random_tuple(rng, v, 6));
    const double beta = std::uniform_real_distribution<double>(0.01, 5.0)(rng);
    const double loss = apo_down_loss(theta, ref, batch, beta);
    CHECK(loss > -1.0);
    CHECK(loss < 1.0);
    CHECK(apo_down_loss(theta, theta, batch, beta) == 0.0);
    CHECK(apo_down_loss(ref, ref, batch, beta) == 0.0);
  }
}

TEST_CASE("saturated rewards stay finite and within the closed bounds") {
  // With logits this large both sigmoids saturate and the nearest double to
  // the loss may be exactly +-1.
  std::mt19937_64 rng(16);
  for (int trial = 0; trial < 100; ++trial) {
    const ToyPolicy theta = ToyPolicy::random(5, 1, rng(), 40.0);
    const ToyPolicy ref = ToyPolicy::random(5, 1, rng(), 40.0);
    std::vector<PreferenceTuple> batch = {random_tuple(rng, 5, 6), random_tuple(rng, 5, 6)};
    const auto eval = apo_down_evaluate(theta, ref, batch, 5.0);
    CHECK(std::isfinite(eval.loss));
    CHECK(eval.loss >= -1.0);
    CHECK(eval.loss <= 1.0);
    for (double g : eval.gradient) CHECK(std::isfinite(g));
  }
}

TEST_CASE("analytic APO-down gradient matches central differences") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t v = std::uniform_int_distribution<std::size_t>(3, 5)(rng);
    const std::size_t order = trial % 3 == 0 ? 2 : 1;
    const ToyPolicy ref = ToyPolicy::random(v, order, rng(), 1.0);
    const ToyPolicy theta = trial % 5 == 0 ? ref : ToyPolicy::random(v, order, rng(), 1.0);
    std::vector<PreferenceTuple> batch;
    const std::size_t size = std::uniform_int_distribution<std::size_t>(1, 3)(rng);
    for (std::size_t j = 0; j < size; ++j) batch.push_back(random_tuple(rng, v, 6));
    const double beta = std::uniform_real_distribution<double>(0.05, 2.0)(rng);

    const auto grad = apo_down_grad(theta, ref, batch, beta);
    const auto fd = vt::central_difference(
        [&](const std::vector<double>& x) {
          ToyPolicy q = theta;
          q.parameters() = x;
          return apo_down_loss(q, ref, batch, beta);
        },
        theta.parameters(), 1e-5);
    REQUIRE(grad.size() == fd.size());
    double worst = 0.0;
    for (std::size_t k = 0; k < grad.size(); ++k) worst = std::max(worst, std::abs(grad[k] - fd[k]));
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("unused parameters get zero gradient and duplicates average out") {
  std::mt19937_64 rng(8);
  const ToyPolicy ref = ToyPolicy::random(6, 1, 1, 1.0);
  const ToyPolicy theta = ToyPolicy::random(6, 1, 2, 1.0);
  const PreferenceTuple t{"x", {3}, {4}, {3, 4}, {4}};
  const std::vector<PreferenceTuple> one = {t}, two = {t, t};
  const auto g = apo_down_grad(theta, ref, one, 0.5);
  // Contexts reached: SEP (2) and 3. Rows 0, 1, 4, 5 and START never predict targets.
  for (std::size_t ctx : {0u, 1u, 4u, 5u, 6u}) {
    for (std::size_t k = 0; k < 6; ++k) CHECK(g[ctx * 6 + k] == 0.0);
  }
  const auto g2 = apo_down_grad(theta, ref, two, 0.5);
  for (std::size_t k = 0; k < g.size(); ++k) CHECK(g2[k] == doctest::Approx(g[k]).epsilon(1e-14).scale(1e-300));
}

TEST_CASE("raising the rejected log-probability raises the loss") {
  // Chosen [3] is predicted from SEP; rejected [4, 0] also uses context 4,
  // so bumping logit (4 -> 0) changes only log pi(S_l).
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    const ToyPolicy ref = ToyPolicy::random(5, 1, rng(), 1.0);
    ToyPolicy theta = ToyPolicy::random(5, 1, rng(), 1.0);
    const std::vector<PreferenceTuple> batch = {single_step_tuple(3, {4, 0})};
    const auto prefix = batch[0].prefix();
    double last_loss = apo_down_loss(theta, ref, batch, 0.5);
    double last_lp = sequence_logprob(theta, prefix, batch[0].rejected);
    const double chosen_lp = sequence_logprob(theta, prefix, batch[0].chosen);
    for (int step = 0; step < 5; ++step) {
      theta.logits(4)[0] += 0.3;
      const double lp = sequence_logprob(theta, prefix, batch[0].rejected);
      const double loss = apo_down_loss(theta, ref, batch, 0.5);
      CHECK(lp > last_lp);
      CHECK(sequence_logprob(theta, prefix, batch[0].chosen) == chosen_lp);
      CHECK(loss > last_loss);
      last_lp = lp;
      last_loss = loss;
    }
  }
}

TEST_CASE("parallel APO-down kernel agrees with the serial reference") {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t v = std::uniform_int_distribution<std::size_t>(3, 40)(rng);
    const ToyPolicy ref = ToyPolicy::random(v, 1, rng(), 1.0);
    const ToyPolicy theta = ToyPolicy::random(v, 1, rng(), 1.0);
    std::vector<PreferenceTuple> batch;
    for (int j = 0; j < 25; ++j) batch.push_back(random_tuple(rng, v, 30));
    const auto expected = serial::apo_down_evaluate(theta, ref, batch, 0.3);
    omp_set_num_threads(1);
    const auto single = apo_down_evaluate(theta, ref, batch, 0.3);
    CHECK(single.loss == doctest::Approx(expected.loss).epsilon(1e-13));
    for (std::size_t k = 0; k < expected.gradient.size(); ++k) {
      CHECK(std::abs(single.gradient[k] - expected.gradient[k]) < 1e-13);
    }
    for (int threads : {2, 3, 8}) {
      omp_set_num_threads(threads);
      const auto multi = apo_down_evaluate(theta, ref, batch, 0.3);
      CHECK(multi.loss == single.loss);
      CHECK(multi.gradient == single.gradient);
    }
  }
  omp_set_num_threads(1);
}

TEST_CASE("training increases the preference margin") {
  std::mt19937_64 rng(2024);
  const std::size_t v = 8;
  std::vector<PreferenceTuple> data;
  for (int j = 0; j < 6; ++j) {
    auto t = random_tuple(rng, v, 5);
    while (t.rejected == t.chosen) t.rejected = random_tokens(rng, v, 1, 5);
    data.push_back(t);
  }
  const ToyPolicy ref = ToyPolicy::random(v, 1, 77, 0.5);
  const ApoConfig config{0.1, 0.5, 25};
  const auto result = train_apo(ref, ref, data, config);
  CHECK(result.losses.size() == 26);
  CHECK(result.losses.front() == 0.0);
  CHECK(preference_margin(result.policy, data) > preference_margin(ref, data));
  CHECK(result.losses.back() < result.losses.front());
}

TEST_CASE("training edge cases") {
  std::mt19937_64 rng(12);
  std::vector<PreferenceTuple> data = {random_tuple(rng, 5, 4), random_tuple(rng, 5, 4)};
  const ToyPolicy ref = ToyPolicy::random(5, 1, 3, 1.0);
  const ToyPolicy theta = ToyPolicy::random(5, 1, 4, 1.0);

  const auto frozen = train_apo(theta, ref, data, {0.1, 0.0, 5});
  CHECK(frozen.policy == theta);
  for (double l : frozen.losses) CHECK(l == frozen.losses.front());

  const auto none = train_apo(theta, ref, data, {0.1, 0.5, 0});
  CHECK(none.losses.size() == 1);
  CHECK(none.policy == theta);

  const auto one = train_apo(theta, ref, data, {0.2, 0.7, 1});
  ToyPolicy manual = theta;
  const auto g = apo_down_grad(theta, ref, data, 0.2);
  for (std::size_t k = 0; k < g.size(); ++k) manual.parameters()[k] -= 0.7 * g[k];
  CHECK(one.policy == manual);
  CHECK(one.losses[1] == apo_down_loss(manual, ref, data, 0.2));

  ToyPolicy broken = theta;
  broken.parameters()[0] = std::numeric_limits<double>::quiet_NaN();
  std::vector<PreferenceTuple> uses_start = {PreferenceTuple{"x", {3}, {4}, {3}, {4}}};
  broken.parameters()[vocab::kSep * 5 + 0] = std::numeric_limits<double>::quiet_NaN();
  try {
    train_apo(broken, ref, uses_start, {0.1, 0.5, 3});
    FAIL("expected a non-finite loss");
  } catch (const NonFiniteLossError& e) {
    CHECK(e.step() == 0);
  }
  CHECK_THROWS_AS(train_apo(theta, ref, std::vector<PreferenceTuple>{}, {}), InputError);
  CHECK_THROWS_AS(train_apo(theta, ref, data, {0.0, 0.5, 1}), InputError);
  CHECK_THROWS_AS(train_apo(theta, ref, data, {0.1, -1.0, 1}), InputError);
}
