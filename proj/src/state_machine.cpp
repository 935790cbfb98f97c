// Copyright 2026 The mempoolq Authors
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

#include "mempoolq/state_machine.hpp"

#include <algorithm>
#include <cmath>

#include "mempoolq/error.hpp"

namespace mempoolq::state {

TokenBalanceState::TokenBalanceState(
    std::initializer_list<std::pair<const BalanceKey, double>> init) {
  for (const auto& [key, amount] : init) set(key.first, key.second, amount);
}

double TokenBalanceState::balance(const Address& address, const Token& token) const {
  auto it = balances_.find({address, token});
  return it == balances_.end() ? 0.0 : it->second;
}

void TokenBalanceState::set(const Address& address, const Token& token, double amount) {
  if (!(amount >= 0.0)) {
    throw validation_error("balance of (" + address + ", " + token + ") must be >= 0");
  }
  if (amount == 0.0) {
    balances_.erase({address, token});
  } else {
    balances_[{address, token}] = amount;
  }
}

double TokenBalanceState::supply(const Token& token) const {
  double total = 0.0;
  for (const auto& [key, amount] : balances_) {
    if (key.second == token) total += amount;
  }
  return total;
}

bool operator==(const TokenBalanceState& a, const TokenBalanceState& b) {
  return a.balances_ == b.balances_;
}

BalancedTranslation::BalancedTranslation(
    std::initializer_list<std::pair<const BalanceKey, double>> init) {
  for (const auto& [key, delta] : init) add(key.first, key.second, delta);
}

void BalancedTranslation::add(const Address& address, const Token& token, double delta) {
  deltas_[{address, token}] += delta;
}

void BalancedTranslation::validate() const {
  std::map<Token, std::pair<double, double>> columns;  // token -> (sum, max|delta|)
  for (const auto& [key, delta] : deltas_) {
    if (!std::isfinite(delta)) throw validation_error("translation delta is not finite");
    auto& [sum, scale] = columns[key.second];
    sum += delta;
    scale = std::max(scale, std::abs(delta));
  }
  for (const auto& [token, column] : columns) {
    if (std::abs(column.first) > 1e-12 * column.second) {
      throw validation_error("translation does not conserve token " + token);
    }
  }
}

bool translation_applies(const TokenBalanceState& state, const BalancedTranslation& t) {
  t.validate();
  return std::all_of(t.deltas().begin(), t.deltas().end(), [&](const auto& entry) {
    const auto& [key, delta] = entry;
    return state.balance(key.first, key.second) + delta >= 0.0;
  });
}

TokenBalanceState apply_translation(const TokenBalanceState& state,
                                    const BalancedTranslation& t) {
  if (!translation_applies(state, t)) return state;
  TokenBalanceState next = state;
  for (const auto& [key, delta] : t.deltas()) {
    next.set(key.first, key.second, state.balance(key.first, key.second) + delta);
  }
  return next;
}

BalancedTranslation to_translation(const ValueTransfer& v) {
  if (!(v.amount > 0.0)) throw validation_error("value transfer amount must be > 0");
  if (v.sender == v.receiver) throw validation_error("value transfer sender equals receiver");
  BalancedTranslation t;
  t.add(v.sender, v.token, -v.amount);
  t.add(v.receiver, v.token, v.amount);
  return t;
}

TokenBalanceState apply_value_transfer(const TokenBalanceState& state,
                                       const ValueTransfer& v) {
  return apply_translation(state, to_translation(v));
}

BalancedTranslation trade_translation(const Address& originator,
                                      const Address& counterparty,
                                      const Token& token_a, const Token& token_b,
                                      double t_a, double t_b) {
  if (originator == counterparty) throw validation_error("trade with itself");
  if (t_a * t_b > 0.0) throw validation_error("trade legs must have opposite sign");
  BalancedTranslation t;
  t.add(originator, token_a, t_a);
  t.add(counterparty, token_a, -t_a);
  t.add(originator, token_b, t_b);
  t.add(counterparty, token_b, -t_b);
  return t;
}

}  // namespace mempoolq::state
