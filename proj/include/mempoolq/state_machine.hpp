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

#pragma once

#include <map>
#include <string>
#include <utility>

namespace mempoolq::state {

using Address = std::string;
using Token = std::string;
using BalanceKey = std::pair<Address, Token>;

/// Non-negative real balances keyed by (address, token). Missing keys read as 0.
class TokenBalanceState {
 public:
  TokenBalanceState() = default;
  TokenBalanceState(std::initializer_list<std::pair<const BalanceKey, double>> init);

  double balance(const Address& address, const Token& token) const;
  void set(const Address& address, const Token& token, double amount);

  /// Sum of all balances of `token`.
  double supply(const Token& token) const;

  const std::map<BalanceKey, double>& entries() const noexcept { return balances_; }

  /// Equality treats explicit zero entries as absent.
  friend bool operator==(const TokenBalanceState& a, const TokenBalanceState& b);

 private:
  std::map<BalanceKey, double> balances_;
};

/// Finitely supported signed deltas whose per-token sum is zero.
class BalancedTranslation {
 public:
  BalancedTranslation() = default;
  BalancedTranslation(std::initializer_list<std::pair<const BalanceKey, double>> init);

  void add(const Address& address, const Token& token, double delta);

  /// Throws a validation error if some token's deltas do not cancel, i.e.
  /// |sum| > 1e-12 * max|delta| (this also rejects mints and burns).
  void validate() const;

  const std::map<BalanceKey, double>& deltas() const noexcept { return deltas_; }

 private:
  std::map<BalanceKey, double> deltas_;
};

struct ValueTransfer {
  Address sender;
  Address receiver;
  Token token;
  double amount = 0.0;
};

/// The conditional balanced translation: state + deltas when every resulting
/// balance is >= 0, otherwise the state unchanged.
TokenBalanceState apply_translation(const TokenBalanceState& state,
                                    const BalancedTranslation& t);

/// Whether apply_translation would take the success branch.
bool translation_applies(const TokenBalanceState& state, const BalancedTranslation& t);

BalancedTranslation to_translation(const ValueTransfer& v);

TokenBalanceState apply_value_transfer(const TokenBalanceState& state,
                                       const ValueTransfer& v);

/// Translation of a trade (t_a, t_b) between originator and counterparty: the
/// originator's balances move by (t_a, t_b), the counterparty's by the negation.
BalancedTranslation trade_translation(const Address& originator,
                                      const Address& counterparty,
                                      const Token& token_a, const Token& token_b,
                                      double t_a, double t_b);

}  // namespace mempoolq::state
