// Copyright 2026 The Calibre Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Garbling of gold spans into noisy answers.
//
//   Add     attach n_op passage tokens on the left, right or both sides
//   Delete  remove n_op tokens from the left, right or both sides
//   Shift   move the span n_op tokens left or right, keeping its length
//
// With probability 1 - phi the gold span is left untouched (NoOp). A
// single-token gold span can only grow by one token. Otherwise n_op is
// uniform in [1, floor(L / 2)], and "both sides" splits n_op as
// ceil(n_op / 2) on the left and floor(n_op / 2) on the right, so it needs
// n_op >= 2.

#include <array>
#include <cstdint>
#include <string>

#include "calibre/error.hpp"
#include "calibre/rng.hpp"
#include "calibre/textcore/span.hpp"

namespace calibre {

enum class NoiseKind { NoOp, Add, Delete, Shift };
enum class Side { Left, Right, Both };

inline const char* to_string(NoiseKind k) {
  switch (k) {
    case NoiseKind::NoOp: return "noop";
    case NoiseKind::Add: return "add";
    case NoiseKind::Delete: return "delete";
    case NoiseKind::Shift: return "shift";
  }
  return "?";
}

struct NoiseOp {
  NoiseKind kind = NoiseKind::NoOp;
  int n_op = 0;
  /// Add/Delete: which side(s). Shift: direction (Left or Right).
  Side side = Side::Left;

  /// Throws InvalidArgument when the op is not allowed for a gold span of
  /// the given length.
  void validate(int gold_len) const {
    if (gold_len < 1) throw InvalidArgument("NoiseOp: gold length must be >= 1");
    if (kind == NoiseKind::NoOp) {
      if (n_op != 0) throw InvalidArgument("NoiseOp: NoOp must have n_op = 0");
      return;
    }
    const int cap = std::max(1, gold_len / 2);
    if (n_op < 1 || n_op > cap) {
      throw InvalidArgument("NoiseOp: n_op " + std::to_string(n_op) + " outside [1, " +
                            std::to_string(cap) + "]");
    }
    if (kind != NoiseKind::Add && gold_len == 1) {
      throw InvalidArgument("NoiseOp: only Add applies to single-token spans");
    }
    if (side == Side::Both && (kind == NoiseKind::Shift || n_op < 2)) {
      throw InvalidArgument("NoiseOp: both-sides needs Add/Delete with n_op >= 2");
    }
  }
};

struct NoisePolicy {
  /// Probability that a gold span is garbled.
  double phi = 0.5;
  /// Relative weights of Add, Delete, Shift.
  std::array<double, 3> op_weights{1.0, 1.0, 1.0};
  std::uint64_t seed = 0;

  void validate() const {
    if (!(phi > 0.0 && phi < 1.0)) throw InvalidArgument("NoisePolicy: phi must be in (0, 1)");
    double total = 0.0;
    for (double w : op_weights) {
      if (!(w >= 0.0)) throw InvalidArgument("NoisePolicy: op weights must be non-negative");
      total += w;
    }
    if (!(total > 0.0)) throw InvalidArgument("NoisePolicy: op weights sum to zero");
  }
};

inline NoiseOp sample_noise_op(int gold_len, const NoisePolicy& policy, Rng& rng) {
  if (gold_len < 1) throw InvalidArgument("sample_noise_op: gold length must be >= 1");
  if (!rng.bernoulli(policy.phi)) return {};
  if (gold_len == 1) {
    return {NoiseKind::Add, 1, rng.below(2) == 0 ? Side::Left : Side::Right};
  }
  static constexpr std::array<NoiseKind, 3> kinds = {NoiseKind::Add, NoiseKind::Delete,
                                                     NoiseKind::Shift};
  NoiseOp op;
  op.kind = kinds[rng.categorical(policy.op_weights)];
  op.n_op = static_cast<int>(rng.between(1, gold_len / 2));
  if (op.kind != NoiseKind::Shift && op.n_op >= 2) {
    op.side = static_cast<Side>(rng.below(3));
  } else {
    op.side = rng.below(2) == 0 ? Side::Left : Side::Right;
  }
  return op;
}

struct NoiseResult {
  Span span;
  /// What was actually applied after boundary handling.
  NoiseKind applied = NoiseKind::NoOp;
  /// Set when the requested op had to change direction or was dropped
  /// because the passage edge left no room.
  bool flagged = false;
};

inline NoiseResult apply_noise(int passage_len, const Span& gold, const NoiseOp& op) {
  if (!gold.valid_in(passage_len)) {
    throw InvalidArgument("apply_noise: gold span outside passage");
  }
  op.validate(gold.length());
  const Span bare(gold.start, gold.end);
  switch (op.kind) {
    case NoiseKind::NoOp:
      return {bare, NoiseKind::NoOp, false};

    case NoiseKind::Add: {
      int left = 0, right = 0;
      switch (op.side) {
        case Side::Left: left = op.n_op; break;
        case Side::Right: right = op.n_op; break;
        case Side::Both:
          left = (op.n_op + 1) / 2;
          right = op.n_op / 2;
          break;
      }
      const int room_left = gold.start;
      const int room_right = passage_len - gold.end;
      int l = std::min(left, room_left);
      int r = std::min(right, room_right);
      bool flagged = false;
      if (l + r == 0) {
        // Requested side is flush with the passage edge: use the other one.
        flagged = true;
        if (op.side == Side::Left) r = std::min(op.n_op, room_right);
        if (op.side == Side::Right) l = std::min(op.n_op, room_left);
        if (l + r == 0) return {bare, NoiseKind::NoOp, true};
      }
      return {Span(gold.start - l, gold.end + r), NoiseKind::Add, flagged};
    }

    case NoiseKind::Delete: {
      switch (op.side) {
        case Side::Left: return {Span(gold.start + op.n_op, gold.end), NoiseKind::Delete, false};
        case Side::Right: return {Span(gold.start, gold.end - op.n_op), NoiseKind::Delete, false};
        case Side::Both:
          return {Span(gold.start + (op.n_op + 1) / 2, gold.end - op.n_op / 2), NoiseKind::Delete,
                  false};
      }
      break;
    }

    case NoiseKind::Shift: {
      const bool right_ok = gold.end + op.n_op <= passage_len;
      const bool left_ok = gold.start - op.n_op >= 0;
      const bool want_right = op.side == Side::Right;
      if (want_right ? right_ok : left_ok) {
        const int d = want_right ? op.n_op : -op.n_op;
        return {Span(gold.start + d, gold.end + d), NoiseKind::Shift, false};
      }
      if (want_right ? left_ok : right_ok) {
        const int d = want_right ? -op.n_op : op.n_op;
        return {Span(gold.start + d, gold.end + d), NoiseKind::Shift, true};
      }
      return {bare, NoiseKind::NoOp, true};
    }
  }
  return {bare, NoiseKind::NoOp, true};
}

}  // namespace calibre
