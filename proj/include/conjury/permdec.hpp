#pragma once

// Factorization of a finitely supported permutation into transpositions with
// bounded contamination, plus the interpolating graph sequence.

#include <map>
#include <set>
#include <utility>
#include <vector>

#include "conjury/codes.hpp"

namespace conjury::perm {

class Permutation {
 public:
  Permutation() = default;

  /// From an explicit mapping; fixed points may be omitted or listed.
  static Permutation from_mapping(const std::map<int, int>& mapping);
  /// From disjoint cycles, each listed in the order c0 -> c1 -> ... -> c0.
  static Permutation from_cycles(const std::vector<std::vector<int>>& cycles);
  /// From a 1-based vertex bijection (phi[n-1] = image of n).
  static Permutation from_bijection(const VertexBijection& phi);
  /// Shift n -> n+1 on the integer window [-w, w]; only meant for
  /// reproducing the infinite zig-zag pattern.
  static Permutation demo_shift(int w);

  int apply(int n) const;
  int apply_inverse(int n) const;
  /// Moved elements in increasing order.
  std::vector<int> support() const;
  /// Disjoint cycles, each starting at its minimum; ordered by minimum.
  std::vector<std::vector<int>> cycles() const;
  bool is_demo() const { return demo_window_ > 0; }
  int demo_window() const { return demo_window_; }
  bool is_identity() const { return map_.empty() && demo_window_ == 0; }

  friend bool operator==(const Permutation&, const Permutation&) = default;

 private:
  std::map<int, int> map_;
  std::map<int, int> inv_;
  int demo_window_ = 0;
};

struct Transposition {
  int first = 0;   // always first < second
  int second = 0;
  bool moves(int n) const { return n == first || n == second; }
  int apply(int n) const { return n == first ? second : n == second ? first : n; }
  friend bool operator==(const Transposition&, const Transposition&) = default;
  friend auto operator<=>(const Transposition&, const Transposition&) = default;
};

Transposition make_transposition(int a, int b);

struct TranspositionSeq {
  std::vector<Transposition> steps;
  /// d_i, filled in by geometry consumers; empty until then.
  std::vector<double> distances;

  std::size_t size() const { return steps.size(); }
  /// Image of n under the composition of all steps, earliest first.
  int apply(int n) const;
  /// Image of n after the first `count` steps.
  int apply_prefix(int n, std::size_t count) const;
  /// All elements touched by some step, sorted.
  std::vector<int> elements() const;
};

struct PropertyReport {
  bool composes_to_target = false;
  bool no_repeated_pair = false;
  bool at_most_two_moves = false;
  bool cont_bounded = false;
  bool all() const { return composes_to_target && no_repeated_pair && at_most_two_moves && cont_bounded; }
};

/// Zig-zag factorization of every cycle around its minimum, cycles
/// interleaved round-robin by increasing minimum. Throws ConstructionError
/// if the output fails the property certificate.
TranspositionSeq decompose(const Permutation& p);

struct ContTable {
  std::map<int, std::set<int>> cont;
  std::map<int, std::size_t> frozen_stage;
  std::map<int, std::size_t> J;
  std::map<int, int> T;

  /// Contamination set of m; {m} for elements no step touches.
  std::set<int> cont_of(int m) const;
  /// Stages are 1-based; an element never moved is frozen at stage 1.
  std::size_t frozen_of(int m) const;
  std::size_t J_of(int m) const;
  int T_of(int m) const;
};

/// Reachability along chains of steps with strictly increasing indices.
std::set<int> contamination_set(const TranspositionSeq& seq, int m);

ContTable contamination(const TranspositionSeq& seq);

/// Cartesian product Cont_n x Cont_m.
std::set<std::pair<int, int>> cont_pairs(const ContTable& table, int n, int m);

/// Checks the four certificate properties against the target permutation.
PropertyReport check_properties(const TranspositionSeq& seq, const Permutation& target);

/// E^(1) = e1, E^(i+1)(m, n) = E^(i)(t_i m, t_i n). Step elements must be
/// vertices of e1 (1..order).
std::vector<GraphCode> interpolate_graphs(const GraphCode& e1, const TranspositionSeq& seq);

/// Vertex bijection of the assembled permutation on 1..order.
VertexBijection assembled_bijection(const TranspositionSeq& seq, std::size_t order);

}  // namespace conjury::perm
