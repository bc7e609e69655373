#include "conjury/permdec.hpp"

#include <algorithm>

namespace conjury::perm {
namespace {

// Zig-zag pattern on positions: (-k, k), (-k+1, k) for k = 1, 2, ...
// restricted to steps whose positions both lie in [-lo, hi].
std::vector<std::pair<int, int>> zigzag_positions(int lo, int hi) {
  std::vector<std::pair<int, int>> out;
  for (int k = 1; k <= hi; ++k) {
    if (k <= lo) out.emplace_back(-k, k);
    if (k - 1 <= lo) out.emplace_back(-k + 1, k);
  }
  return out;
}

std::vector<Transposition> factor_cycle(const std::vector<int>& cycle) {
  const int len = static_cast<int>(cycle.size());
  if (len < 2) return {};
  const int lo = (len - 1) / 2;
  const int hi = len - 1 - lo;
  // Position j holds p^j(base); negative positions wrap around the cycle.
  auto at = [&](int j) { return cycle[static_cast<std::size_t>(((j % len) + len) % len)]; };
  std::vector<Transposition> out;
  for (auto [u, v] : zigzag_positions(lo, hi)) out.push_back(make_transposition(at(u), at(v)));
  return out;
}

}  // namespace

Permutation Permutation::from_mapping(const std::map<int, int>& mapping) {
  Permutation p;
  std::set<int> images;
  for (auto [k, v] : mapping) {
    if (!images.insert(v).second) throw ValidationError("permutation mapping is not injective");
  }
  for (auto [k, v] : mapping) {
    if (k == v) continue;
    p.map_[k] = v;
    p.inv_[v] = k;
  }
  // Moved elements must be closed under the map.
  for (auto [k, v] : p.map_) {
    if (!p.map_.count(v)) throw ValidationError("permutation mapping is not a bijection of its support");
  }
  return p;
}

Permutation Permutation::from_cycles(const std::vector<std::vector<int>>& cycles) {
  std::map<int, int> mapping;
  for (const auto& c : cycles) {
    for (std::size_t i = 0; i < c.size(); ++i) {
      const int from = c[i];
      const int to = c[(i + 1) % c.size()];
      if (mapping.count(from)) throw ValidationError("cycles are not disjoint");
      mapping[from] = to;
    }
  }
  return from_mapping(mapping);
}

Permutation Permutation::from_bijection(const VertexBijection& phi) {
  std::map<int, int> mapping;
  for (std::size_t i = 0; i < phi.size(); ++i) {
    if (phi[i] < 1 || static_cast<std::size_t>(phi[i]) > phi.size()) {
      throw ValidationError("vertex bijection image out of range");
    }
    mapping[static_cast<int>(i) + 1] = phi[i];
  }
  return from_mapping(mapping);
}

Permutation Permutation::demo_shift(int w) {
  if (w < 1) throw ValidationError("demo window must be positive");
  Permutation p;
  p.demo_window_ = w;
  return p;
}

int Permutation::apply(int n) const {
  if (demo_window_ > 0) return (n >= -demo_window_ && n <= demo_window_) ? n + 1 : n;
  auto it = map_.find(n);
  return it == map_.end() ? n : it->second;
}

int Permutation::apply_inverse(int n) const {
  if (demo_window_ > 0) return (n >= -demo_window_ + 1 && n <= demo_window_ + 1) ? n - 1 : n;
  auto it = inv_.find(n);
  return it == inv_.end() ? n : it->second;
}

std::vector<int> Permutation::support() const {
  std::vector<int> out;
  if (demo_window_ > 0) {
    for (int n = -demo_window_; n <= demo_window_; ++n) out.push_back(n);
    return out;
  }
  for (auto [k, v] : map_) out.push_back(k);
  return out;
}

std::vector<std::vector<int>> Permutation::cycles() const {
  if (demo_window_ > 0) throw ValidationError("demo shift has no finite cycle structure");
  std::vector<std::vector<int>> out;
  std::set<int> seen;
  for (auto [start, img] : map_) {
    if (seen.count(start)) continue;
    std::vector<int> cycle;
    int x = start;
    do {
      cycle.push_back(x);
      seen.insert(x);
      x = apply(x);
    } while (x != start);
    out.push_back(std::move(cycle));
  }
  return out;
}

Transposition make_transposition(int a, int b) {
  if (a == b) throw ValidationError("transposition needs two distinct elements");
  return a < b ? Transposition{a, b} : Transposition{b, a};
}

int TranspositionSeq::apply(int n) const { return apply_prefix(n, steps.size()); }

int TranspositionSeq::apply_prefix(int n, std::size_t count) const {
  count = std::min(count, steps.size());
  for (std::size_t i = 0; i < count; ++i) n = steps[i].apply(n);
  return n;
}

std::vector<int> TranspositionSeq::elements() const {
  std::set<int> s;
  for (const auto& t : steps) {
    s.insert(t.first);
    s.insert(t.second);
  }
  return {s.begin(), s.end()};
}

TranspositionSeq decompose(const Permutation& p) {
  TranspositionSeq seq;
  if (p.is_demo()) {
    const int w = p.demo_window();
    for (auto [u, v] : zigzag_positions(w, w)) seq.steps.push_back(make_transposition(u, v));
    return seq;
  }
  std::vector<std::vector<Transposition>> per_cycle;
  for (const auto& c : p.cycles()) per_cycle.push_back(factor_cycle(c));
  for (std::size_t round = 0;; ++round) {
    bool any = false;
    for (const auto& steps : per_cycle) {
      if (round < steps.size()) {
        seq.steps.push_back(steps[round]);
        any = true;
      }
    }
    if (!any) break;
  }
  const auto report = check_properties(seq, p);
  if (!report.all()) throw ConstructionError("decompose: factorization failed its property certificate");
  return seq;
}

std::set<int> contamination_set(const TranspositionSeq& seq, int m) {
  // A forward sweep is equivalent to enumerating every chain with increasing
  // step indices: an element joins as soon as some step links it to the set.
  std::set<int> reach{m};
  for (const auto& t : seq.steps) {
    const bool a = reach.count(t.first) > 0;
    const bool b = reach.count(t.second) > 0;
    if (a && !b) reach.insert(t.second);
    if (b && !a) reach.insert(t.first);
  }
  return reach;
}

ContTable contamination(const TranspositionSeq& seq) {
  ContTable table;
  const auto elems = seq.elements();
  for (int m : elems) table.cont[m] = contamination_set(seq, m);
  for (std::size_t i = 0; i < seq.steps.size(); ++i) {
    table.frozen_stage[seq.steps[i].first] = i + 2;
    table.frozen_stage[seq.steps[i].second] = i + 2;
  }
  for (int m : elems) {
    std::size_t j = 1;
    for (int c : table.cont[m]) j = std::max(j, table.frozen_of(c));
    table.J[m] = j;
    // Steps are 1-based: include every step i <= J(m).
    int t = m;
    bool found = false;
    for (std::size_t i = 0; i < seq.steps.size() && i + 1 <= j; ++i) {
      const int hi = std::max(seq.steps[i].first, seq.steps[i].second);
      t = found ? std::max(t, hi) : hi;
      found = true;
    }
    table.T[m] = t;
  }
  return table;
}

std::set<int> ContTable::cont_of(int m) const {
  auto it = cont.find(m);
  return it == cont.end() ? std::set<int>{m} : it->second;
}

std::size_t ContTable::frozen_of(int m) const {
  auto it = frozen_stage.find(m);
  return it == frozen_stage.end() ? 1 : it->second;
}

std::size_t ContTable::J_of(int m) const {
  auto it = J.find(m);
  return it == J.end() ? 1 : it->second;
}

int ContTable::T_of(int m) const {
  auto it = T.find(m);
  return it == T.end() ? m : it->second;
}

std::set<std::pair<int, int>> cont_pairs(const ContTable& table, int n, int m) {
  if (n == m) throw ValidationError("cont_pairs: n and m must differ");
  std::set<std::pair<int, int>> out;
  for (int a : table.cont_of(n)) {
    for (int b : table.cont_of(m)) out.emplace(a, b);
  }
  return out;
}

PropertyReport check_properties(const TranspositionSeq& seq, const Permutation& target) {
  PropertyReport r;
  r.composes_to_target = true;
  if (!target.is_demo()) {
    std::set<int> domain;
    for (int n : target.support()) domain.insert(n);
    for (int n : seq.elements()) domain.insert(n);
    for (int n : domain) {
      if (seq.apply(n) != target.apply(n)) r.composes_to_target = false;
    }
  }
  std::set<Transposition> seen(seq.steps.begin(), seq.steps.end());
  r.no_repeated_pair = seen.size() == seq.steps.size();
  std::map<int, int> moves;
  for (const auto& t : seq.steps) {
    ++moves[t.first];
    ++moves[t.second];
  }
  r.at_most_two_moves = std::all_of(moves.begin(), moves.end(), [](auto kv) { return kv.second <= 2; });
  r.cont_bounded = true;
  for (int m : seq.elements()) {
    if (contamination_set(seq, m).size() > 4) r.cont_bounded = false;
  }
  return r;
}

std::vector<GraphCode> interpolate_graphs(const GraphCode& e1, const TranspositionSeq& seq) {
  const int order = static_cast<int>(e1.order());
  for (const auto& t : seq.steps) {
    if (t.first < 1 || t.second > order) {
      throw ValidationError("interpolate_graphs: step element outside the vertex range");
    }
  }
  std::vector<GraphCode> out{e1};
  out.reserve(seq.steps.size() + 1);
  for (const auto& t : seq.steps) {
    VertexBijection swap(e1.order());
    for (int v = 1; v <= order; ++v) swap[static_cast<std::size_t>(v - 1)] = t.apply(v);
    out.push_back(relabel(out.back(), swap));
  }
  return out;
}

VertexBijection assembled_bijection(const TranspositionSeq& seq, std::size_t order) {
  VertexBijection phi(order);
  for (std::size_t v = 1; v <= order; ++v) phi[v - 1] = seq.apply(static_cast<int>(v));
  return phi;
}

}  // namespace conjury::perm
