#include "conjury/codes.hpp"

#include <algorithm>
#include <numeric>

namespace conjury {

BinaryCode::BinaryCode(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
  for (auto b : bits_) {
    if (b > 1) throw ValidationError("binary code entries must be 0 or 1");
  }
}

BinaryCode BinaryCode::parse(std::string_view text) {
  std::vector<std::uint8_t> bits;
  bits.reserve(text.size());
  for (char ch : text) {
    if (ch != '0' && ch != '1') {
      throw ValidationError("binary code must consist of '0' and '1' characters");
    }
    bits.push_back(static_cast<std::uint8_t>(ch - '0'));
  }
  return BinaryCode(std::move(bits));
}

int BinaryCode::bit(std::size_t i) const {
  if (i < 1 || i > bits_.size()) throw ValidationError("bit index out of range");
  return bits_[i - 1];
}

std::string BinaryCode::str() const {
  std::string out;
  out.reserve(bits_.size());
  for (auto b : bits_) out.push_back(static_cast<char>('0' + b));
  return out;
}

AgreementReport e0_compare(const BinaryCode& c1, const BinaryCode& c2) {
  if (c1.depth() != c2.depth()) throw ValidationError("e0_compare: depth mismatch");
  AgreementReport report;
  const auto& a = c1.bits();
  const auto& b = c2.bits();
  std::size_t k = a.size();
  while (k > 0 && a[k - 1] == b[k - 1]) --k;
  if (k == a.size() && !a.empty()) {
    report.first_agreeing_index = std::nullopt;
  } else {
    report.first_agreeing_index = k;
  }
  report.equal = report.first_agreeing_index == std::size_t{0};
  return report;
}

GraphCode::GraphCode(std::size_t order) : order_(order), adj_(order * order, 0) {}

std::size_t GraphCode::index(int m, int n) const {
  if (m < 1 || n < 1 || static_cast<std::size_t>(m) > order_ ||
      static_cast<std::size_t>(n) > order_) {
    throw ValidationError("vertex index out of range");
  }
  return static_cast<std::size_t>(m - 1) * order_ + static_cast<std::size_t>(n - 1);
}

bool GraphCode::edge(int m, int n) const { return adj_[index(m, n)] != 0; }

void GraphCode::set_edge(int m, int n, bool present) {
  if (m == n) {
    if (present) throw ValidationError("graphs have no loops");
    return;
  }
  adj_[index(m, n)] = present;
  adj_[index(n, m)] = present;
}

GraphCode GraphCode::from_edges(std::size_t order,
                                const std::vector<std::pair<int, int>>& edges) {
  GraphCode g(order);
  for (auto [m, n] : edges) g.set_edge(m, n, true);
  return g;
}

GraphCode GraphCode::from_adjacency(const std::vector<std::vector<bool>>& adj) {
  GraphCode g(adj.size());
  for (std::size_t i = 0; i < adj.size(); ++i) {
    if (adj[i].size() != adj.size()) throw ValidationError("adjacency table must be square");
    if (adj[i][i]) throw ValidationError("adjacency diagonal must be false");
    for (std::size_t j = 0; j < adj.size(); ++j) {
      if (adj[i][j] != adj[j][i]) throw ValidationError("adjacency table must be symmetric");
      if (adj[i][j]) g.set_edge(static_cast<int>(i + 1), static_cast<int>(j + 1), true);
    }
  }
  return g;
}

std::size_t GraphCode::edge_count() const {
  return static_cast<std::size_t>(std::count(adj_.begin(), adj_.end(), 1)) / 2;
}

std::vector<std::pair<int, int>> GraphCode::edges() const {
  std::vector<std::pair<int, int>> out;
  const int v = static_cast<int>(order_);
  for (int m = 1; m <= v; ++m) {
    for (int n = m + 1; n <= v; ++n) {
      if (edge(m, n)) out.emplace_back(m, n);
    }
  }
  return out;
}

bool verify_iso(const GraphCode& g1, const GraphCode& g2, const VertexBijection& phi) {
  if (g1.order() != g2.order() || phi.size() != g1.order()) return false;
  const int v = static_cast<int>(g1.order());
  std::vector<bool> seen(g1.order() + 1, false);
  for (int img : phi) {
    if (img < 1 || img > v || seen[img]) return false;
    seen[img] = true;
  }
  for (int m = 1; m <= v; ++m) {
    for (int n = m + 1; n <= v; ++n) {
      if (g1.edge(m, n) != g2.edge(phi[m - 1], phi[n - 1])) return false;
    }
  }
  return true;
}

std::optional<VertexBijection> graph_iso(const GraphCode& g1, const GraphCode& g2) {
  if (g1.order() != g2.order()) throw ValidationError("graph_iso: order mismatch");
  if (g1.order() > 8) throw ValidationError("graph_iso: brute-force oracle is limited to 8 vertices");
  VertexBijection phi(g1.order());
  std::iota(phi.begin(), phi.end(), 1);
  do {
    if (verify_iso(g1, g2, phi)) return phi;
  } while (std::next_permutation(phi.begin(), phi.end()));
  return std::nullopt;
}

GraphCode relabel(const GraphCode& g, const VertexBijection& phi) {
  if (phi.size() != g.order()) throw ValidationError("relabel: bijection size mismatch");
  GraphCode out(g.order());
  for (auto [m, n] : g.edges()) out.set_edge(phi[m - 1], phi[n - 1], true);
  return out;
}

}  // namespace conjury
