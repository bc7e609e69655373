#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace conjury {

/// Raised when an input violates a documented precondition.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a construction or certificate cannot be completed.
class ConstructionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Finite prefix of a point of {0,1}^N. Bit positions are 1-indexed in the
/// accessors to match the sequence notation w_1 w_2 ...
class BinaryCode {
 public:
  BinaryCode() = default;
  explicit BinaryCode(std::vector<std::uint8_t> bits);

  /// Parses a string of '0'/'1' characters.
  static BinaryCode parse(std::string_view text);

  std::size_t depth() const { return bits_.size(); }
  /// Bit w_i, 1 <= i <= depth.
  int bit(std::size_t i) const;
  const std::vector<std::uint8_t>& bits() const { return bits_; }
  std::string str() const;

  friend bool operator==(const BinaryCode&, const BinaryCode&) = default;

 private:
  std::vector<std::uint8_t> bits_;
};

struct AgreementReport {
  /// Smallest 0-based index k with agreement at every position >= k.
  std::optional<std::size_t> first_agreeing_index;
  bool equal = false;
};

/// Eventual-agreement comparison within the common prefix.
AgreementReport e0_compare(const BinaryCode& c1, const BinaryCode& c2);

/// Simple undirected graph on vertices 1..order.
class GraphCode {
 public:
  GraphCode() = default;
  explicit GraphCode(std::size_t order);

  static GraphCode from_edges(std::size_t order,
                              const std::vector<std::pair<int, int>>& edges);
  /// Builds from a full adjacency table; rejects asymmetric tables and loops.
  static GraphCode from_adjacency(const std::vector<std::vector<bool>>& adj);

  std::size_t order() const { return order_; }
  bool edge(int m, int n) const;
  void set_edge(int m, int n, bool present);
  std::size_t edge_count() const;
  std::vector<std::pair<int, int>> edges() const;

  friend bool operator==(const GraphCode&, const GraphCode&) = default;

 private:
  std::size_t index(int m, int n) const;

  std::size_t order_ = 0;
  std::vector<std::uint8_t> adj_;
};

/// phi[n-1] is the image of vertex n; images are 1-based.
using VertexBijection = std::vector<int>;

/// Exhaustive isomorphism search. Order is capped at 8 (8! candidates).
std::optional<VertexBijection> graph_iso(const GraphCode& g1, const GraphCode& g2);

/// Checks adjacency1(m,n) == adjacency2(phi m, phi n) for every pair.
bool verify_iso(const GraphCode& g1, const GraphCode& g2, const VertexBijection& phi);

/// E2(phi m, phi n) = E1(m, n).
GraphCode relabel(const GraphCode& g, const VertexBijection& phi);

}  // namespace conjury
