#pragma once

#include "dtnlab/core.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace dtnlab {

enum class DomainKind { interval1d, grid2d, graph };

const char* to_string(DomainKind k);

struct Edge {
  Index i = 0;
  Index j = 0;
  double weight = 1.0;
};

/// Discrete domain: a weighted graph with designated boundary vertices.
///
/// `node_volume` and `edge_fraction` describe the dual cells of grid-like
/// domains (fraction of a full cell around a node, fraction of the two cells
/// sharing an edge). They are only consulted by lumped-mass assembly and are
/// all ones for abstract graphs.
struct DomainSpec {
  DomainKind kind = DomainKind::graph;
  Index node_count = 0;
  std::vector<Edge> adjacency;  // i < j, sorted, unique
  std::vector<Index> boundary;  // sorted, unique
  double spacing = 0.0;         // grid spacing h; 0 for abstract graphs
  std::vector<std::array<double, 2>> coordinates;  // empty for graphs
  std::vector<Index> component_ids;
  std::vector<bool> component_has_boundary;
  std::vector<double> node_volume;
  std::vector<double> edge_fraction;

  Index component_count() const { return static_cast<Index>(component_has_boundary.size()); }
  std::vector<Index> boundary_free_components() const;
  bool is_boundary(Index node) const;
};

/// Which end(s) of a 1-D chain are boundary nodes.
enum class IntervalEnds { last, both };

struct GridMask {
  Index rows = 0;
  Index cols = 0;
  std::vector<bool> cells;  // row-major, true = masked in

  bool at(Index r, Index c) const { return cells[static_cast<std::size_t>(r * cols + c)]; }
  static GridMask full(Index rows, Index cols);
};

/// Path graph on `n_nodes` nodes with edge weights 1/h².
DomainSpec build_interval(Index n_nodes, double h, IntervalEnds ends = IntervalEnds::last);

/// 4-neighbour lattice on the masked-in cells. Boundary = masked-in nodes
/// with fewer than four masked-in neighbours. Spacing defaults to
/// 1/(cols+1).
DomainSpec build_grid(Index rows, Index cols, const std::optional<GridMask>& mask = std::nullopt,
                      std::optional<double> spacing = std::nullopt);

DomainSpec build_graph(Index node_count, std::vector<Edge> edges, std::vector<Index> boundary);

/// Mask text: one row per line, '#' in and '.' out, rectangular.
GridMask parse_mask(std::istream& in);
GridMask read_mask_file(const std::string& path);

/// Graph text: "nodes N boundary i,j,..." then one "i j w" edge per line.
DomainSpec parse_graph(std::istream& in);
DomainSpec read_graph_file(const std::string& path);

enum class MassMode { identity, lumped };

/// Stiffness K and mass M of the quadratic forms a[u,v] = vᵀKu and
/// (u,v) = vᵀMu. K includes the zero-order term shift·M.
template <typename Scalar>
struct FormPair {
  Matrix<Scalar> K;
  Matrix<Scalar> M;
  Scalar shift = Scalar(1);
  MassMode mass_mode = MassMode::identity;

  Index size() const { return K.rows(); }
};

/// Interior / boundary partition. `permutation` lists interior indices
/// first, then boundary indices, so P A Pᵀ has block form [[II, IΓ],[ΓI, ΓΓ]].
struct IndexSplit {
  std::vector<Index> interior;
  std::vector<Index> boundary;
  std::vector<Index> permutation;

  Index size() const { return static_cast<Index>(permutation.size()); }
  Index n_interior() const { return static_cast<Index>(interior.size()); }
  Index n_boundary() const { return static_cast<Index>(boundary.size()); }
};

IndexSplit make_split(const DomainSpec& domain);

template <typename Scalar>
struct Assembly {
  FormPair<Scalar> form;
  IndexSplit split;
};

namespace detail {

/// Unpivoted Cholesky used as a positive-definiteness probe. Returns the
/// first pivot index whose value is not above `threshold`, or -1.
template <typename Scalar>
Index first_nonpositive_pivot(Matrix<Scalar> a, Scalar threshold) {
  const Index n = a.rows();
  for (Index k = 0; k < n; ++k) {
    Scalar d = a(k, k);
    if (!(d > threshold)) return k;
    d = std::sqrt(d);
    a(k, k) = d;
    const Index m = n - k - 1;
    if (m == 0) break;
    a.col(k).tail(m) /= d;
    a.bottomRightCorner(m, m).template triangularView<Eigen::Lower>() -=
        a.col(k).tail(m) * a.col(k).tail(m).transpose();
  }
  return -1;
}

}  // namespace detail

/// Assembles K = (weighted graph Laplacian) + shift·M and the mass M.
///
/// identity: M = I, Laplacian weights as stored (1/h² for grids).
/// lumped:   M = h²·diag(node_volume), Laplacian weights scaled by
///           h²·edge_fraction (finite-volume dual cells; h = 1 for graphs).
///
/// Throws assembly-failure (detail = pivot index) if K is not positive
/// definite, which is what happens for shift = 0 on any component.
template <typename Scalar = double>
Assembly<Scalar> assemble(const DomainSpec& domain, Scalar shift = Scalar(1),
                          MassMode mass_mode = MassMode::identity) {
  if (!(shift >= Scalar(0)) || !std::isfinite(static_cast<double>(shift)))
    throw Error(ErrorKind::invalid_argument, "shift must be a finite nonnegative number");
  const Index n = domain.node_count;
  Matrix<Scalar> K = Matrix<Scalar>::Zero(n, n);
  Matrix<Scalar> M = Matrix<Scalar>::Zero(n, n);

  const bool lumped = mass_mode == MassMode::lumped;
  const Scalar h = domain.spacing > 0 ? Scalar(domain.spacing) : Scalar(1);
  const Scalar h2 = lumped ? h * h : Scalar(1);

  for (std::size_t e = 0; e < domain.adjacency.size(); ++e) {
    const Edge& edge = domain.adjacency[e];
    Scalar w = Scalar(edge.weight);
    if (lumped) w *= h2 * Scalar(domain.edge_fraction[e]);
    K(edge.i, edge.i) += w;
    K(edge.j, edge.j) += w;
    K(edge.i, edge.j) -= w;
    K(edge.j, edge.i) -= w;
  }
  for (Index i = 0; i < n; ++i) {
    M(i, i) = lumped ? h2 * Scalar(domain.node_volume[static_cast<std::size_t>(i)]) : Scalar(1);
    K(i, i) += shift * M(i, i);
  }

  const Scalar scale = K.cwiseAbs().maxCoeff();
  const Scalar threshold = Scalar(n) * std::numeric_limits<Scalar>::epsilon() * scale;
  const Index bad = detail::first_nonpositive_pivot<Scalar>(K, threshold);
  if (bad >= 0)
    throw Error(ErrorKind::assembly_failure,
                "stiffness matrix is not positive definite (pivot " + std::to_string(bad) + ")", bad);

  FormPair<Scalar> form{std::move(K), std::move(M), shift, mass_mode};
  return {std::move(form), make_split(domain)};
}

}  // namespace dtnlab
