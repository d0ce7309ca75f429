#pragma once

#include "dtnlab/mesh.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace dtnlab {

/// An assembled domain ready for the spectral checks.
struct Fixture {
  std::string name;
  DomainSpec domain;
  FormPair<double> form;
  IndexSplit split;
};

Fixture make_fixture(std::string name, DomainSpec domain, double shift = 1.0,
                     MassMode mass_mode = MassMode::identity);

/// Path 0–1–2 with boundary {2}: K = [[2,−1,0],[−1,3,−1],[0,−1,2]], M = I.
Fixture p3_fixture();

/// P3 plus a disjoint triangle without boundary nodes (common eigenvectors).
Fixture p3_triangle_fixture();

/// Chain of n nodes on [0,1] with both ends on the boundary.
Fixture interval_fixture(Index n_nodes = 10);

/// Full m×m grid with the default spacing 1/(m+1).
Fixture square_grid_fixture(Index m);

/// m×m grid with the top-right (m/2)×(m/2) quadrant removed.
Fixture l_shape_fixture(Index m = 10);

/// Unit square sampled with spacing h (nodes on the edges), lumped mass.
Fixture unit_square_fixture(double h, double shift = 1.0, MassMode mass_mode = MassMode::lumped);

/// Seeded random weighted graph with 4..max_nodes nodes: a random spanning
/// tree plus extra edges, 1..n/3 boundary nodes, and with probability 1/4 a
/// disjoint boundary-free cycle.
DomainSpec random_graph(std::uint64_t seed, Index max_nodes = 40);

/// The deterministic fixture family used by the verification suites.
std::vector<Fixture> standard_fixtures();

}  // namespace dtnlab
