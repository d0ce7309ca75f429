#include "dtnlab/fixtures.hpp"

#include <cmath>
#include <random>
#include <set>

namespace dtnlab {

Fixture make_fixture(std::string name, DomainSpec domain, double shift, MassMode mass_mode) {
  auto assembled = assemble<double>(domain, shift, mass_mode);
  return {std::move(name), std::move(domain), std::move(assembled.form), std::move(assembled.split)};
}

Fixture p3_fixture() {
  return make_fixture("p3", build_graph(3, {{0, 1, 1.0}, {1, 2, 1.0}}, {2}));
}

Fixture p3_triangle_fixture() {
  return make_fixture("p3+triangle",
                      build_graph(6, {{0, 1, 1.0}, {1, 2, 1.0}, {3, 4, 1.0}, {4, 5, 1.0}, {3, 5, 1.0}}, {2}));
}

Fixture interval_fixture(Index n_nodes) {
  return make_fixture("interval" + std::to_string(n_nodes),
                      build_interval(n_nodes, 1.0 / static_cast<double>(n_nodes - 1), IntervalEnds::both));
}

Fixture square_grid_fixture(Index m) {
  return make_fixture("grid" + std::to_string(m) + "x" + std::to_string(m), build_grid(m, m));
}

Fixture l_shape_fixture(Index m) {
  GridMask mask = GridMask::full(m, m);
  const Index cut = m / 2;
  for (Index r = 0; r < cut; ++r)
    for (Index c = m - cut; c < m; ++c) mask.cells[static_cast<std::size_t>(r * m + c)] = false;
  return make_fixture("lshape" + std::to_string(m), build_grid(m, m, mask));
}

Fixture unit_square_fixture(double h, double shift, MassMode mass_mode) {
  const auto cols = static_cast<Index>(std::lround(1.0 / h)) + 1;
  return make_fixture("unitsquare_h" + std::to_string(cols - 1), build_grid(cols, cols, std::nullopt, h), shift,
                      mass_mode);
}

DomainSpec random_graph(std::uint64_t seed, Index max_nodes) {
  std::mt19937_64 rng(seed);
  auto uniform_int = [&](Index lo, Index hi) { return std::uniform_int_distribution<Index>(lo, hi)(rng); };
  std::uniform_real_distribution<double> weight(0.2, 2.0);

  const Index n = uniform_int(4, std::max<Index>(4, max_nodes));
  const bool with_island = n >= 8 && uniform_int(0, 3) == 0;
  const Index island = with_island ? uniform_int(3, std::min<Index>(6, n - 5)) : 0;
  const Index main = n - island;

  std::vector<Edge> edges;
  std::set<std::pair<Index, Index>> used;
  auto add = [&](Index i, Index j) {
    if (i == j) return;
    if (i > j) std::swap(i, j);
    if (used.insert({i, j}).second) edges.push_back({i, j, weight(rng)});
  };
  for (Index v = 1; v < main; ++v) add(uniform_int(0, v - 1), v);
  const Index extra = uniform_int(0, main);
  for (Index e = 0; e < extra; ++e) add(uniform_int(0, main - 1), uniform_int(0, main - 1));
  for (Index v = 0; v < island; ++v) add(main + v, main + (v + 1) % island);

  const Index n_boundary = uniform_int(1, std::max<Index>(1, main / 3));
  std::vector<Index> nodes(static_cast<std::size_t>(main));
  for (Index v = 0; v < main; ++v) nodes[v] = v;
  std::shuffle(nodes.begin(), nodes.end(), rng);
  std::vector<Index> boundary(nodes.begin(), nodes.begin() + n_boundary);
  return build_graph(n, std::move(edges), std::move(boundary));
}

std::vector<Fixture> standard_fixtures() {
  std::vector<Fixture> out;
  out.push_back(p3_fixture());
  out.push_back(interval_fixture(10));
  out.push_back(square_grid_fixture(8));
  out.push_back(square_grid_fixture(10));
  out.push_back(l_shape_fixture(10));
  out.push_back(p3_triangle_fixture());
  return out;
}

}  // namespace dtnlab
