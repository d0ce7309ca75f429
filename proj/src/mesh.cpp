#include "dtnlab/mesh.hpp"

#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <utility>

namespace dtnlab {

const char* to_string(DomainKind k) {
  switch (k) {
    case DomainKind::interval1d: return "interval1d";
    case DomainKind::grid2d: return "grid2d";
    case DomainKind::graph: return "graph";
  }
  return "unknown";
}

std::vector<Index> DomainSpec::boundary_free_components() const {
  std::vector<Index> out;
  for (std::size_t c = 0; c < component_has_boundary.size(); ++c)
    if (!component_has_boundary[c]) out.push_back(static_cast<Index>(c));
  return out;
}

bool DomainSpec::is_boundary(Index node) const {
  return std::binary_search(boundary.begin(), boundary.end(), node);
}

GridMask GridMask::full(Index rows, Index cols) {
  return GridMask{rows, cols, std::vector<bool>(static_cast<std::size_t>(rows * cols), true)};
}

namespace {

struct UnionFind {
  std::vector<Index> parent;
  explicit UnionFind(Index n) : parent(static_cast<std::size_t>(n)) {
    std::iota(parent.begin(), parent.end(), Index{0});
  }
  Index find(Index x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(Index a, Index b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

// Labels components in order of their smallest node, flags which ones carry
// a boundary node, and rejects domains without interior or boundary.
void finalize(DomainSpec& d) {
  if (d.boundary.empty()) throw Error(ErrorKind::invalid_domain, "boundary set is empty");
  if (static_cast<Index>(d.boundary.size()) >= d.node_count)
    throw Error(ErrorKind::invalid_domain, "no interior nodes: every node is a boundary node");

  UnionFind uf(d.node_count);
  for (const Edge& e : d.adjacency) uf.unite(e.i, e.j);
  d.component_ids.assign(static_cast<std::size_t>(d.node_count), -1);
  std::vector<Index> label_of_root(static_cast<std::size_t>(d.node_count), -1);
  Index next = 0;
  for (Index v = 0; v < d.node_count; ++v) {
    Index r = uf.find(v);
    if (label_of_root[r] < 0) label_of_root[r] = next++;
    d.component_ids[v] = label_of_root[r];
  }
  d.component_has_boundary.assign(static_cast<std::size_t>(next), false);
  for (Index b : d.boundary) d.component_has_boundary[d.component_ids[b]] = true;

  if (d.node_volume.empty()) d.node_volume.assign(static_cast<std::size_t>(d.node_count), 1.0);
  if (d.edge_fraction.empty()) d.edge_fraction.assign(d.adjacency.size(), 1.0);
}

}  // namespace

DomainSpec build_interval(Index n_nodes, double h, IntervalEnds ends) {
  if (n_nodes < 2) throw Error(ErrorKind::invalid_argument, "interval needs at least 2 nodes");
  if (!(h > 0) || !std::isfinite(h)) throw Error(ErrorKind::invalid_argument, "spacing h must be positive");
  DomainSpec d;
  d.kind = DomainKind::interval1d;
  d.node_count = n_nodes;
  d.spacing = h;
  const double w = 1.0 / (h * h);
  for (Index i = 0; i + 1 < n_nodes; ++i) d.adjacency.push_back({i, i + 1, w});
  if (ends == IntervalEnds::both) d.boundary.push_back(0);
  d.boundary.push_back(n_nodes - 1);
  for (Index i = 0; i < n_nodes; ++i) d.coordinates.push_back({static_cast<double>(i) * h, 0.0});
  d.node_volume.assign(static_cast<std::size_t>(n_nodes), 1.0);
  d.node_volume.front() = 0.5;
  d.node_volume.back() = 0.5;
  d.edge_fraction.assign(d.adjacency.size(), 1.0);
  finalize(d);
  return d;
}

DomainSpec build_grid(Index rows, Index cols, const std::optional<GridMask>& mask,
                      std::optional<double> spacing) {
  if (rows < 1 || cols < 1) throw Error(ErrorKind::invalid_argument, "grid dimensions must be positive");
  const GridMask m = mask ? *mask : GridMask::full(rows, cols);
  if (m.rows != rows || m.cols != cols || static_cast<Index>(m.cells.size()) != rows * cols)
    throw Error(ErrorKind::invalid_argument, "mask shape does not match grid dimensions");
  const double h = spacing ? *spacing : 1.0 / static_cast<double>(cols + 1);
  if (!(h > 0) || !std::isfinite(h)) throw Error(ErrorKind::invalid_argument, "spacing h must be positive");

  std::vector<Index> id(static_cast<std::size_t>(rows * cols), -1);
  Index count = 0;
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c)
      if (m.at(r, c)) id[r * cols + c] = count++;
  if (count == 0) throw Error(ErrorKind::invalid_domain, "mask selects no cells");
  if (count < 2) throw Error(ErrorKind::invalid_domain, "mask selects fewer than 2 cells");

  auto in = [&](Index r, Index c) { return r >= 0 && c >= 0 && r < rows && c < cols && m.at(r, c); };
  // A dual cell is the unit square with corners (r,c)..(r+1,c+1); it counts
  // when all four corners are masked in.
  auto cell = [&](Index r, Index c) { return in(r, c) && in(r + 1, c) && in(r, c + 1) && in(r + 1, c + 1); };

  DomainSpec d;
  d.kind = DomainKind::grid2d;
  d.node_count = count;
  d.spacing = h;
  const double w = 1.0 / (h * h);
  d.coordinates.resize(static_cast<std::size_t>(count));
  d.node_volume.resize(static_cast<std::size_t>(count));
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) {
      if (!m.at(r, c)) continue;
      const Index v = id[r * cols + c];
      d.coordinates[v] = {static_cast<double>(c + 1) * h, static_cast<double>(r + 1) * h};
      const int neighbours = int(in(r - 1, c)) + int(in(r + 1, c)) + int(in(r, c - 1)) + int(in(r, c + 1));
      if (neighbours < 4) d.boundary.push_back(v);
      const int cells = int(cell(r - 1, c - 1)) + int(cell(r - 1, c)) + int(cell(r, c - 1)) + int(cell(r, c));
      d.node_volume[v] = std::max(cells, 1) / 4.0;
      // Edges to the right and downwards keep i < j in row-major numbering.
      if (in(r, c + 1)) {
        const int shared = int(cell(r - 1, c)) + int(cell(r, c));
        d.adjacency.push_back({v, id[r * cols + c + 1], w});
        d.edge_fraction.push_back(std::max(shared, 1) / 2.0);
      }
      if (in(r + 1, c)) {
        const int shared = int(cell(r, c - 1)) + int(cell(r, c));
        d.adjacency.push_back({v, id[(r + 1) * cols + c], w});
        d.edge_fraction.push_back(std::max(shared, 1) / 2.0);
      }
    }
  }
  // Keep adjacency sorted by (i, j) with fractions attached.
  std::vector<std::size_t> order(d.adjacency.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::pair(d.adjacency[a].i, d.adjacency[a].j) < std::pair(d.adjacency[b].i, d.adjacency[b].j);
  });
  std::vector<Edge> edges;
  std::vector<double> fractions;
  for (std::size_t k : order) {
    edges.push_back(d.adjacency[k]);
    fractions.push_back(d.edge_fraction[k]);
  }
  d.adjacency = std::move(edges);
  d.edge_fraction = std::move(fractions);
  finalize(d);
  return d;
}

DomainSpec build_graph(Index node_count, std::vector<Edge> edges, std::vector<Index> boundary) {
  if (node_count < 1) throw Error(ErrorKind::invalid_argument, "node count must be positive");
  std::set<std::pair<Index, Index>> seen;
  for (Edge& e : edges) {
    if (e.i < 0 || e.j < 0 || e.i >= node_count || e.j >= node_count)
      throw Error(ErrorKind::invalid_argument,
                  "edge (" + std::to_string(e.i) + "," + std::to_string(e.j) + ") out of range");
    if (e.i == e.j) throw Error(ErrorKind::invalid_argument, "self-loop at node " + std::to_string(e.i));
    if (!(e.weight > 0) || !std::isfinite(e.weight))
      throw Error(ErrorKind::invalid_argument, "edge weights must be positive");
    if (e.i > e.j) std::swap(e.i, e.j);
    if (!seen.insert({e.i, e.j}).second)
      throw Error(ErrorKind::invalid_argument,
                  "duplicate edge (" + std::to_string(e.i) + "," + std::to_string(e.j) + ")");
  }
  std::sort(edges.begin(), edges.end(),
            [](const Edge& a, const Edge& b) { return std::pair(a.i, a.j) < std::pair(b.i, b.j); });
  for (Index b : boundary)
    if (b < 0 || b >= node_count)
      throw Error(ErrorKind::invalid_argument, "boundary index " + std::to_string(b) + " out of range");
  std::sort(boundary.begin(), boundary.end());
  boundary.erase(std::unique(boundary.begin(), boundary.end()), boundary.end());

  DomainSpec d;
  d.kind = DomainKind::graph;
  d.node_count = node_count;
  d.adjacency = std::move(edges);
  d.boundary = std::move(boundary);
  finalize(d);
  return d;
}

IndexSplit make_split(const DomainSpec& domain) {
  IndexSplit s;
  s.boundary = domain.boundary;
  for (Index v = 0; v < domain.node_count; ++v)
    if (!domain.is_boundary(v)) s.interior.push_back(v);
  s.permutation = s.interior;
  s.permutation.insert(s.permutation.end(), s.boundary.begin(), s.boundary.end());
  return s;
}

GridMask parse_mask(std::istream& in) {
  GridMask m;
  std::string line;
  Index line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (m.cols == 0) m.cols = static_cast<Index>(line.size());
    if (static_cast<Index>(line.size()) != m.cols)
      throw Error(ErrorKind::parse_error, "mask line " + std::to_string(line_no) + " is not rectangular");
    for (char ch : line) {
      if (ch != '#' && ch != '.')
        throw Error(ErrorKind::parse_error,
                    "mask line " + std::to_string(line_no) + ": unexpected character '" + ch + "'");
      m.cells.push_back(ch == '#');
    }
    ++m.rows;
  }
  if (m.rows == 0) throw Error(ErrorKind::parse_error, "mask is empty");
  return m;
}

GridMask read_mask_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorKind::parse_error, "cannot open mask file " + path);
  return parse_mask(f);
}

DomainSpec parse_graph(std::istream& in) {
  std::string line;
  Index line_no = 0;
  Index nodes = -1;
  std::vector<Index> boundary;
  std::vector<Edge> edges;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('%'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string first;
    if (!(ls >> first)) continue;
    auto fail = [&](const std::string& msg) {
      throw Error(ErrorKind::parse_error, "graph line " + std::to_string(line_no) + ": " + msg);
    };
    if (nodes < 0) {
      std::string kw;
      std::string list;
      if (first != "nodes" || !(ls >> nodes) || !(ls >> kw) || kw != "boundary")
        fail("expected header 'nodes N boundary i,j,...'");
      ls >> list;
      std::istringstream bs(list);
      std::string tok;
      while (std::getline(bs, tok, ',')) {
        if (tok.empty()) continue;
        std::size_t used = 0;
        long long v = 0;
        try {
          v = std::stoll(tok, &used);
        } catch (...) {
          fail("bad boundary index '" + tok + "'");
        }
        if (used != tok.size()) fail("bad boundary index '" + tok + "'");
        boundary.push_back(static_cast<Index>(v));
      }
      std::string extra;
      if (ls >> extra) fail("trailing text after header");
      continue;
    }
    Edge e;
    std::istringstream es(line);
    std::string extra;
    if (!(es >> e.i >> e.j >> e.weight) || (es >> extra)) fail("expected edge 'i j w'");
    edges.push_back(e);
  }
  if (nodes < 0) throw Error(ErrorKind::parse_error, "graph file has no header");
  return build_graph(nodes, std::move(edges), std::move(boundary));
}

DomainSpec read_graph_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorKind::parse_error, "cannot open graph file " + path);
  return parse_graph(f);
}

}  // namespace dtnlab
