#include "maxsmooth/mesh.hpp"

#include "maxsmooth/error.hpp"
#include "maxsmooth/stats.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

namespace maxsmooth {

namespace {

double cross(const Point2& o, const Point2& a, const Point2& b) {
  return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

// Andrew's monotone chain, counter-clockwise, collinear points dropped.
std::vector<Point2> convex_hull(std::vector<Point2> p) {
  std::sort(p.begin(), p.end(), [](const Point2& a, const Point2& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  if (p.size() < 3) return p;
  std::vector<Point2> h(2 * p.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    while (k >= 2 && cross(h[k - 2], h[k - 1], p[i]) <= 0) --k;
    h[k++] = p[i];
  }
  for (std::size_t i = p.size() - 1, t = k + 1; i > 0; --i) {
    while (k >= t && cross(h[k - 2], h[k - 1], p[i - 1]) <= 0) --k;
    h[k++] = p[i - 1];
  }
  h.resize(k - 1);
  return h;
}

double polygon_area(const std::vector<Point2>& poly) {
  double a = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const auto& p = poly[i];
    const auto& q = poly[(i + 1) % poly.size()];
    a += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * a;
}

// Closed curve at distance r outside a convex CCW polygon, resampled at even
// arc-length spacing close to `spacing`.
std::vector<Point2> offset_ring(const std::vector<Point2>& hull, double r, double spacing) {
  std::vector<Point2> dense;
  const std::size_t m = hull.size();
  for (std::size_t k = 0; k < m; ++k) {
    const Point2& prev = hull[(k + m - 1) % m];
    const Point2& cur = hull[k];
    const Point2& next = hull[(k + 1) % m];
    const Point2 e_in = cur - prev;
    const Point2 e_out = next - cur;
    double a0 = std::atan2(-e_in.x(), e_in.y());
    double a1 = std::atan2(-e_out.x(), e_out.y());
    while (a1 < a0) a1 += 2.0 * std::numbers::pi;
    const int steps = std::max(1, static_cast<int>(std::ceil((a1 - a0) / (std::numbers::pi / 36.0))));
    for (int s = 0; s <= steps; ++s) {
      const double a = a0 + (a1 - a0) * s / steps;
      dense.emplace_back(cur.x() + r * std::cos(a), cur.y() + r * std::sin(a));
    }
  }
  std::vector<double> cum(dense.size() + 1, 0.0);
  for (std::size_t i = 0; i < dense.size(); ++i) {
    cum[i + 1] = cum[i] + (dense[(i + 1) % dense.size()] - dense[i]).norm();
  }
  const double total = cum.back();
  const int n = std::max(8, static_cast<int>(std::lround(total / spacing)));
  std::vector<Point2> out;
  out.reserve(n);
  std::size_t seg = 0;
  for (int j = 0; j < n; ++j) {
    const double target = total * j / n;
    while (seg + 1 < cum.size() && cum[seg + 1] < target) ++seg;
    const double len = cum[seg + 1] - cum[seg];
    const double t = len > 0.0 ? (target - cum[seg]) / len : 0.0;
    const Point2& a = dense[seg];
    const Point2& b = dense[(seg + 1) % dense.size()];
    out.push_back(a + t * (b - a));
  }
  return out;
}

struct Tri {
  std::array<int, 3> v;
  double cx, cy, r2;
};

Tri make_tri(int a, int b, int c, const std::vector<Point2>& q) {
  const double ax = q[a].x(), ay = q[a].y();
  const double bx = q[b].x() - ax, by = q[b].y() - ay;
  const double cx = q[c].x() - ax, cy = q[c].y() - ay;
  const double d = 2.0 * (bx * cy - by * cx);
  const double b2 = bx * bx + by * by;
  const double c2 = cx * cx + cy * cy;
  const double ux = (cy * b2 - by * c2) / d;
  const double uy = (bx * c2 - cx * b2) / d;
  return Tri{{a, b, c}, ax + ux, ay + uy, ux * ux + uy * uy};
}

}  // namespace

double Mesh::area() const {
  double a = 0.0;
  for (const auto& t : triangles) a += 0.5 * cross(nodes[t[0]], nodes[t[1]], nodes[t[2]]);
  return a;
}

std::vector<std::array<int, 3>> delaunay(std::span<const Point2> pts) {
  const int n = static_cast<int>(pts.size());
  if (n < 3) throw InputError("triangulation needs at least three points");
  Point2 lo = pts[0], hi = pts[0];
  for (const auto& p : pts) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const Point2 c = 0.5 * (lo + hi);
  const double span = std::max((hi - lo).maxCoeff(), 1e-12);

  // Predicates run on slightly perturbed copies so that cocircular and
  // collinear configurations resolve consistently.
  std::vector<Point2> q(n + 3);
  for (int i = 0; i < n; ++i) {
    const auto h1 = stats::mix_seed(0x5eed, static_cast<std::uint64_t>(i));
    const auto h2 = stats::mix_seed(0xfeed, static_cast<std::uint64_t>(i));
    const double jx = (static_cast<double>(h1 >> 11) / 9007199254740992.0 - 0.5) * 1e-9 * span;
    const double jy = (static_cast<double>(h2 >> 11) / 9007199254740992.0 - 0.5) * 1e-9 * span;
    q[i] = pts[i] - c + Point2(jx, jy);
  }
  const double big = 50.0 * span;
  q[n] = Point2(-big, -big);
  q[n + 1] = Point2(big, -big);
  q[n + 2] = Point2(0.0, big);

  std::vector<Tri> tris;
  tris.reserve(2 * n + 8);
  tris.push_back(make_tri(n, n + 1, n + 2, q));

  std::vector<std::size_t> bad;
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i) {
    const double px = q[i].x(), py = q[i].y();
    bad.clear();
    for (std::size_t t = 0; t < tris.size(); ++t) {
      const double dx = px - tris[t].cx, dy = py - tris[t].cy;
      if (dx * dx + dy * dy < tris[t].r2) bad.push_back(t);
    }
    edges.clear();
    for (std::size_t t : bad) {
      const auto& v = tris[t].v;
      for (int e = 0; e < 3; ++e) edges.emplace_back(v[e], v[(e + 1) % 3]);
    }
    std::vector<std::pair<int, int>> boundary;
    for (const auto& e : edges) {
      const bool shared = std::any_of(edges.begin(), edges.end(), [&](const auto& f) {
        return f.first == e.second && f.second == e.first;
      });
      if (!shared) boundary.push_back(e);
    }
    std::sort(bad.begin(), bad.end(), std::greater<>());
    for (std::size_t t : bad) {
      tris[t] = tris.back();
      tris.pop_back();
    }
    for (const auto& [a, b] : boundary) tris.push_back(make_tri(a, b, i, q));
  }

  std::vector<std::array<int, 3>> out;
  out.reserve(tris.size());
  for (const auto& t : tris) {
    if (t.v[0] >= n || t.v[1] >= n || t.v[2] >= n) continue;
    out.push_back(t.v);
  }
  std::sort(out.begin(), out.end());
  return out;
}

Mesh build_mesh(std::span<const Point2> sites, const MeshOptions& opts) {
  if (sites.size() < 3) throw InputError("mesh construction needs at least three sites");
  for (const auto& s : sites) {
    if (!s.allFinite()) throw InputError("site coordinates must be finite");
  }
  const auto hull = convex_hull(std::vector<Point2>(sites.begin(), sites.end()));
  double diameter = 0.0;
  for (std::size_t i = 0; i < hull.size(); ++i)
    for (std::size_t j = i + 1; j < hull.size(); ++j) diameter = std::max(diameter, (hull[i] - hull[j]).norm());
  if (hull.size() < 3 || std::abs(polygon_area(hull)) < 1e-10 * diameter * diameter) {
    throw InputError("sites are collinear; cannot build a two-dimensional mesh");
  }
  const double dup_tol = 1e-9 * diameter;
  for (std::size_t i = 0; i < sites.size(); ++i)
    for (std::size_t j = i + 1; j < sites.size(); ++j)
      if ((sites[i] - sites[j]).norm() <= dup_tol)
        throw InputError("duplicate site coordinates at indices " + std::to_string(i) + " and " + std::to_string(j));

  Mesh mesh;
  mesh.diameter = diameter;
  mesh.nodes.assign(sites.begin(), sites.end());

  if (opts.refine_interior) {
    const double h = diameter / opts.interior_divisor;
    Point2 lo = hull[0], hi = hull[0];
    for (const auto& p : hull) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    const double dy = h * std::sqrt(3.0) / 2.0;
    int row = 0;
    for (double y = lo.y(); y <= hi.y(); y += dy, ++row) {
      for (double x = lo.x() + (row % 2 ? h / 2.0 : 0.0); x <= hi.x(); x += h) {
        const Point2 p(x, y);
        bool inside = true;
        for (std::size_t k = 0; k < hull.size() && inside; ++k) {
          const Point2& a = hull[k];
          const Point2& b = hull[(k + 1) % hull.size()];
          inside = cross(a, b, p) / (b - a).norm() >= 0.3 * h;
        }
        if (!inside) continue;
        const bool near_site = std::any_of(sites.begin(), sites.end(),
                                           [&](const Point2& s) { return (s - p).norm() < 0.5 * h; });
        if (!near_site) mesh.nodes.push_back(p);
      }
    }
  }

  const double buffer = opts.buffer_fraction * diameter;
  const double coarse = diameter / opts.buffer_divisor;
  for (const auto& p : offset_ring(hull, 0.5 * buffer, coarse)) mesh.nodes.push_back(p);
  const std::size_t outer_begin = mesh.nodes.size();
  for (const auto& p : offset_ring(hull, buffer, coarse)) mesh.nodes.push_back(p);
  mesh.boundary.assign(mesh.nodes.size(), false);
  for (std::size_t i = outer_begin; i < mesh.nodes.size(); ++i) mesh.boundary[i] = true;

  const double min_area = 1e-12 * diameter * diameter;
  for (auto t : delaunay(mesh.nodes)) {
    const double a = 0.5 * cross(mesh.nodes[t[0]], mesh.nodes[t[1]], mesh.nodes[t[2]]);
    if (std::abs(a) < min_area) continue;
    if (a < 0) std::swap(t[1], t[2]);
    mesh.triangles.push_back(t);
  }
  return mesh;
}

std::optional<Location> locate(const Mesh& mesh, const Point2& p) {
  const double snap = 1e-9 * std::max(mesh.diameter, 1.0);
  std::optional<Location> best;
  double best_min = -std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& v = mesh.triangles[t];
    const Point2& a = mesh.nodes[v[0]];
    const Point2& b = mesh.nodes[v[1]];
    const Point2& c = mesh.nodes[v[2]];
    for (int k = 0; k < 3; ++k) {
      if ((mesh.nodes[v[k]] - p).norm() <= snap) {
        Location loc;
        loc.triangle = static_cast<int>(t);
        loc.nodes = v;
        loc.weights = {0.0, 0.0, 0.0};
        loc.weights[k] = 1.0;
        return loc;
      }
    }
    const double area = cross(a, b, c);
    const double w0 = cross(p, b, c) / area;
    const double w1 = cross(a, p, c) / area;
    const double w2 = 1.0 - w0 - w1;
    const double wmin = std::min({w0, w1, w2});
    if (wmin > best_min) {
      best_min = wmin;
      Location loc;
      loc.triangle = static_cast<int>(t);
      loc.nodes = v;
      loc.weights = {w0, w1, w2};
      best = loc;
    }
  }
  if (!best || best_min < -1e-10) return std::nullopt;
  double sum = 0.0;
  for (double& w : best->weights) {
    w = std::max(w, 0.0);
    sum += w;
  }
  for (double& w : best->weights) w /= sum;
  return best;
}

void write_mesh(std::ostream& os, const Mesh& mesh) {
  os.precision(17);
  os << "# maxsmooth mesh v1\n";
  os << "diameter " << mesh.diameter << "\n";
  for (std::size_t i = 0; i < mesh.nodes.size(); ++i) {
    os << "node " << i << ' ' << mesh.nodes[i].x() << ' ' << mesh.nodes[i].y() << ' '
       << (mesh.boundary[i] ? 1 : 0) << "\n";
  }
  for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
    const auto& t = mesh.triangles[i];
    os << "tri " << i << ' ' << t[0] << ' ' << t[1] << ' ' << t[2] << "\n";
  }
}

Mesh read_mesh(std::istream& is) {
  Mesh mesh;
  std::string line;
  long lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string kind;
    ls >> kind;
    if (kind == "diameter") {
      ls >> mesh.diameter;
    } else if (kind == "node") {
      std::size_t i;
      double x, y;
      int b;
      if (!(ls >> i >> x >> y >> b) || i != mesh.nodes.size()) throw DataError("malformed node record", lineno);
      mesh.nodes.emplace_back(x, y);
      mesh.boundary.push_back(b != 0);
    } else if (kind == "tri") {
      std::size_t i;
      std::array<int, 3> t{};
      if (!(ls >> i >> t[0] >> t[1] >> t[2]) || i != mesh.triangles.size())
        throw DataError("malformed triangle record", lineno);
      mesh.triangles.push_back(t);
    } else {
      throw DataError("unknown mesh record '" + kind + "'", lineno);
    }
    if (ls.fail()) throw DataError("malformed mesh record", lineno);
  }
  for (const auto& t : mesh.triangles)
    for (int v : t)
      if (v < 0 || static_cast<std::size_t>(v) >= mesh.nodes.size()) throw DataError("triangle references a missing node");
  return mesh;
}

}  // namespace maxsmooth
