"""Jump rate trails on a 2D lattice patch, simple vs remnant walks."""

from scipy.spatial import cKDTree

from particle_forge import Graph, trail_table
from particle_forge.random_graphs import integer_lattice

pts = integer_lattice(2, 3)
pairs = cKDTree(pts.coords).query_pairs(1.0 + 1e-9)
g = Graph.from_edges(len(pts.coords), sorted(pairs))
origin = int(((pts.coords ** 2).sum(axis=1)).argmin())
rates = [1.0 + 0.1 * g.degree(v) for v in range(g.n)]

t = trail_table(g, rates, origin, n_max=6)
print(" n   raw_simple   raw_double   theta_simple  theta_double")
for i, n in enumerate(t.lengths):
    print(f"{n:2d}  {t.raw_simple[i]:11.3f}  {t.raw_double[i]:11.3f}"
          f"  {t.theta_simple[i]:12.4f}  {t.theta_double[i]:12.4f}")
