"""Voter model on a small cycle: sample clocks, run, and print what happened."""

from particle_forge import Graph, make_kernel, run, sample_clocks
from particle_forge.ips.kernels import sites

g = Graph.from_edges(6, [(i, (i + 1) % 6) for i in range(6)])
voter = make_kernel("voter", k=1)
rates = [voter.rate_bound(s) for s in sites(g)]

clocks = sample_clocks(g, rates, horizon=2.0, seed=2024)
x0 = [1, 1, 1, 0, 0, 0]
traj = run(g, None, voter, x0, clocks)

changes = [e for e in traj.events if e.patch]
print(f"{clocks.count()} clock rings, {len(changes)} of them changed the configuration")
for e in changes[:10]:
    print(f"  t={e.time:.3f}  site {e.v}  patch {e.patch}")
final = traj.final()
print("final:", [final[v] for v in range(g.n)])
