"""Split a small grid graph into four scan-direction DAGs and look at them."""
from dagrnn.grid import DIRECTIONS, Direction, GridSpec, Neighborhood, decompose, shortest_path_length

spec = GridSpec(3, 3, Neighborhood.N8)

for d in DIRECTIONS:
    dag = decompose(spec, d)
    print(d.value, "sources:", dag.sources(), "edges:", len(dag.edges()))

# predecessors of the centre vertex in each direction
for d in DIRECTIONS:
    print(d.value, "preds of centre:", sorted(decompose(spec, d).predecessors[4]))

# the diagonal edge halves the path from the far corner
for nb in (Neighborhood.N4, Neighborhood.N8):
    dag = decompose(GridSpec(3, 3, nb), Direction.NW)
    print(nb.name, "steps from bottom-right to top-left:", shortest_path_length(dag, 8, 0))
