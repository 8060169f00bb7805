"""How much reference data does the retrieval pipeline need?

The sweep holds out one validation set per seed, then rebuilds the graph
from nested reference prefixes (the 10-trip reference is a prefix of the
50-trip one) so that sample size is the only thing changing within a
seed. Small references routinely miss whole conditional cells -- with
epsilon=0 smoothing an unseen option gets near-zero predicted mass, and
the KLD for that cell blows up, which is why the n=10 column is not just
worse but catastrophically so.

Run:  python demos/05_reference_size_sweep.py   (~3 s)
"""

from collections import defaultdict

import numpy as np

from preference_chain.evaluate import sweep_reference_sizes
from preference_chain.ingest import generate_synthetic, hour_conditioned_spec

pool = generate_synthetic(hour_conditioned_spec(), size=2000, seed=0)
sizes = (10, 20, 50, 100)
rows = sweep_reference_sizes(pool, sizes=sizes, seeds=range(5), n_validation=800)

by_size = defaultdict(lambda: defaultdict(list))
for n, seed, metric, value in rows:
    by_size[n][metric].append(value)

print(f"{len(pool)} trips in the pool, 800 held out per seed, 5 seeds\n")
print(f"{'n':>5}  {'mean KLD':>9}  {'min..max KLD':>17}  {'mean MAE':>9}")
for n in sizes:
    klds = by_size[n]["kld"]
    maes = by_size[n]["mae"]
    print(
        f"{n:>5}  {np.mean(klds):9.4f}  "
        f"{min(klds):7.4f}..{max(klds):7.4f}  {np.mean(maes):9.5f}"
    )

print(
    "\nEach record's prediction is memoized on (profile, purpose, hour), so"
    "\nthe sweep cost grows with distinct queries, not validation size."
)
