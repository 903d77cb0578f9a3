"""
What a reputation query costs
=============================

Asking the VO coordinator is one request and one reply. Finding the
same record through a Chord ring costs a lookup that grows with N.
"""

from frtrust.chord import build_ring, lookup
from frtrust.simulation import exp_chord

ring = build_ring([1, 12, 30, 41, 57], m=6)
print("fingers of 1:", ring.fingers[1])
print("lookup 1 -> key 45:", lookup(ring, 1, 45))

for row in exp_chord([16, 64, 256], samples=20_000):
    print(f"N={row['n']:>4}  hops={row['mean_hops']:.2f}  log2N={row['log2_n']:.0f}  "
          f"dht={row['dht_messages']:.2f}  coordinator={row['coordinator_messages']}")
