"""
Spotting malicious nodes
========================

100 nodes, 30% of them serve poor quality and lie when rating others.
"""

import numpy as np

from frtrust.simulation import ScenarioConfig, run_replicas, run_scenario

config = ScenarioConfig(n_nodes=100, malicious_fraction=0.3, rounds=20, seed=7)
report = run_scenario(config)

for key, value in report.summary().items():
    print(f"{key:>30}: {value}")

# trust of a few nodes over time
for node in range(5):
    kind = "malicious" if report.malicious[node] else "honest"
    print(node, kind, np.round(report.trust[::5, node], 3))

# averages over independent replicas
reports = run_replicas(config, 5)
print("mean precision", np.mean([r.precision for r in reports]))
print("mean recall   ", np.mean([r.recall for r in reports]))
print("baseline recall", np.mean([r.baseline_recall for r in reports]))
