"""
Fuzzy trust inference in a few lines
====================================

Three feedback scores go in, one crisp trust value and a label come out.
"""

import numpy as np

from frtrust import FuzzyEngine, FuzzyPartition

engine = FuzzyEngine()
print(engine.evaluate((0.1, 0.5, 0.9)))
print(engine.evaluate((0.5, 0.5, 0.9)))

# the pessimistic corner sits at the centre of area of the Low set
print("all zero:", engine.evaluate((0, 0, 0)))

# the triangular partition is also available as a preset
tri = FuzzyEngine(FuzzyPartition.triangular())
print("triangular, all zero:", tri.evaluate((0, 0, 0)))

# sweep the first input with the others held
xs = np.linspace(0, 1, 11)
for x in xs:
    print(f"{x:4.1f}  {engine.crisp((x, 0.5, 0.9)):.3f}")

# a coarse surface over (p1, p2) with p3 fixed
grid = np.linspace(0, 1, 6)
surface = np.array([[engine.crisp((a, b, 0.5)) for b in grid] for a in grid])
print(np.round(surface, 2))
