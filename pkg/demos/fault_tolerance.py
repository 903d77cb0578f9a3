"""
An erroneous score against two reputation models
=================================================

A weighted sum of scores can leave [0, 1] when one term is wrong.
The fuzzy model cannot.
"""

from frtrust.simulation import exp_table3

print(" x    fuzzy   weighted-sum")
for row in exp_table3(y_fixed=0.2):
    print(f"{row['x']:.1f}  {row['fr_trust']:.3f}   {row['baseline']:.1f}")
