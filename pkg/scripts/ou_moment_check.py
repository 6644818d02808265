#!/usr/bin/env python3
"""Scalar fBm Ornstein-Uhlenbeck check: Monte Carlo E x(T)^2 against the double-integral oracle
for a few Hurst indices and step counts."""

import math

from nsfde.sfde import ou_scenario, picard_run
from nsfde.verify import ou_second_moment

print(f"{'H':>5} {'steps':>6} {'MC':>10} {'SE':>9} {'oracle':>10} {'z':>7}")
for h in (0.6, 0.75, 0.9):
    oracle = ou_second_moment(2.0, 1.0, h, 1.0)
    for steps in (16, 64):
        s = ou_scenario(h=h, n_steps=steps)
        x = picard_run(s).final.values[:, -1, 0]
        m = float((x**2).mean())
        se = float((x**2).std(ddof=1) / math.sqrt(x.size))
        print(f"{h:5.2f} {steps:6d} {m:10.5f} {se:9.5f} {oracle:10.6f} {(m - oracle) / se:7.2f}")
