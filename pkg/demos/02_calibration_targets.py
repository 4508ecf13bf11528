"""
Calibration distributions
=========================

Training pulls the sorted code similarities of a batch toward the
quantiles of a Beta law stretched onto [-1, 1]. For comparison, the
Hamming distance of two independent random codes follows B(K, 1/2).
"""

import numpy as np

from sdchash import BetaDistribution, BinomialBucketDistribution, calibration_targets

# quantiles of Beta(a, a) for a few shapes; larger a concentrates mass near 0.5
for a in (1, 2, 5, 10):
    dist = BetaDistribution(a, a)
    qs = [dist.icdf(z) for z in (0.05, 0.25, 0.5, 0.75, 0.95)]
    print(f"Beta({a},{a}) quantiles:", " ".join(f"{q:.4f}" for q in qs))

# 2016 pairs is one batch of 64 items; targets run over the full similarity range
targets = calibration_targets(2016, BetaDistribution(5, 5))
print(f"\n{targets.size} targets from {targets[0]:+.3f} to {targets[-1]:+.3f}, median {np.median(targets):+.4f}")

# a coarse text histogram of those targets
counts, edges = np.histogram(targets, bins=10, range=(-1, 1))
for c, lo in zip(counts, edges):
    print(f"{lo:+.1f} {'#' * (c // 10)}")

# the discrete law random codes would follow at 64 bits
law = BinomialBucketDistribution(64)
pmf = law.pmf_table()
print(f"\nB(64, 1/2): P(d=32) = {pmf[32]:.4f}, central 95% of distances in "
      f"[{law.icdf(0.025)}, {law.icdf(0.975)}] out of 0..64")
