#!/usr/bin/env python3
"""Rademacher sums, the resolvent family acting on them, and the blow-up.

Driving the family {q R(q, A)} with q at the negated even multiplier
values splits every coupled pair into a kept half and a leaked ratio
(exactly 1/2 and 1/6 for the twisted lacunary sequence).  Concentrating
the input on one target block with the Holder-extremal profile turns the
leaked mass into a per-block lower bound L_k; whether L_k flattens or
diverges as the truncation grows separates the regular from the
non-regular exponents.
"""

from mrlab import (
    associated_operator,
    blowup_series,
    blowup_witness,
    rad_norm,
)
from mrlab.acceptance import check_lacunary_half_sixth

res = check_lacunary_half_sixth()
print("kept/leaked coefficients for the twisted lacunary family:")
print(" ", res.detail, "\n")

print("materialized witness vs closed form (powerlog, block 20, p = 4):")
rsum, qs, op, expected = blowup_witness("powerlog", 20, 4.0, alpha=0.25)
out = associated_operator(op, qs, rsum)
print(f"  input norm (disjoint mode)  {rad_norm(rsum, 'disjoint'):.12f}")
print(f"  output norm                 {rad_norm(out, 'disjoint'):.12f}")
print(f"  closed form                 {expected:.12f}\n")

ks = [100, 1000, 10000]
for family, alpha in (("powerlog", 0.25), ("power", 0.25), ("lacunary", None)):
    series = blowup_series(family, 4.0, alpha=alpha, block_counts=ks)
    vals = "  ".join(f"L({k}) = {v:.5f}" for k, v in zip(series.ks, series.lower))
    print(f"{family:9s}: {vals}   slope {series.slope:+.4f}")

print("\npowerlog doubles across two decades (the open-threshold failure);")
print("power flattens (the closed-threshold boundary case);")
print("the lacunary leak grows like k^(1/4).")
