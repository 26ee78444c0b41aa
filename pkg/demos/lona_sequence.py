"""
Offline greedy schedule
=======================

LONA fixes the waiting times ahead of time by averaging the expected
posterior variance over every outcome string the schedule could produce.
"""
from fixedbasis import generate_lona_sequence

seq, diag = generate_lona_sequence(1.0, 12, return_diagnostics=True)
print("sequence:", seq)

# Branches are merged when they share "+" counts per waiting multiple,
# which keeps growth far below 2**k.
for d in diag:
    print(f"step {d['step']:2d}  m={d['m']:2d}  branches={d['branches']:5d}  E[V]={d['score']:.3e}")
