"""Sweep the adaptive parameter derivation and summarize how often the
achieved output size deviates from the requested one."""

from collections import Counter

from nirmalpool import harness

rows = harness.poolcheck(64)
deviating = [r for r in rows if r.deviates]
print(f"{len(rows)} (input, target) pairs; {len(deviating)} deviate from the request")

by_delta = Counter(r.achieved - r.target for r in deviating)
print("deviation histogram (achieved - requested):")
for delta in sorted(by_delta):
    print(f"  {delta:+3d}: {by_delta[delta]} cases")

print("\nexamples around the 28-pixel case:")
for r in rows:
    if r.h_in == 28 and r.target in (9, 10, 11, 13, 14, 15):
        flag = "DEVIATES" if r.deviates else "exact"
        print(f"  input 28 target {r.target:>2} -> window {r.window} "
              f"stride {r.stride} out {r.achieved}  {flag}")
