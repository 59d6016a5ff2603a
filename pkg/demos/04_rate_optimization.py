"""
Throughput-optimal target rate
==============================

Raising the target rate ``R0`` delivers more bits per successful slot but
makes every link fail more often. For each scheme we grid-search the rate
that maximises throughput at a few SNRs.
"""

from relaybuf.experiments import default_params, optimize_rate

base = default_params()
schemes = ("IBEP", "IOFP", "NIBEP", "NIOFP", "HU", "NIHU", "DT")
print("SNR (dB)  " + "  ".join(f"{s:>14}" for s in schemes))
for snr in (15.0, 25.0, 35.0):
    cells = []
    for s in schemes:
        r, tau = optimize_rate(base, s, snr)
        cells.append(f"{tau:6.3f} @ {r:4.2f}")
    print(f"{snr:8.0f}  " + "  ".join(f"{c:>14}" for c in cells))
print("\ncells: optimal throughput (bpcu) @ optimal R0 (bpcu)")
