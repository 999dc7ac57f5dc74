"""Plot sweep CSVs against their outage-limit references.

Documentation script: reads any number of sweep CSVs produced by the
simulate commands (or the acceptance suite's results/ cache) and renders a
log-PER figure with the matching outage-limit curves.

Usage: python demos/plot_sweeps.py out.png sweep1.csv [sweep2.csv ...]
"""

import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from divlat.sim import read_records


def main(argv):
    if len(argv) < 3:
        print(__doc__)
        return 1
    out, paths = argv[1], argv[2:]
    fig, ax = plt.subplots(figsize=(7, 5))
    for path in paths:
        recs = [r for r in read_records(path) if r.per > 0]
        db = [r.snr_db for r in recs]
        ax.semilogy(db, [r.per for r in recs], "o-", label=path)
        ax.semilogy(db, [r.pol_ref for r in recs], "--", alpha=0.6,
                    label=f"{path} (outage limit)")
    ax.set_xlabel("SNR (dB)")
    ax.set_ylabel("point error rate")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
