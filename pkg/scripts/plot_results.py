"""Plot mean SSIM and PSNR against sampling rate from an experiment CSV.

One line per algorithm; means are taken over images (and standoffs, if the
CSV came from a sweep). Writes a two-panel PNG next to the CSV unless
--out is given.

Usage: python3 scripts/plot_results.py results.csv [--out plot.png]
"""

import argparse
import csv
import sys
from collections import defaultdict

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    sys.exit("this script needs matplotlib (pip install matplotlib)")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("csv_path")
    parser.add_argument("--out", default=None)
    args = parser.parse_args()

    by_cell = defaultdict(list)
    with open(args.csv_path) as fh:
        for row in csv.DictReader(fh):
            rate = float(row["sampling_rate"])
            by_cell[(row["algorithm"], rate)].append(
                (float(row["ssim"]), float(row["psnr_db"]))
            )
    if not by_cell:
        sys.exit(f"no rows in {args.csv_path}")

    algorithms = sorted({algo for algo, _ in by_cell})
    fig, (ax_ssim, ax_psnr) = plt.subplots(1, 2, figsize=(10, 4))
    for algo in algorithms:
        rates = sorted(r for a, r in by_cell if a == algo)
        ssims = [sum(v[0] for v in by_cell[(algo, r)]) / len(by_cell[(algo, r)]) for r in rates]
        psnrs = [sum(v[1] for v in by_cell[(algo, r)]) / len(by_cell[(algo, r)]) for r in rates]
        ax_ssim.plot(rates, ssims, marker="o", label=algo)
        ax_psnr.plot(rates, psnrs, marker="o", label=algo)
    for ax, name in ((ax_ssim, "mean SSIM"), (ax_psnr, "mean PSNR (dB)")):
        ax.set_xlabel("sampling rate m/n")
        ax.set_ylabel(name)
        ax.set_xscale("log", base=2)
        ax.grid(True, alpha=0.3)
        ax.legend()
    fig.tight_layout()
    out = args.out or args.csv_path.rsplit(".", 1)[0] + ".png"
    fig.savefig(out, dpi=150)
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
