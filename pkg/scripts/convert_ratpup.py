"""Convert the nlme ``RatPupWeight`` table (Rdatasets CSV layout) to the
bundled fixture format.

    python scripts/convert_ratpup.py RatPupWeight.csv out.csv

Input columns: rownames, weight, sex, Litter, Lsize, Treatment.
Output columns: pup_id, weight, sex, treatment, litter_id, litter_size,
with lower-case factor levels.
"""
import argparse
import csv
import sys


def convert(src, dst):
    with open(src, newline="") as fh:
        rows = list(csv.DictReader(fh))
    need = {"weight", "sex", "Litter", "Lsize", "Treatment"}
    if not rows or not need <= set(rows[0]):
        raise SystemExit(f"expected columns {sorted(need)}")
    with open(dst, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["pup_id", "weight", "sex", "treatment", "litter_id", "litter_size"])
        for i, r in enumerate(rows, 1):
            w.writerow([i, f"{float(r['weight']):.2f}", r["sex"].strip().lower(),
                        r["Treatment"].strip().lower(), r["Litter"].strip(), int(float(r["Lsize"]))])
    return len(rows)


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("src")
    ap.add_argument("dst")
    a = ap.parse_args()
    print(f"wrote {convert(a.src, a.dst)} pups to {a.dst}", file=sys.stderr)
