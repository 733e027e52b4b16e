"""Build a Proben1-style ``glass1a.dt`` from the UCI glass table.

Accepts either the UCI ``glass.data`` file (id, 9 attributes, class 1..7)
or the MASS ``fgl`` CSV export (RI stored as (RI - 1.518) * 1000, class as
WinF/WinNF/Veh/Con/Tabl/Head).

Following the Proben1 conventions, every input is min-max scaled to [0, 1]
over the whole table, the six classes present become 1-of-6 outputs, the
rows are permuted once and split 107/53/54.  The permutation is seeded
(``--seed``) and is NOT Prechelt's original glass1 order, which cannot be
recovered from the UCI table.

    python scripts/make_glass1a.py fgl.csv src/neuroinherit/data/glass1a.dt
"""
import argparse
import csv
import sys

import numpy as np

FGL_CLASSES = {"WinF": 1, "WinNF": 2, "Veh": 3, "Con": 5, "Tabl": 6, "Head": 7}
CLASS_ORDER = (1, 2, 3, 5, 6, 7)


def read_table(path):
    with open(path, newline="") as fh:
        first = fh.readline()
        fh.seek(0)
        if first.lstrip().startswith('"') or "RI" in first:
            reader = csv.DictReader(fh)
            rows = []
            for rec in reader:
                ri = 1.518 + float(rec["RI"]) / 1000.0
                attrs = [ri] + [float(rec[k]) for k in ("Na", "Mg", "Al", "Si", "K", "Ca", "Ba", "Fe")]
                rows.append((attrs, FGL_CLASSES[rec["type"]]))
            return rows
        rows = []
        for line in fh:
            line = line.strip()
            if not line:
                continue
            fields = line.split(",")
            rows.append(([float(v) for v in fields[1:10]], int(fields[10])))
        return rows


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("source")
    parser.add_argument("dest")
    parser.add_argument("--seed", type=int, default=1)
    args = parser.parse_args(argv)

    rows = read_table(args.source)
    x = np.array([r[0] for r in rows])
    y = np.array([CLASS_ORDER.index(r[1]) for r in rows])
    lo, hi = x.min(axis=0), x.max(axis=0)
    x = (x - lo) / np.where(hi > lo, hi - lo, 1.0)

    perm = np.random.default_rng(args.seed).permutation(len(rows))
    n = len(rows)
    n_train = n // 2
    n_val = (n - n_train) // 2
    n_test = n - n_train - n_val

    with open(args.dest, "w", encoding="ascii") as out:
        out.write("# glass1a: UCI glass, min-max scaled inputs, 1-of-6 outputs\n")
        out.write(f"# classes (UCI codes) {CLASS_ORDER}; row permutation seed {args.seed}\n")
        out.write("bool_in=0\nreal_in=9\nbool_out=6\nreal_out=0\n")
        out.write(f"training_examples={n_train}\nvalidation_examples={n_val}\ntest_examples={n_test}\n")
        for i in perm:
            target = ["1" if c == y[i] else "0" for c in range(len(CLASS_ORDER))]
            out.write(" ".join(f"{v:.6f}" for v in x[i]) + " " + " ".join(target) + "\n")
    print(f"wrote {n} examples ({n_train}/{n_val}/{n_test}) to {args.dest}", file=sys.stderr)


if __name__ == "__main__":
    main()
