"""Rate table over an image directory: bpsp per tau, mean row, and the tau trend.

    python3 scripts/bench_corpus.py tests/data --tau 0,1,2,4 -o results/bench.csv
"""
from __future__ import annotations

import argparse
import csv
import io
from collections import defaultdict
from contextlib import redirect_stdout
from pathlib import Path

from lprcodec.cli import run


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("directory")
    ap.add_argument("--tau", default="0,1,2,4")
    ap.add_argument("-o", "--output", default=None)
    ap.add_argument("--jobs", type=int, default=None)
    a = ap.parse_args()
    argv = ["bench", a.directory, "--tau", a.tau]
    if a.jobs:
        argv += ["--jobs", str(a.jobs)]
    buf = io.StringIO()
    with redirect_stdout(buf):
        code = run(argv)
    if code:
        raise SystemExit(code)
    text = buf.getvalue()
    if a.output:
        Path(a.output).parent.mkdir(parents=True, exist_ok=True)
        Path(a.output).write_text(text)
    rows = list(csv.DictReader(io.StringIO(text)))
    taus = sorted({int(r["tau"]) for r in rows})
    table = defaultdict(dict)
    for r in rows:
        table[Path(r["path"]).stem][int(r["tau"])] = float(r["bpsp_total"])
    print(f"{'image':<24}" + "".join(f"{'tau=' + str(t):>9}" for t in taus) + "  monotone")
    for name, by_tau in sorted(table.items()):
        vals = [by_tau[t] for t in taus]
        mono = all(b <= a for a, b in zip(vals, vals[1:]))
        print(f"{name:<24}" + "".join(f"{v:9.3f}" for v in vals) + f"  {mono}")
    means = [sum(t_[t] for t_ in table.values()) / len(table) for t in taus]
    print(f"{'mean':<24}" + "".join(f"{v:9.3f}" for v in means))


if __name__ == "__main__":
    main()
