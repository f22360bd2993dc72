"""Critical ratios K_T / K_c for the bundled power cases.

    python3 scripts/table1.py --out results/ [--with-at1] [--starts 100]
"""

import argparse
import json
from pathlib import Path

from cutsync.cli import derive_seed, dumps
from cutsync.maf import MultistartConfig
from cutsync.power import bundled_case_path, parse_case, table_csv, test_thresholds

CASES = ("toy3", "case9", "case14")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="results")
    ap.add_argument("--with-at1", action="store_true")
    ap.add_argument("--starts", type=int, default=100)
    ap.add_argument("--seed", type=int, default=42)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    reports = []
    for name in CASES:
        cfg = MultistartConfig(starts=args.starts, seed=derive_seed(args.seed, f"sweep.alpha.{name}"))
        rep = test_thresholds(parse_case(bundled_case_path(name)), with_at1=args.with_at1,
                              alpha_config=cfg, name=name)
        reports.append(rep)
        ratios = {k: v["ratio"] for k, v in rep.tests.items()}
        print(name, f"K_c={rep.K_c:.6g}",
              " ".join(f"{k}={100 * r:.2f}%" for k, r in ratios.items() if r is not None))
    (out / "table1.csv").write_text(table_csv(reports))
    (out / "table1.json").write_text(dumps([r.to_dict() for r in reports]))


if __name__ == "__main__":
    main()
