"""Write the curve data for the g function and the h_n comparison as CSV."""

import sys
from pathlib import Path

from cutsync.cli import emit_figure_data

out = Path(sys.argv[1] if len(sys.argv) > 1 else "results")
out.mkdir(parents=True, exist_ok=True)
for which in ("g", "hn_comparison"):
    (out / f"figure_{which}.csv").write_text(emit_figure_data(which, points=400))
    print("wrote", out / f"figure_{which}.csv")
