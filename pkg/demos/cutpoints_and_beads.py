"""Sample one excursion, find its cut vertices, split it into beads and
draw it.

    python3 demos/cutpoints_and_beads.py [seed] [out.svg]
"""
import sys

import numpy as np

from brownbeads import extract_beads, find_cuttimes, sample_excursion
from brownbeads.io import render_svg

seed = int(sys.argv[1]) if len(sys.argv) > 1 else 1
out = sys.argv[2] if len(sys.argv) > 2 else "excursion.svg"

p = sample_excursion(20_000, 1e-4, seed)
cuts = find_cuttimes(p)
print(f"{p.n} steps, {len(cuts)} cut vertices, max height {p.y.max():.3f}")

beads = extract_beads(p, cuts, n_walkers=1000, stream=seed)
if beads:
    sizes = np.array([b.delta_a for b in beads])
    big = max(beads, key=lambda b: b.delta_a)
    print(f"{len(beads)} beads; total capacity gain {sizes.sum():.4f}")
    print(f"largest bead: steps {big.start_idx}..{big.end_idx}, "
          f"size {big.delta_a:.4f} +- {big.stderr:.4f}, diameter {big.diameter:.3f}")

with open(out, "w") as f:
    f.write(render_svg(p, cuts))
print("wrote", out)
