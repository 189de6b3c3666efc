"""Serially correlated bit sources broaden the funnel plot.

Simulates the four self-transition settings, compares the spread of the
proportion of ones with the closed-form variance factor, and writes one
funnel SVG per setting into the output directory.

Run: python demos/02_markov_funnels.py [out_dir]
"""
import sys
from pathlib import Path

import numpy as np

from rngbias import funnel, markov, svg

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_output") / "markov"
out.mkdir(parents=True, exist_ok=True)

sizes = np.unique(np.rint(np.logspace(2, 5, 20)).astype(int))
for i, (p11, p00) in enumerate([(0.12, 0.12), (0.5, 0.5), (0.88, 0.88), (0.88, 0.5)]):
    params = markov.MarkovParams(p11, p00)
    th = markov.theory(params)
    sim = markov.funnel_simulation(params, sizes, replications=30, seed=i)
    props = sim.proportions.ravel()
    ns = np.repeat(sim.sizes, 30)
    envs = [funnel.EnvelopeSpec(1.96, 1.0, th.wp), funnel.EnvelopeSpec(1.96, th.v_factor, th.wp)]
    inside = [funnel.inside_flags(props, ns, e).mean() for e in envs]
    # measured broadening: spread of the proportions in units of the binomial sd
    z = (props - th.wp) / np.sqrt(th.wp * (1 - th.wp) / ns)
    print(
        f"p11={p11:.2f} p00={p00:.2f}  wp={th.wp:.3f}  V(theory)={th.v_factor:.3f}  "
        f"V(measured)={z.std():.3f}  inside V=1: {inside[0]:.0%}  inside V=theory: {inside[1]:.0%}"
    )
    (out / f"panel_{'abcd'[i]}.svg").write_text(
        svg.funnel_svg(props, ns, envs, wp=th.wp, title=f"p11={p11}, p00={p00}"), encoding="utf-8"
    )

# Correlation between bits dies away geometrically with distance.
bits = markov.generate(markov.MarkovParams.symmetric(0.83), 10**6, seed=0)
for k in (1, 2, 5, 10, 30):
    print(f"k={k:>2}  C_k theory={markov.correlation_at_distance(0.83, k):.5f}  "
          f"measured={markov.empirical_correlation(bits, k):+.5f}")
print(f"SVGs written to {out}")
