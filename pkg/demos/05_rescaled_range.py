"""Rescaled-range analysis: bias at short lengths, a long-memory oracle,
and the shuffle control.

Run: python demos/05_rescaled_range.py [out_dir]
"""
import sys
from pathlib import Path

from rngbias import dataio, hurst, markov, svg

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_output") / "hurst"
out.mkdir(parents=True, exist_ok=True)

# Plain R/S overestimates H on short independent series.
curve = hurst.baseline_curve([64, 137, 256, 380, 1000, 4000])
for b in curve:
    print(f"iid length {b.length:>5}: H = {b.mean:.3f} +- {b.se:.3f}")

# Fractional Gaussian noise with known H; shuffling destroys the ordering.
x = hurst.generate_fgn(0.8, 380, seed=0)
rep = hurst.hurst(x)
shuffled = hurst.randomized_baseline(x, n_shuffles=10, seed=0)
print(f"fGn H=0.8, length 380: estimated H={rep.h:.3f} +- {rep.h_se:.3f}, C_H={rep.c_h:.3f}")
print(f"  after 10 shuffles: H={shuffled.mean:.3f} +- {shuffled.se:.3f}")

long = hurst.hurst(hurst.generate_fgn(0.8, 2**14, seed=0))
print(f"fGn H=0.8, length 16384: estimated H={long.h:.3f}")

# Short-range Markov correlation vanishes in batch means.
bits = markov.generate(markov.MarkovParams.symmetric(0.83), 10**6, seed=0)
means = markov.batch_means(bits, 100)
print(f"batch means of a p=0.83 source (n={means.size}): H={hurst.hurst(means).h:.3f} "
      f"vs iid {hurst.iid_baseline(means.size).mean:.3f}")

(out / "rs_loglog.svg").write_text(svg.render_svg("rs_loglog", rep, title="fGn H=0.8"), encoding="utf-8")
(out / "hurst_vs_length.svg").write_text(
    svg.render_svg("hurst_vs_length", curve, highlights=[("fGn", 380, rep.h), ("shuffled", 380, shuffled.mean)]),
    encoding="utf-8",
)

# A study database ordered by publication date is just another series.
recs = dataio.synthesize(dataio.SynthSpec(n_studies=380, seed=3))
print(f"chance database ordered by date: H={hurst.hurst(dataio.records_to_series(recs)).h:.3f}")
print(f"SVGs written to {out}")
