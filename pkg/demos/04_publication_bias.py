"""Selective reporting and how it shows up in a funnel plot.

Small studies below chance are dropped from one database and small studies
above chance from another. The unweighted means move in opposite
directions while the large-study estimate stays at 0.5; averaging the two
databases cancels most of the shift.

Run: python demos/04_publication_bias.py [out_dir]
"""
import sys
from pathlib import Path

from rngbias import core, dataio, funnel, svg
from rngbias.dataio import CensorRule, SynthSpec

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_output") / "bias"
out.mkdir(parents=True, exist_ok=True)

below = dataio.synthesize(SynthSpec(n_studies=380, seed=0, censoring=CensorRule.below(0.5, 10**5)))
above = dataio.synthesize(SynthSpec(n_studies=380, seed=1, censoring=CensorRule.above(0.5, 10**4)))

for name, recs, thr in [("missing low scores", below, 10**5), ("missing high scores", above, 10**4)]:
    s = core.summarize(recs)
    a = funnel.asymmetry(recs, 0.5, thr)
    print(f"{name}: {s.count} studies, mean pi={s.mean_pi:.4f} +- {s.mean_se:.4f}, "
          f"large-study wp={s.wp_estimate:.5f}")
    print(f"   small studies above/below 0.5: {a.small_above}/{a.small_below}  regions={a.regions()}")
    (out / f"{name.replace(' ', '_')}.svg").write_text(
        svg.render_svg("funnel", recs, wp=s.wp_estimate, mean_pi=s.mean_pi, title=name), encoding="utf-8"
    )

m = core.merge_and_average(core.summarize(below), core.summarize(above))
print(f"merged: mean of means={m.mean_of_means:.4f}, count-weighted={m.pooled_mean:.4f}, se={m.pooled_se:.4f}")
