"""Effect sizes, standard errors and z-scores for a few hand-made studies.

Run: python demos/01_effect_sizes.py
"""
from rngbias import core
from rngbias.core import StudyRecord

# A binary trial passes the hit rate through unchanged; a four-choice trial
# at chance (0.25) lands on 0.5 like every other chance result.
for p_obs, kappa in [(0.52, 2), (0.25, 4), (0.4, 4), (0.3, 3)]:
    print(f"p_obs={p_obs:<5} kappa={kappa}  ->  pi={core.effect_size(p_obs, kappa):.4f}")

# The standard error shrinks as 1/sqrt(N).
for n in (100, 10_000, 1_000_000):
    se = core.standard_error(0.5, 0.5, n)
    print(f"N={n:>9,}  se(0.5)={se:.6f}")

# Studies reported only as a z-score are mapped back to an effect size.
pi = core.pi_from_z(2.0, 10_000)
print(f"z=2 at N=10,000  ->  pi={pi:.6f}")

records = [
    StudyRecord("A", 10_000, 0.51, pub_year=1990),
    StudyRecord("B", 400, 0.47, pub_year=1992),
    StudyRecord("C", 250_000, 0.5004, pub_year=1997),
]
for r in records:
    print(f"{r.study_id}: N={r.n_bits:>7}  pi={r.pi:.4f}  se={r.se:.5f}  z={r.z:+.2f}")

s = core.summarize(records)
print(f"mean pi={s.mean_pi:.4f} +- {s.mean_se:.4f}, size-weighted mean={s.weighted_mean_pi:.4f}")
