"""Recovering the bit-level correlation from a funnel plot alone.

A database of 380 studies is simulated from a persistent source; the
envelope is widened until it holds 95% of the studies, and the widening
factor is inverted back to a self-transition probability.

Run: python demos/03_variance_fit.py
"""
import numpy as np

from rngbias import dataio, funnel, markov

true_p = 0.83
print(f"true p={true_p}, theory V={markov.theory(markov.MarkovParams.symmetric(true_p)).v_factor:.3f}")

fits = []
for seed in range(10):
    recs = dataio.synthesize(dataio.SynthSpec(n_studies=380, markov_params=markov.MarkovParams.symmetric(true_p), seed=seed))
    fit = funnel.fit_variance(recs, z0=1.96, target_coverage=0.95)
    fits.append(fit.v_factor)
    print(f"seed {seed}: V={fit.v_factor:.3f}  p={markov.self_transition_from_v(fit.v_factor):.3f}  "
          f"coverage={fit.coverage:.3f}")

print(f"over 10 databases: V = {np.mean(fits):.3f} +- {np.std(fits, ddof=1):.3f} (sd)")

chance = dataio.synthesize(dataio.SynthSpec(n_studies=380, seed=0))
print(f"chance database: V={funnel.fit_variance_factor(chance):.3f}, "
      f"inside V=1 envelope: {funnel.coverage(chance, funnel.EnvelopeSpec()).fraction_inside:.3f}")
