"""End-to-end analysis bundle: funnel, Markov and R/S sections on one database set.

Each section is independent; a failing section is recorded in the index
and the remaining sections still run.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from . import core, dataio, funnel, hurst, markov, svg
from .core import Condition, StudyRecord

__all__ = ["load_demo_spec", "database_from_spec", "funnel_diagnostics", "hurst_diagnostics", "Bundle", "build_report"]


def load_demo_spec() -> dict:
    return json.loads(resources.files("rngbias").joinpath("data/demo_spec.json").read_text(encoding="utf-8"))


def _censor_rule(cfg: Optional[dict]) -> Optional[dataio.CensorRule]:
    if not cfg:
        return None
    if "band" in cfg:
        lo, hi = cfg["band"]
        return dataio.CensorRule(float(lo), float(hi), int(cfg["max_n"]))
    side = cfg["side"]
    wp = float(cfg.get("wp", 0.5))
    if side == "below":
        return dataio.CensorRule.below(wp, int(cfg["max_n"]))
    if side == "above":
        return dataio.CensorRule.above(wp, int(cfg["max_n"]))
    raise ValueError(f"censor side must be 'below' or 'above', got {side!r}")


def database_from_spec(cfg: dict, seed: int) -> list[StudyRecord]:
    m = cfg.get("markov", {"p11": 0.5, "p00": 0.5})
    spec = dataio.SynthSpec(
        n_studies=int(cfg["n_studies"]),
        size_range=tuple(int(v) for v in cfg.get("size_range", (100, 10**6))),
        markov_params=markov.MarkovParams(float(m["p11"]), float(m["p00"])),
        censoring=_censor_rule(cfg.get("censor")),
        seed=seed,
        condition=Condition.parse(cfg.get("condition", "Treatment")),
        id_prefix=cfg.get("id_prefix", cfg.get("name", "S")[:1].upper()),
    )
    return dataio.synthesize(spec)


def funnel_diagnostics(
    records: Sequence[StudyRecord],
    z0: float = 1.96,
    target_coverage: float = 0.95,
    n_threshold: int = 10**5,
    large_n_quantile: float = 0.1,
    wp: Optional[float] = None,
) -> dict:
    """All funnel-plot numbers for one database, as a plain dict."""
    summary = core.summarize(records, large_n_quantile)
    if wp is None:
        wp = funnel.wp_estimate(records, large_n_quantile)
    random_env = funnel.EnvelopeSpec(z0, 1.0, wp)
    cov_random = funnel.coverage(records, random_env)
    fit = funnel.fit_variance(records, z0, target_coverage, wp)
    cov_fit = funnel.coverage(records, funnel.EnvelopeSpec(z0, fit.v_factor, wp))
    p = markov.self_transition_from_v(fit.v_factor)
    return {
        "summary": summary,
        "wp": wp,
        "coverage_v1": cov_random,
        "fit": fit,
        "coverage_fitted": cov_fit,
        "self_transition": p,
        "c1": 2 * p - 1,
        "asymmetry": funnel.asymmetry(records, wp, n_threshold),
    }


def hurst_diagnostics(values, shuffles: int = 10, seed: int = 0, windows=None) -> dict:
    rep = hurst.hurst(values, windows)
    return {"hurst": rep, "randomized": hurst.randomized_baseline(values, shuffles, seed, windows)}


@dataclass
class Bundle:
    out_dir: Path
    files: list[str] = field(default_factory=list)
    errors: dict[str, str] = field(default_factory=dict)
    summary: dict = field(default_factory=dict)

    def write(self, name: str, text: str) -> None:
        path = self.out_dir / name
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
        self.files.append(name)

    def section(self, name: str, fn: Callable[[], None]) -> None:
        try:
            fn()
        except OSError:
            raise
        except Exception as exc:  # partial-failure policy: record and continue
            self.errors[name] = f"{type(exc).__name__}: {exc}"


def _jsonable(obj) -> str:
    doc = {"schema_version": dataio.SCHEMA_VERSION}
    doc.update(dataio.to_jsonable(obj))
    return json.dumps(doc, indent=2, allow_nan=False, sort_keys=False) + "\n"


def _funnel_outputs(bundle: Bundle, name: str, records, diag: dict, z0: float, title: str) -> None:
    fit_v = diag["fit"].v_factor
    envs = [funnel.EnvelopeSpec(z0, 1.0, diag["wp"]), funnel.EnvelopeSpec(z0, fit_v, diag["wp"])]
    bundle.write(
        f"{name}/funnel.csv",
        dataio.write_report(dataio.FunnelTable(records, diag["coverage_v1"].inside), "csv"),
    )
    bundle.write(
        f"{name}/envelopes.csv",
        dataio.write_report(dataio.EnvelopeTable(["v1", "fitted"], envs), "csv"),
    )
    bundle.write(
        f"{name}/funnel.svg",
        svg.render_svg(
            "funnel",
            records,
            envelopes=envs,
            wp=diag["wp"],
            mean_pi=diag["summary"].mean_pi,
            title=title,
            metadata={
                "fraction_inside_v1": diag["coverage_v1"].fraction_inside,
                "fitted_v": fit_v,
                "fraction_inside_fitted": diag["coverage_fitted"].fraction_inside,
            },
        ),
    )


def build_report(
    spec: Optional[dict],
    seed: int,
    out_dir,
    records: Optional[Sequence[StudyRecord]] = None,
) -> Bundle:
    """Run every section and write the bundle under ``out_dir``.

    With ``records`` the databases are the condition groups of the given
    records; otherwise they are synthesized from ``spec`` (the demo spec when
    ``spec`` is None). Returns the bundle; ``bundle.errors`` lists failed
    sections. Raises ``OSError`` when ``out_dir`` cannot be written.
    """
    spec = dict(load_demo_spec() if spec is None else spec)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    bundle = Bundle(out)
    z0 = float(spec.get("z0", 1.96))
    target = float(spec.get("coverage", 0.95))
    quantile = float(spec.get("large_n_quantile", 0.1))
    hcfg = spec.get("hurst", {})
    shuffles = int(hcfg.get("shuffles", 10))
    ss = np.random.SeedSequence(seed)
    section_seeds = iter(int(s.generate_state(1)[0]) for s in ss.spawn(64))

    databases: dict[str, tuple[list[StudyRecord], dict]] = {}
    if records is not None:
        groups: dict[str, list[StudyRecord]] = {}
        for r in records:
            groups.setdefault(r.condition.value.lower(), []).append(r)
        for name, recs in sorted(groups.items()):
            thr = 10**4 if name == "control" else 10**5
            databases[name] = (recs, {"asymmetry_threshold": thr})
    else:
        for cfg in spec.get("databases", []):
            db_seed = next(section_seeds)
            name = cfg["name"]

            def synth(cfg=cfg, db_seed=db_seed, name=name):
                recs = database_from_spec(cfg, db_seed)
                databases[name] = (recs, cfg)
                bundle.write(f"{name}/records.csv", dataio.write_records(recs))

            bundle.section(f"synthesize:{name}", synth)

    effect_sizes, variance, rescaled_range = {}, {}, {}
    diags = {}
    for name, (recs, cfg) in databases.items():
        def funnel_section(name=name, recs=recs, cfg=cfg):
            d = funnel_diagnostics(recs, z0, target, int(cfg.get("asymmetry_threshold", 10**5)), quantile)
            diags[name] = d
            _funnel_outputs(bundle, name, recs, d, z0, f"{name}: funnel plot")
            s = d["summary"]
            effect_sizes[name] = {
                "count": s.count,
                "wp_estimate": d["wp"],
                "mean_pi": s.mean_pi,
                "mean_se": s.mean_se,
                "weighted_mean_pi": s.weighted_mean_pi,
            }
            variance[name] = {
                "v_factor": d["fit"].v_factor,
                "self_transition": d["self_transition"],
                "c1": d["c1"],
                "fraction_inside_v1": d["coverage_v1"].fraction_inside,
                "fraction_inside_fitted": d["coverage_fitted"].fraction_inside,
            }
            bundle.write(f"{name}/diagnostics.json", _jsonable(d))

        bundle.section(f"funnel:{name}", funnel_section)

        h_seed = next(section_seeds)

        def hurst_section(name=name, recs=recs, h_seed=h_seed):
            series = dataio.records_to_series(recs)
            d = hurst_diagnostics(series, shuffles, h_seed)
            rep = d["hurst"]
            base = hurst.iid_baseline(len(series), range(int(hcfg.get("baseline_seeds", 10))))
            rescaled_range[name] = {
                "length": rep.length,
                "h": rep.h,
                "h_se": rep.h_se,
                "c_h": rep.c_h,
                "c_h_se": rep.c_h_se,
                "randomized_h": d["randomized"].mean,
                "randomized_h_se": d["randomized"].se,
                "randomized_c_h": d["randomized"].c_h,
                "random_sequences_h": base.mean,
                "random_sequences_h_se": base.se,
                "random_sequences_c_h": base.c_h,
            }
            bundle.write(f"{name}/rs.csv", dataio.write_report(rep, "csv"))
            bundle.write(f"{name}/hurst.json", _jsonable(rep))
            bundle.write(f"{name}/rs_loglog.svg", svg.render_svg("rs_loglog", rep, title=f"{name}: rescaled range"))

        bundle.section(f"hurst:{name}", hurst_section)

    if len(effect_sizes) >= 2:
        def merge_section():
            names = list(effect_sizes)[:2]
            a, b = (diags[n]["summary"] for n in names)
            effect_sizes["merged"] = dataio.to_jsonable(core.merge_and_average(a, b))
            effect_sizes["merged"]["databases"] = names

        bundle.section("merge", merge_section)

    panels = spec.get("markov_panels", [])
    pcfg = spec.get("panel_sizes", {"min": 100, "max": 10**5, "count": 20})
    reps = int(spec.get("panel_replications", 30))
    panel_rows = []
    for i, (p11, p00) in enumerate(panels):
        pseed = next(section_seeds)

        def panel_section(i=i, p11=p11, p00=p00, pseed=pseed):
            params = markov.MarkovParams(float(p11), float(p00))
            th = markov.theory(params)
            sizes = np.unique(np.rint(np.logspace(math.log10(pcfg["min"]), math.log10(pcfg["max"]), int(pcfg["count"]))).astype(int))
            sim = markov.funnel_simulation(params, sizes, reps, pseed)
            envs = [funnel.EnvelopeSpec(z0, 1.0, th.wp), funnel.EnvelopeSpec(z0, th.v_factor, th.wp)]
            flat_p = sim.proportions.ravel()
            flat_n = np.repeat(sim.sizes, reps)
            inside = [float(funnel.inside_flags(flat_p, flat_n, e).mean()) for e in envs]
            tag = f"panel_{chr(ord('a') + i)}"
            bundle.write(f"markov/{tag}.csv", dataio.write_report(sim, "csv"))
            bundle.write(
                f"markov/{tag}.svg",
                svg.funnel_svg(
                    flat_p, flat_n, envs, wp=th.wp,
                    title=f"p11={p11}, p00={p00}: wp={th.wp:.3f}, V={th.v_factor:.2f}",
                    metadata={"fraction_inside_v1": inside[0], "fraction_inside_theory": inside[1]},
                ),
            )
            panel_rows.append({
                "panel": tag, "p11": p11, "p00": p00, "wp": th.wp, "v_factor": th.v_factor, "c1": th.c1,
                "fraction_inside_v1": inside[0], "fraction_inside_theory": inside[1],
            })

        bundle.section(f"markov:panel{i}", panel_section)

    lags = spec.get("correlation_lags", [1, 2, 5, 10, 30])
    bcfg = spec.get("batch_means")
    batch = {}
    if bcfg:
        bseed = next(section_seeds)

        def batch_section():
            p = float(bcfg["p"])
            bits = markov.generate(markov.MarkovParams.symmetric(p), int(bcfg["n_bits"]), bseed)
            batch["correlation"] = [
                {"k": k, "theory": markov.correlation_at_distance(p, k), "empirical": markov.empirical_correlation(bits, k)}
                for k in lags
            ]
            rows = []
            for size in bcfg["batch_sizes"]:
                means = markov.batch_means(bits, int(size))
                rep = hurst.hurst(means)
                base = hurst.iid_baseline(means.size, range(int(hcfg.get("baseline_seeds", 10))))
                rows.append({
                    "batch_size": size, "length": int(means.size), "h": rep.h, "h_se": rep.h_se,
                    "baseline_h": base.mean, "baseline_sd": base.sd,
                })
            batch["batch_means"] = rows

        bundle.section("batch_means", batch_section)

    lengths = hcfg.get("baseline_lengths")
    if lengths:
        def curve_section():
            curve = hurst.baseline_curve(lengths, range(int(hcfg.get("baseline_seeds", 10))))
            bundle.write("hurst/baseline_curve.csv", dataio.write_report(curve, "csv"))
            highlights = [(n, t["length"], t["h"]) for n, t in rescaled_range.items()]
            bundle.write("hurst/hurst_vs_length.svg", svg.render_svg("hurst_vs_length", curve, highlights=highlights))

        bundle.section("hurst_vs_length", curve_section)

    bundle.summary = {
        "seed": seed,
        "effect_sizes": effect_sizes,
        "variance": variance,
        "rescaled_range": rescaled_range,
        "markov_panels": panel_rows,
        "markov_correlation": batch,
        "errors": bundle.errors,
    }
    bundle.write("summary.json", _jsonable(bundle.summary))
    index = {"schema_version": dataio.SCHEMA_VERSION, "files": sorted(bundle.files + ["index.json"]), "errors": bundle.errors}
    (out / "index.json").write_text(json.dumps(index, indent=2) + "\n", encoding="utf-8")
    return bundle
