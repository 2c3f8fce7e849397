"""
simulate: the Monte Carlo ensemble, its terminal law and time-change summary.
"""

import logging

import numpy as np
from scipy import stats

from cli.commands.common import null_membrane
from membrane.simulate.density import empirical_density, ks_distance_to, mean_estimate
from membrane.simulate.dumps import write_paths_csv
from membrane.verify.consistency import check_skew_neutrality, neutral_membrane
from membrane.verify.reports import CheckResult, verdict_of

logger = logging.getLogger(__name__)

NAME = "simulate"
HELP = "Simulate paths and write the terminal law and time-change summary."

# Sup-CDF budget for the null membrane, widened to the KS 1% quantile for small ensembles
NULL_LAW_BUDGET = 0.01
KS_QUANTILE_99 = 1.628
# paths.csv holds the first paths of chunk 0 only
PATH_DUMP = 50


def run(ctx) -> None:
    ensemble = ctx.ensemble()
    t_end = ctx.scheme.t_end
    final = ensemble.states_at(t_end, valid_only=False)
    gamma = ensemble.gamma_at(t_end, valid_only=False)
    valid = ensemble.valid
    ids = np.concatenate([b.path_ids for b in ensemble.bundles])
    order = np.argsort(ids, kind="stable")

    dim = final.shape[-1]
    ctx.write_rows(
        "endpoints.csv",
        ["path_id", *[f"x_{i + 1}" for i in range(dim)], "gamma", "valid"],
        ([int(ids[i]), *final[i], gamma[i], bool(valid[i])] for i in order),
    )

    first = ensemble.bundles[0]
    write_paths_csv(ctx.path("paths.csv"), [first.select(np.arange(first.n_paths) < PATH_DUMP)], ctx.surface)

    density = empirical_density(final[valid], bins=80)
    ctx.write_rows(
        "density.csv",
        ["lo", "hi", "density", "stderr"],
        ([row["lo"], row["hi"], row["density"], row["stderr"]] for row in density.to_rows()),
    )

    summary = {
        "n_paths": ensemble.n_paths,
        "diverged_fraction": ensemble.diverged_fraction(),
        "t_end": t_end,
        "mean": [mean_estimate(final[valid, i]).to_dict() for i in range(dim)],
        "gamma": mean_estimate(gamma[valid]).to_dict(),
        "gamma_positive": float(np.mean(gamma[valid] > 0.0)),
        "scheme": ctx.scheme.to_dict(),
    }
    ctx.write_json("summary.json", summary)

    sigma2 = null_membrane(ctx)
    if sigma2 is not None:
        x0 = float(ctx.start[0])
        scale = np.sqrt(sigma2 * t_end)
        distance = ks_distance_to(final[valid, 0], lambda y: stats.norm.cdf((y - x0) / scale))
        n = int(valid.sum())
        budget = max(NULL_LAW_BUDGET, KS_QUANTILE_99 / np.sqrt(n))
        ctx.record(
            CheckResult(
                "null-membrane-law",
                verdict_of(distance <= budget),
                {"sup_cdf_distance": distance, "budget": budget, "n_paths": n, "t": t_end},
            )
        )
    if neutral_membrane(ctx.spec):
        ctx.record(
            check_skew_neutrality(
                ctx.spec,
                ctx.surface,
                ctx.start,
                ctx.scheme,
                ctx.config.scheme.n_paths,
                ensemble=ensemble,
                workers=ctx.settings.workers,
            )
        )
    logger.info(f"Simulated {ensemble.n_paths} paths, mean gamma(T) {summary['gamma']['mean']:.4g}")
