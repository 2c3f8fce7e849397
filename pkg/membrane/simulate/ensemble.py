"""
Ensembles of paths simulated chunk by chunk.

Each chunk is simulated, gets its eta and time change, and is either kept
(an Ensemble) or folded by a reducer into a summary so that large runs need
not hold every path. Results are ordered by chunk index, which makes every
reduction independent of worker count and completion order.
"""

import logging
import pickle
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from membrane.model.coefficients import DiffusionSpec
from membrane.model.surface import Surface
from membrane.simulate.base import simulate_base
from membrane.simulate.density import MeanEstimate, mean_estimate
from membrane.simulate.localtime import attach_eta
from membrane.simulate.paths import PathBundle
from membrane.simulate.rng import Chunk, chunk_plan
from membrane.simulate.scheme import SimScheme
from membrane.simulate.timechange import apply_time_change

logger = logging.getLogger(__name__)

Reducer = Callable[[PathBundle], object]


def simulate_chunk(
    spec: DiffusionSpec,
    surface: Surface,
    start,
    scheme: SimScheme,
    chunk: Chunk,
    eps: Optional[float] = None,
    extrapolate_eta: bool = False,
    time_change: bool = True,
) -> PathBundle:
    bundle = simulate_base(spec, surface, start, scheme, chunk.size, chunk=chunk)
    attach_eta(bundle, surface, scheme.eps if eps is None else eps, extrapolate=extrapolate_eta)
    if time_change:
        apply_time_change(bundle, spec, surface)
    return bundle


def _chunk_task(args) -> object:
    spec, surface, start, scheme, chunk, options, reducer = args
    bundle = simulate_chunk(spec, surface, start, scheme, chunk, **options)
    return reducer(bundle) if reducer is not None else bundle


def _picklable(obj) -> bool:
    try:
        pickle.dumps(obj)
    except Exception:
        return False
    return True


@dataclass
class Ensemble:
    spec: DiffusionSpec
    surface: Surface
    start: np.ndarray
    scheme: SimScheme
    bundles: list[PathBundle] = field(default_factory=list)

    @property
    def n_paths(self) -> int:
        return sum(b.n_paths for b in self.bundles)

    @property
    def valid(self) -> np.ndarray:
        return np.concatenate([b.valid for b in self.bundles])

    @property
    def times(self) -> np.ndarray:
        return self.bundles[0].times

    @property
    def base_times(self) -> np.ndarray:
        return self.bundles[0].base_times

    def map(self, fn: Reducer) -> np.ndarray:
        """Apply fn to every bundle and concatenate along the path axis."""
        return np.concatenate([np.asarray(fn(b)) for b in self.bundles], axis=0)

    def concat(self, attribute: str) -> np.ndarray:
        return np.concatenate([getattr(b, attribute) for b in self.bundles], axis=0)

    def states_at(self, t: float, valid_only: bool = True) -> np.ndarray:
        """x(t) for every path, shape (n, d)."""
        k = self.bundles[0].time_index(t)
        x = self.map(lambda b: b.states[:, k])
        return x[self.valid] if valid_only else x

    def base_states_at(self, s: float, valid_only: bool = True) -> np.ndarray:
        k = self.bundles[0].base_index(s)
        x = self.map(lambda b: b.base_states[:, k])
        return x[self.valid] if valid_only else x

    def gamma_at(self, t: float, valid_only: bool = True) -> np.ndarray:
        k = self.bundles[0].time_index(t)
        g = self.map(lambda b: b.gamma[:, k])
        return g[self.valid] if valid_only else g

    def eta_at(self, s: float, valid_only: bool = True) -> np.ndarray:
        k = self.bundles[0].base_index(s)
        e = self.map(lambda b: b.eta[:, k])
        return e[self.valid] if valid_only else e

    def diverged_fraction(self) -> float:
        return float(1.0 - self.valid.mean())


def run_ensemble(
    spec: DiffusionSpec,
    surface: Surface,
    start,
    scheme: SimScheme,
    n_paths: int,
    reducer: Optional[Reducer] = None,
    workers: int = 1,
    eps: Optional[float] = None,
    extrapolate_eta: bool = False,
    time_change: bool = True,
):
    """
    Simulate n_paths paths in chunks of scheme.chunk_size.

    Without a reducer the chunks are returned as an Ensemble; with one, the
    list of per-chunk reducer results in chunk order. workers > 1 runs chunks
    in a process pool when spec, surface and reducer can be pickled, and
    serially otherwise.
    """
    plan = chunk_plan(n_paths, scheme.chunk_size)
    options = {"eps": eps, "extrapolate_eta": extrapolate_eta, "time_change": time_change}
    start = np.atleast_1d(np.asarray(start, dtype=float))
    tasks = [(spec, surface, start, scheme, chunk, options, reducer) for chunk in plan]
    logger.info(
        f"Simulating {n_paths} paths in {len(plan)} chunk(s): dt={scheme.dt:g}, "
        f"t_end={scheme.t_end:g}, eps={scheme.eps:g}, mode={scheme.skew_mode.value}, seed={scheme.seed}"
    )

    if workers > 1 and len(plan) > 1 and _picklable(tasks[0]):
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_chunk_task, tasks))
    else:
        if workers > 1:
            logger.warning("Coefficients or reducer cannot be pickled; running chunks serially")
        results = [_chunk_task(task) for task in tasks]

    if reducer is not None:
        return results
    ensemble = Ensemble(spec=spec, surface=surface, start=start, scheme=scheme, bundles=results)
    if ensemble.diverged_fraction() > 0:
        logger.warning(f"{ensemble.diverged_fraction():.2%} of paths diverged and are excluded")
    return ensemble


def laplace_weights(bundle: PathBundle, spec: DiffusionSpec, surface: Surface, lam: float, s: float) -> np.ndarray:
    """exp(-lam int_0^s r(x0) d eta) per path of one bundle."""
    k = bundle.base_index(s)
    d_eta = np.diff(bundle.eta[:, : k + 1], axis=1)
    if spec.r.is_constant:
        weighted = spec.r.constant * d_eta
    else:
        weighted = spec.r(surface.project(bundle.base_states[:, :k])) * d_eta
    return np.exp(-lam * weighted.sum(axis=1))


def laplace_estimate(ensemble: Ensemble, phi: Callable[[np.ndarray], np.ndarray], lam: float, t: float) -> MeanEstimate:
    """Monte Carlo E_x[phi(x0(t)) exp(-lam int_0^t r d eta)] on the base clock."""
    spec, surface = ensemble.spec, ensemble.surface
    k = ensemble.bundles[0].base_index(t)
    values = ensemble.map(
        lambda b: np.asarray(phi(b.base_states[:, k]), dtype=float) * laplace_weights(b, spec, surface, lam, t)
    )
    return mean_estimate(values[ensemble.valid])
