"""Instability threshold location by bisection, and (delta, sigma) sweeps.

The operational threshold is the initial amplitude sigma at which a full
nonlinear run first shows a torsional onset event within the configured
horizon.  Bisection certifies a bracket: no onset at sigma_lo, onset at
sigma_hi, under a fingerprinted integrator configuration.  Because the
integrator is bit-deterministic, re-running either endpoint reproduces the
certifying result exactly.
"""

from __future__ import annotations

import itertools
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence, TextIO

from .integrator import IntegratorConfig, OnsetEvent, make_initial, simulate
from .model import ModelSpec, Variant, energy

__all__ = [
    "InvalidBracketError",
    "ThresholdResult",
    "SweepRow",
    "config_fingerprint",
    "find_threshold",
    "sweep",
    "format_threshold_report",
    "write_sweep_csv",
]

logger = logging.getLogger(__name__)


class InvalidBracketError(ValueError):
    """Bracket endpoints do not show the required stable/onset pattern."""


@dataclass(frozen=True)
class ThresholdResult:
    """Certified threshold bracket with the configuration that produced it."""

    sigma_lo: float
    sigma_hi: float
    sigma_star: float
    energy_star: float
    onset_at_hi: OnsetEvent
    config_fingerprint: dict[str, str]


@dataclass(frozen=True)
class SweepRow:
    """Outcome of one (delta, sigma) run."""

    delta: float
    sigma: float
    t_onset: Optional[float]
    max_torsion: float
    energy_initial: float
    energy_final: float
    terminated_early: Optional[tuple[float, str]] = None


def config_fingerprint(config: IntegratorConfig, onset_gain: float) -> dict[str, str]:
    """Flat key=value record pinning every setting a re-run needs."""
    return {
        "scheme": config.scheme.value,
        "h": format(config.h, ".17g"),
        "rel_tol": format(config.rel_tol, ".17g"),
        "abs_tol": format(config.abs_tol, ".17g"),
        "t_end": format(config.t_end, ".17g"),
        "sample_every": format(config.sample_every, ".17g"),
        "onset_gain": format(onset_gain, ".17g"),
    }


def _probe(
    spec: ModelSpec, sigma: float, config: IntegratorConfig, onset_gain: float
) -> Optional[OnsetEvent]:
    traj = simulate(spec, make_initial(sigma, spec.m), config, onset_gain)
    return traj.onset


def _contradicts_monotone_boundary(
    history: Sequence[tuple[float, bool]], sigma: float, fired: bool
) -> bool:
    """True when a probe breaks the single-boundary (monotone) picture.

    An onset below an earlier quiet probe, or a quiet probe above an earlier
    onset, means the stability boundary is not a single point in sigma.
    """
    if fired:
        return any(not h_fired and s > sigma for s, h_fired in history)
    return any(h_fired and s < sigma for s, h_fired in history)


def find_threshold(
    spec: ModelSpec,
    bracket: tuple[float, float],
    tol: float,
    config: IntegratorConfig,
    onset_gain: float = 100.0,
) -> ThresholdResult:
    """Bisect the onset/no-onset boundary in initial amplitude sigma.

    Both endpoints are validated first (no onset at the low end, onset at
    the high end) and InvalidBracketError is raised otherwise.  A probe that
    contradicts monotonicity of the already-seen pattern is logged and the
    bisection continues; the returned bracket endpoints are still certified
    by their own runs.
    """
    lo, hi = float(bracket[0]), float(bracket[1])
    if not lo < hi:
        raise ValueError("bracket must satisfy lo < hi")
    if tol <= 0.0:
        raise ValueError("tol must be positive")

    onset_lo = _probe(spec, lo, config, onset_gain)
    if onset_lo is not None:
        raise InvalidBracketError(
            f"onset already present at sigma_lo={lo:g} (t={onset_lo.t_onset:g})"
        )
    onset_hi = _probe(spec, hi, config, onset_gain)
    if onset_hi is None:
        raise InvalidBracketError(f"no onset detected at sigma_hi={hi:g}")

    history: list[tuple[float, bool]] = [(lo, False), (hi, True)]
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        onset_mid = _probe(spec, mid, config, onset_gain)
        fired = onset_mid is not None
        if _contradicts_monotone_boundary(history, mid, fired):
            logger.warning(
                "non-monotone stability boundary: probe sigma=%.9g %s contradicts "
                "an earlier probe; continuing, returned bracket stays certified",
                mid,
                "fired" if fired else "stayed quiet",
            )
        history.append((mid, fired))
        if fired:
            hi, onset_hi = mid, onset_mid
        else:
            lo = mid

    sigma_star = 0.5 * (lo + hi)
    e_star = energy(spec, make_initial(sigma_star, spec.m)).total
    return ThresholdResult(
        sigma_lo=lo,
        sigma_hi=hi,
        sigma_star=sigma_star,
        energy_star=e_star,
        onset_at_hi=onset_hi,
        config_fingerprint=config_fingerprint(config, onset_gain),
    )


def _sweep_task(
    args: tuple[Variant, int, float, float, IntegratorConfig, float]
) -> SweepRow:
    variant, m, delta, sigma, config, onset_gain = args
    spec = ModelSpec(variant, m=m, delta=delta)
    traj = simulate(spec, make_initial(sigma, m), config, onset_gain)
    e0 = traj.initial_energy()
    ef = traj.final_energy()
    return SweepRow(
        delta=delta,
        sigma=sigma,
        t_onset=None if traj.onset is None else traj.onset.t_onset,
        max_torsion=traj.max_torsion,
        energy_initial=float("nan") if e0 is None else e0,
        energy_final=float("nan") if ef is None else ef,
        terminated_early=traj.terminated_early,
    )


def sweep(
    variant: Variant,
    deltas: Sequence[float],
    sigmas: Sequence[float],
    config: IntegratorConfig,
    onset_gain: float = 100.0,
    m: int = 1,
    jobs: int = 1,
) -> list[SweepRow]:
    """One run per (delta, sigma) pair, rows in input (delta-major) order.

    Early termination of a run is recorded in its row and never aborts the
    rest of the sweep.  Probes are independent, so jobs > 1 fans them out to
    worker processes without changing the results.
    """
    tasks = [
        (variant, m, float(d), float(s), config, onset_gain)
        for d, s in itertools.product(deltas, sigmas)
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_sweep_task, tasks))
    return [_sweep_task(t) for t in tasks]


def format_threshold_report(result: ThresholdResult) -> str:
    lines = [
        f"sigma_lo={result.sigma_lo:.17g}",
        f"sigma_hi={result.sigma_hi:.17g}",
        f"sigma_star={result.sigma_star:.17g}",
        f"energy_star={result.energy_star:.17g}",
        f"onset_at_hi.t={result.onset_at_hi.t_onset:.17g}",
        f"onset_at_hi.gain={result.onset_at_hi.gain:.17g}",
    ]
    lines.extend(
        f"config.{key}={value}" for key, value in result.config_fingerprint.items()
    )
    return "\n".join(lines) + "\n"


def write_sweep_csv(rows: Sequence[SweepRow], out: TextIO) -> None:
    """Sweep CSV; the t_onset field is empty when no onset was detected."""
    out.write("delta,sigma,t_onset,max_torsion,E0,Ef\n")
    for r in rows:
        t_onset = "" if r.t_onset is None else format(r.t_onset, ".17g")
        out.write(
            ",".join(
                [
                    format(r.delta, ".17g"),
                    format(r.sigma, ".17g"),
                    t_onset,
                    format(r.max_torsion, ".17g"),
                    format(r.energy_initial, ".17g"),
                    format(r.energy_final, ".17g"),
                ]
            )
            + "\n"
        )
