"""Radial influence kernels.

A kernel maps a nonnegative inter-point distance to an influence value in
[0, 1]. The iteration engine only ever feeds distances to a kernel, so every
family here is radial by construction. All families pin influence exactly 1
at distance 0.

A well-formed profile additionally satisfies, on any distance grid:
influence strictly below 1 away from 0, and nonincreasing with distance.
``verify_profile`` certifies those clauses on a grid; the analytic families
(Gaussian, truncated flat) satisfy them by construction whenever their
parameters allow, while tabulated profiles may be deliberately malformed and
are only certified by the grid check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "GaussianKernel",
    "TruncatedFlatKernel",
    "TabulatedKernel",
    "Kernel",
    "ProfileReport",
    "verify_profile",
    "kernel_from_config",
    "kernel_to_config",
    "KernelConfigError",
]


class KernelConfigError(ValueError):
    """Raised when a kernel config mapping cannot be turned into a kernel."""


def _as_distances(d):
    arr = np.asarray(d, dtype=float)
    if np.any(arr < 0):
        raise ValueError("distances must be nonnegative")
    return arr


class Kernel:
    """Base interface. Subclasses implement ``_profile_sq`` on squared distances."""

    support_radius: float

    def evaluate(self, distances):
        """Influence at the given distance(s), in [0, 1].

        Accepts a scalar or an array; negative distances raise ValueError.
        """
        scalar = np.ndim(distances) == 0
        arr = np.atleast_1d(_as_distances(distances))
        sq = arr * arr
        out = np.asarray(self._profile_sq(sq), dtype=float)
        self._apply_cutoff_sq(sq, out)
        if scalar:
            return float(out[0])
        return out

    def evaluate_sq(self, sq_distances):
        """Influence from squared distances. Same values as
        ``evaluate(sqrt(sq_distances))`` up to rounding; lets the engine skip
        the square root on hot paths."""
        scalar = np.ndim(sq_distances) == 0
        arr = np.atleast_1d(np.asarray(sq_distances, dtype=float))
        if np.any(arr < 0):
            raise ValueError("squared distances must be nonnegative")
        out = np.asarray(self._profile_sq(arr), dtype=float)
        self._apply_cutoff_sq(arr, out)
        if scalar:
            return float(out[0])
        return out

    def _apply_cutoff_sq(self, sq, out):
        r = self.support_radius
        if math.isfinite(r):
            np.copyto(out, 0.0, where=sq > r * r)

    def _profile_sq(self, sq):  # pragma: no cover - abstract
        raise NotImplementedError


@dataclass(frozen=True)
class GaussianKernel(Kernel):
    """exp(-d^2 / (2 tau^2)), optionally forced to zero beyond a cutoff radius.

    The cutoff turns the profile into a compactly supported kernel while
    keeping the Gaussian shape inside the support; experiments that need
    outliers to decouple deterministically use it.
    """

    tau: float
    support_radius: float = math.inf

    def __post_init__(self):
        if not (self.tau > 0 and math.isfinite(self.tau)):
            raise ValueError("tau must be positive and finite")
        if not self.support_radius > 0:
            raise ValueError("support_radius must be positive")

    def _profile_sq(self, sq):
        return np.exp(sq / (-2.0 * self.tau * self.tau))


@dataclass(frozen=True)
class TruncatedFlatKernel(Kernel):
    """Piecewise-constant profile given as ordered (threshold, value) levels.

    Level k holds on distances in (threshold_{k-1}, threshold_k]; influence is
    0 beyond the last threshold. Distance 0 always evaluates to 1, so a
    leading (0.0, 1.0) level is allowed but redundant. Values must sit in
    [0, 1] and be nonincreasing; thresholds strictly increasing.
    """

    levels: tuple
    support_radius: float = field(default=math.nan)

    def __post_init__(self):
        levels = tuple((float(t), float(v)) for t, v in self.levels)
        if not levels:
            raise ValueError("levels must be nonempty")
        thresholds = [t for t, _ in levels]
        values = [v for _, v in levels]
        if any(t < 0 for t in thresholds):
            raise ValueError("thresholds must be nonnegative")
        if any(b <= a for a, b in zip(thresholds, thresholds[1:])):
            raise ValueError("thresholds must be strictly increasing")
        if any(not 0.0 <= v <= 1.0 for v in values):
            raise ValueError("level values must lie in [0, 1]")
        if any(b > a for a, b in zip(values, values[1:])):
            raise ValueError("level values must be nonincreasing")
        if thresholds[0] == 0.0 and values[0] != 1.0:
            raise ValueError("a level at threshold 0 must have value 1")
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "_thresholds_sq", np.array(thresholds) ** 2)
        object.__setattr__(self, "_values", np.array(values))
        intrinsic = 0.0
        for t, v in levels:
            if v > 0:
                intrinsic = t
        if math.isnan(self.support_radius):
            object.__setattr__(self, "support_radius", intrinsic)
        else:
            if not self.support_radius > 0:
                raise ValueError("support_radius must be positive")
            object.__setattr__(
                self, "support_radius", min(self.support_radius, intrinsic)
            )

    def _profile_sq(self, sq):
        idx = np.searchsorted(self._thresholds_sq, sq, side="left")
        out = np.where(
            idx < len(self._values), self._values[np.minimum(idx, len(self._values) - 1)], 0.0
        )
        out = np.where(sq == 0.0, 1.0, out)
        return np.asarray(out, dtype=float)


@dataclass(frozen=True)
class TabulatedKernel(Kernel):
    """Profile given as (distance, value) knots, linearly interpolated.

    The first knot must be (0, 1). Beyond the last knot the last value is
    held, so a profile ending at a positive value has infinite support.
    Values may be non-monotone; ``verify_profile`` is the certification path.
    """

    knots: tuple
    support_radius: float = field(default=math.nan)

    def __post_init__(self):
        knots = tuple((float(d), float(v)) for d, v in self.knots)
        if len(knots) < 2:
            raise ValueError("need at least two knots")
        ds = [d for d, _ in knots]
        vs = [v for _, v in knots]
        if ds[0] != 0.0 or vs[0] != 1.0:
            raise ValueError("first knot must be (0, 1)")
        if any(b <= a for a, b in zip(ds, ds[1:])):
            raise ValueError("knot distances must be strictly increasing")
        if any(not 0.0 <= v <= 1.0 for v in vs):
            raise ValueError("knot values must lie in [0, 1]")
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "_ds", np.array(ds))
        object.__setattr__(self, "_vs", np.array(vs))
        # intrinsic support: first knot from which the profile is identically 0
        intrinsic = math.inf
        if vs[-1] == 0.0:
            k = len(vs) - 1
            while k > 0 and vs[k - 1] == 0.0:
                k -= 1
            intrinsic = ds[k]
        if math.isnan(self.support_radius):
            object.__setattr__(self, "support_radius", intrinsic)
        else:
            if not self.support_radius > 0:
                raise ValueError("support_radius must be positive")
            object.__setattr__(
                self, "support_radius", min(self.support_radius, intrinsic)
            )

    def _profile_sq(self, sq):
        return np.interp(np.sqrt(sq), self._ds, self._vs)


@dataclass(frozen=True)
class ProfileReport:
    """Grid certification of a kernel profile.

    ``unit_at_zero``: influence exactly 1 at distance 0.
    ``bounded``: all grid influences within [0, 1].
    ``below_one_for_positive``: influence strictly below 1 at positive grid
    distances (together with the previous two this is the identity clause).
    ``nonincreasing``: no increase along the sorted grid (monotonicity clause).
    ``first_violation``: smallest grid distance at which any clause fails.
    """

    unit_at_zero: bool
    bounded: bool
    below_one_for_positive: bool
    nonincreasing: bool
    first_violation: float | None

    @property
    def identity_clause(self) -> bool:
        return self.unit_at_zero and self.bounded and self.below_one_for_positive

    @property
    def monotonicity_clause(self) -> bool:
        return self.nonincreasing

    @property
    def passed(self) -> bool:
        return self.identity_clause and self.monotonicity_clause


def verify_profile(kernel: Kernel, grid) -> ProfileReport:
    """Certify the profile clauses of ``kernel`` on a distance grid.

    The grid must contain 0 and at least two positive distances; it is
    sorted and deduplicated before checking.
    """
    arr = np.unique(_as_distances(grid))
    if arr.size == 0:
        raise ValueError("grid must be nonempty")
    if arr[0] != 0.0:
        raise ValueError("grid must contain distance 0")
    if np.count_nonzero(arr > 0) < 2:
        raise ValueError("grid must contain at least two positive distances")

    vals = np.atleast_1d(kernel.evaluate(arr))
    unit_at_zero = vals[0] == 1.0
    bounded_mask = (vals >= 0.0) & (vals <= 1.0)
    below_mask = np.ones_like(vals, dtype=bool)
    below_mask[1:] = vals[1:] < 1.0
    mono_mask = np.ones_like(vals, dtype=bool)
    mono_mask[1:] = vals[1:] <= vals[:-1]

    ok = bounded_mask & below_mask & mono_mask
    if not unit_at_zero:
        ok[0] = False
    first_violation = None if ok.all() else float(arr[int(np.argmin(ok))])
    return ProfileReport(
        unit_at_zero=bool(unit_at_zero),
        bounded=bool(bounded_mask.all()),
        below_one_for_positive=bool(below_mask.all()),
        nonincreasing=bool(mono_mask.all()),
        first_violation=first_violation,
    )


def kernel_from_config(config: dict) -> Kernel:
    """Build a kernel from its config mapping.

    Shapes: ``{"family": "gaussian", "tau": 2.0}``,
    ``{"family": "truncated_flat", "levels": [[0.0, 1.0], [1.0, 0.5]]}``,
    ``{"family": "tabulated", "profile": [[0.0, 1.0], [2.0, 0.3]]}``.
    Any family accepts an optional ``"support_radius"``.
    """
    if not isinstance(config, dict):
        raise KernelConfigError("kernel config must be a mapping")
    family = config.get("family")
    extra = {}
    if "support_radius" in config:
        extra["support_radius"] = float(config["support_radius"])
    try:
        if family == "gaussian":
            if "tau" not in config:
                raise KernelConfigError("gaussian kernel needs 'tau'")
            return GaussianKernel(tau=float(config["tau"]), **extra)
        if family == "truncated_flat":
            levels = config.get("levels")
            if not isinstance(levels, Sequence) or isinstance(levels, (str, bytes)):
                raise KernelConfigError("truncated_flat kernel needs 'levels'")
            return TruncatedFlatKernel(levels=tuple(tuple(l) for l in levels), **extra)
        if family == "tabulated":
            profile = config.get("profile")
            if not isinstance(profile, Sequence) or isinstance(profile, (str, bytes)):
                raise KernelConfigError("tabulated kernel needs 'profile'")
            return TabulatedKernel(knots=tuple(tuple(k) for k in profile), **extra)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, KernelConfigError):
            raise
        raise KernelConfigError(f"bad kernel config: {exc}") from exc
    raise KernelConfigError(f"unknown kernel family: {family!r}")


def kernel_to_config(kernel: Kernel) -> dict:
    """Inverse of ``kernel_from_config`` for the built-in families."""
    if isinstance(kernel, GaussianKernel):
        cfg = {"family": "gaussian", "tau": kernel.tau}
        if math.isfinite(kernel.support_radius):
            cfg["support_radius"] = kernel.support_radius
        return cfg
    if isinstance(kernel, TruncatedFlatKernel):
        return {
            "family": "truncated_flat",
            "levels": [list(l) for l in kernel.levels],
            "support_radius": kernel.support_radius,
        }
    if isinstance(kernel, TabulatedKernel):
        cfg = {"family": "tabulated", "profile": [list(k) for k in kernel.knots]}
        if math.isfinite(kernel.support_radius):
            cfg["support_radius"] = kernel.support_radius
        return cfg
    raise TypeError(f"unknown kernel type: {type(kernel).__name__}")
