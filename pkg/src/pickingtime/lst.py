"""Laplace-Stieltjes transform of the total order-picking time.

All evaluators accept a complex scalar or a numpy array of complex arguments
and broadcast over it, so an inversion can hand in every contour point at once.
Each aisle factor is computed once per argument and combined with running
prefix products, which keeps an evaluation O(k).

Throughout, the *core* of a sub-aisle factor is the conditional transform with
the cross-aisle step stripped off. Working with cores avoids multiplying by
``exp(+w s / v)``, which overflows for large ``Re(s)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import (
    Layout,
    PickKind,
    PickTimeModel,
    PiecewiseLinearCdf,
    WarehouseConfig,
    is_random_profile,
)

SERIES_CUTOFF = 1e-8
COMPLEX_STEP = 1e-20


def _as_complex(s):
    arr = np.asarray(s, dtype=complex)
    if np.any(arr.real < 0):
        raise ValueError("transform argument must satisfy Re(s) >= 0")
    return arr


def _scalar_or_array(out):
    return complex(out) if np.ndim(out) == 0 else out


def _expm1_ratio(z):
    """``expm1(z) / z`` with the removable singularity at 0 filled in."""
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) < SERIES_CUTOFF
    safe = np.where(small, 1.0, z)
    direct = np.expm1(safe) / safe
    series = 1.0 + z / 2.0 + z * z / 6.0 + z * z * z / 24.0
    return np.where(small, series, direct)


def pick_lst(model: PickTimeModel, s):
    """Transform ``E[exp(-s P)]`` of a single pick time."""
    s = _as_complex(s)
    if model.kind is PickKind.ZERO:
        out = np.ones_like(s)
    elif model.kind is PickKind.DETERMINISTIC:
        out = np.exp(-s * model.duration)
    elif model.kind is PickKind.EXPONENTIAL:
        out = model.rate / (model.rate + s)
    else:
        # principal branch; Re(1 + s/rate) > 0 keeps log1p off its cut
        out = np.exp(-model.shape * np.log1p(s / model.rate))
    return _scalar_or_array(out)


def _segment_integrals(a, b, cdf: PiecewiseLinearCdf, shift=0.0):
    # integral over [0, 1] of exp(a x + b F(x) + shift), one linear piece at a time
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    total = np.zeros(np.broadcast(a, b).shape, dtype=complex)
    slopes = cdf.slopes
    for n in range(cdf.x.size - 1):
        x0 = cdf.x[n]
        dx = cdf.x[n + 1] - x0
        w0 = a * x0 + b * cdf.right[n] + shift
        z = (a + b * slopes[n]) * dx
        big = np.abs(z) >= 1.0
        # the split keeps exp(w0) * expm1(z) from overflowing when Re(z) is large
        z_big = np.where(big, z, 1.0)
        far = (np.exp(w0 + z_big) - np.exp(w0)) / z_big
        near = np.exp(w0) * _expm1_ratio(np.where(big, 0.0, z))
        total = total + dx * np.where(big, far, near)
    return total


def exp_linear_cdf_integral(a, b, cdf: PiecewiseLinearCdf):
    """``int_0^1 exp(a x + b F(x)) dx`` in closed form, segment by segment.

    Jumps of ``F`` carry no Lebesgue measure and only shift the constant on the
    following segment.
    """
    return _scalar_or_array(_segment_integrals(a, b, cdf))


def _aisle_core(s, phi, rho, travel, cdf: PiecewiseLinearCdf):
    # psi * exp(W s / v): conditional transform of one sub-aisle without the
    # cross-aisle step. ``travel`` is the in-aisle round trip divided by speed.
    if rho == 0.0:
        return np.ones(np.shape(s), dtype=complex)
    ls = travel * s
    b = rho * phi
    first = np.exp(b - rho - ls)
    return first + ls * _segment_integrals(-ls, b, cdf, shift=-rho)


def psi_aisle(s, rho, L, W, v, pick: PickTimeModel, cdf: PiecewiseLinearCdf):
    """Transform of one (sub-)aisle contribution given that the picker passes it.

    ``rho`` is the Poisson mean of picks in the aisle, ``L`` the in-aisle round
    trip to the far end (meters) and ``W`` the cross-aisle distance charged for
    passing the aisle. With ``rho == 0`` the aisle is walked past and only the
    cross-aisle step remains.
    """
    s = _as_complex(s)
    phi = np.asarray(pick_lst(pick, s))
    core = _aisle_core(s, phi, float(rho), L / v, cdf)
    return _scalar_or_array(np.exp(-W * s / v) * core)


@dataclass(frozen=True)
class KPlusPmf:
    """Distribution of the furthest aisle with picks; index 0 is aisle 1."""

    probs: np.ndarray

    @property
    def total(self) -> float:
        return math.fsum(self.probs)


def _suffix_sums(q: np.ndarray) -> np.ndarray:
    # out[i] = sum of q[m] for m > i
    out = np.zeros_like(q)
    for i in range(q.size - 2, -1, -1):
        out[i] = out[i + 1] + q[i + 1]
    return out


def kplus_pmf(config: WarehouseConfig) -> KPlusPmf:
    lam = config.lam
    q = config.storage.aisle_probabilities()
    beyond = _suffix_sums(q)
    probs = np.exp(-lam * beyond) * -np.expm1(-lam * q)
    return KPlusPmf(probs)


def _aisle_cores(config: WarehouseConfig, s, phi):
    geom = config.geometry
    travel = geom.roundtrip_length / geom.speed
    cores = []
    for row in config.storage.subaisles:
        core = np.ones(s.shape, dtype=complex)
        for sub in row:
            if not sub.inert:
                core = core * _aisle_core(s, phi, config.lam * sub.p, travel, sub.cdf)
        cores.append(core)
    return cores


def order_lst(config: WarehouseConfig, s):
    """``E[exp(-s T)]`` for the total order-picking time under return routing."""
    s = _as_complex(s)
    lam = config.lam
    geom = config.geometry
    phi = np.asarray(pick_lst(config.pick_time, s))
    q = config.storage.aisle_probabilities()
    beyond = np.exp(-lam * _suffix_sums(q))
    empty = np.exp(-lam * q)
    # both layouts charge 2 w_a per passed aisle
    step = np.exp(-2.0 * geom.aisle_width * s / geom.speed)

    result = np.full(s.shape, math.exp(-lam), dtype=complex)
    prefix = np.ones(s.shape, dtype=complex)
    for i, core in enumerate(_aisle_cores(config, s, phi)):
        if q[i] > 0:
            result = result + beyond[i] * (core - empty[i]) * prefix
        prefix = prefix * step * core
    return _scalar_or_array(result)


def order_lst_random_closed(config: WarehouseConfig, s):
    """Closed-form transform for random storage.

    The per-aisle factor is written with ``expm1(delta) / delta`` so the
    apparent pole where ``delta = 0`` disappears, and the geometric sum over
    aisles is accumulated term by term.
    """
    if not is_random_profile(config.storage):
        raise ValueError("closed form requires the random storage profile")
    s = _as_complex(s)
    lam = config.lam
    geom = config.geometry
    k = geom.k
    n_sub = geom.n_subaisles
    phi = np.asarray(pick_lst(config.pick_time, s))
    rho = lam / n_sub
    travel = geom.roundtrip_length / geom.speed
    delta = rho * phi - travel * s
    sub_core = math.exp(-rho) * (1.0 + rho * phi * _expm1_ratio(delta))
    core = sub_core ** geom.layout.blocks
    psi = np.exp(-2.0 * geom.aisle_width * s / geom.speed) * core

    acc = np.zeros(s.shape, dtype=complex)
    power = np.ones(s.shape, dtype=complex)
    for j in range(k):
        acc = acc + math.exp(-lam * (k - 1 - j) / k) * power
        power = power * psi
    result = math.exp(-lam) + (core - math.exp(-lam / k)) * acc
    return _scalar_or_array(result)


def _time_scale(config: WarehouseConfig) -> float:
    geom = config.geometry
    return 2.0 * geom.aisle_length / geom.speed


def mean_from_lst(config: WarehouseConfig) -> float:
    """First moment by complex-step differentiation of the transform at 0."""
    h = COMPLEX_STEP / _time_scale(config)
    return -order_lst(config, 1j * h).imag / h


def second_moment_from_lst(config: WarehouseConfig) -> float:
    """Second moment from central differences of the transform at 0.

    The differences are taken along the imaginary axis, where
    ``f(-ih) = conj(f(ih))`` and so ``E[T^2] ~ 2 (1 - Re f(ih)) / h^2``; one
    Richardson step removes the ``h^2`` error term.
    """
    mean = mean_from_lst(config)
    busy = mean / -math.expm1(-config.lam)
    if busy <= 0:
        return 0.0
    h = 1e-3 / busy

    def second_difference(step):
        return 2.0 * (1.0 - order_lst(config, 1j * step).real) / step**2

    coarse = second_difference(h)
    fine = second_difference(h / 2.0)
    return (4.0 * fine - coarse) / 3.0


def variance_from_lst(config: WarehouseConfig) -> float:
    return second_moment_from_lst(config) - mean_from_lst(config) ** 2


def mean_travel_random_closed(config: WarehouseConfig) -> float:
    """Mean travel time (no picking) of a single-block random-storage warehouse.

    In-aisle part: each aisle holds Poisson(lam/k) uniform picks, so the
    expected furthest position is ``1 - (k/lam)(1 - exp(-lam/k))``. Cross-aisle
    part: the expected number of aisles passed before the last one with picks.
    """
    geom = config.geometry
    if geom.layout is not Layout.SINGLE_BLOCK or not is_random_profile(config.storage):
        raise ValueError("travel-mean formula requires single-block random storage")
    k, lam = geom.k, config.lam
    l, w, v = geom.aisle_length, geom.aisle_width, geom.speed
    occupied = -math.expm1(-lam / k)
    in_aisle = (2.0 * l * k / v) * (1.0 - k * occupied / lam)
    passed = k - (-math.expm1(-lam)) / occupied
    return in_aisle + (2.0 * w / v) * passed
