"""Coarse-to-fine robust variational optical flow.

The estimator minimises, on every pyramid level,

    sum psi((I2(x + w) - I1(x))**2) + alpha * sum psi(|grad u|**2 + |grad v|**2)

with ``psi(s2) = sqrt(s2 + eps**2)``.  Each level runs ``outer_iterations``
relinearisations of the data term; each of those runs ``inner_iterations``
lagged-nonlinearity reweightings, and every reweighted quadratic system is
relaxed with ``sor_iterations`` red-black block SOR sweeps.
"""
from __future__ import annotations

import functools
from dataclasses import asdict, dataclass
from typing import Callable, Optional

import numpy as np
from scipy import ndimage

from .imaging import (
    as_image,
    bilinear_warp,
    check_same_shape,
    resize_bilinear,
    sample_bilinear,
    to_grayscale,
)

_DERIV_KERNEL = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
# weight of the fixed frame when blending the pair for spatial derivatives
_FIXED_BLEND = 0.4


@dataclass(frozen=True)
class FlowParams:
    alpha: float = 0.012
    pyramid_ratio: float = 0.75
    min_width: int = 20
    outer_iterations: int = 7
    inner_iterations: int = 1
    sor_iterations: int = 30
    sor_omega: float = 1.8
    epsilon: float = 1e-3

    def __post_init__(self):
        if not 0.0 < self.pyramid_ratio < 1.0:
            raise ValueError("pyramid_ratio must lie in (0, 1)")
        if self.min_width < 4:
            raise ValueError("min_width must be >= 4")
        for name in ("outer_iterations", "inner_iterations", "sor_iterations"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not 0.0 < self.sor_omega < 2.0:
            raise ValueError("sor_omega must lie in (0, 2)")
        if self.epsilon <= 0.0:
            raise ValueError("epsilon must be > 0")
        if self.alpha <= 0.0:
            raise ValueError("alpha must be > 0")

    def to_dict(self) -> dict:
        return asdict(self)


def build_pyramid(image, params: FlowParams) -> list[np.ndarray]:
    """Grayscale pyramid, coarsest level first; the last level is the input."""
    img = to_grayscale(image)
    ratio = params.pyramid_ratio
    sigma = 0.5 * np.sqrt(1.0 / ratio ** 2 - 1.0)
    levels = [img]
    cur = img
    while True:
        h, w = cur.shape
        nw = int(round(w * ratio))
        if nw < params.min_width:
            break
        nh = max(1, int(round(h * ratio)))
        smooth = ndimage.gaussian_filter(cur, sigma, mode="nearest")
        cur = resize_bilinear(smooth, (nh, nw))
        levels.append(cur)
    return levels[::-1]


def flow_magnitude(flow) -> np.ndarray:
    f = np.asarray(flow, dtype=np.float64)
    return np.sqrt(f[..., 0] ** 2 + f[..., 1] ** 2)


def _derivatives(img: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    dx = ndimage.correlate1d(img, _DERIV_KERNEL, axis=1, mode="nearest")
    dy = ndimage.correlate1d(img, _DERIV_KERNEL, axis=0, mode="nearest")
    return dx, dy


def _forward_diff(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    ax = np.zeros_like(a)
    ay = np.zeros_like(a)
    ax[:, :-1] = a[:, 1:] - a[:, :-1]
    ay[:-1, :] = a[1:, :] - a[:-1, :]
    return ax, ay


def _smoothness_arg(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    ux, uy = _forward_diff(u)
    vx, vy = _forward_diff(v)
    return ux * ux + uy * uy + vx * vx + vy * vy


def _neighbour_sum(d, w_e, w_w, w_s, w_n):
    out = np.zeros_like(d)
    out[:, :-1] += w_e[:, :-1] * d[:, 1:]
    out[:, 1:] += w_w[:, 1:] * d[:, :-1]
    out[:-1, :] += w_s[:-1, :] * d[1:, :]
    out[1:, :] += w_n[1:, :] * d[:-1, :]
    return out


class _Level:
    """Data/energy bookkeeping for one pyramid level."""

    def __init__(self, fixed, warped, flow, params, second):
        self.fixed = fixed
        self.warped = warped
        self.flow = flow
        self.second = second
        self.params = params
        h, w = fixed.shape
        self.yy, self.xx = np.mgrid[0:h, 0:w].astype(np.float64)

    def rewarp(self, inc: np.ndarray) -> np.ndarray:
        if self.second is not None:
            total = self.flow + inc
            return sample_bilinear(self.second, self.xx + total[..., 0], self.yy + total[..., 1])
        if not inc.any():
            return self.warped
        return sample_bilinear(self.warped, self.xx + inc[..., 0], self.yy + inc[..., 1])

    def energy(self, inc: np.ndarray) -> float:
        eps2 = self.params.epsilon ** 2
        resid = self.rewarp(inc) - self.fixed
        total = self.flow + inc
        smooth = _smoothness_arg(total[..., 0], total[..., 1])
        return float(np.sum(np.sqrt(resid ** 2 + eps2))
                     + self.params.alpha * np.sum(np.sqrt(smooth + eps2)))


def relax_linearized(ix, iy, it, u0, v0, params: FlowParams):
    """Lagged-nonlinearity loop for one linearisation; returns (du, dv)."""
    eps2 = params.epsilon ** 2
    omega = params.sor_omega
    h, w = it.shape
    du = np.zeros_like(it)
    dv = np.zeros_like(it)
    red = (np.add.outer(np.arange(h), np.arange(w)) % 2) == 0
    colours = (red, ~red)
    ixx, iyy, ixy = ix * ix, iy * iy, ix * iy
    ixt, iyt = ix * it, iy * it
    for _ in range(params.inner_iterations):
        r = it + ix * du + iy * dv
        phi_d = 0.5 / np.sqrt(r * r + eps2)
        phi_s = params.alpha * 0.5 / np.sqrt(_smoothness_arg(u0 + du, v0 + dv) + eps2)

        # edge weights: p->east and p->south use phi at p
        w_e = np.zeros_like(phi_s)
        w_s = np.zeros_like(phi_s)
        w_e[:, :-1] = phi_s[:, :-1]
        w_s[:-1, :] = phi_s[:-1, :]
        w_w = np.zeros_like(phi_s)
        w_n = np.zeros_like(phi_s)
        w_w[:, 1:] = w_e[:, :-1]
        w_n[1:, :] = w_s[:-1, :]
        wsum = w_e + w_w + w_s + w_n

        a11 = phi_d * ixx + wsum
        a22 = phi_d * iyy + wsum
        a12 = phi_d * ixy
        det = a11 * a22 - a12 * a12
        base_u = -phi_d * ixt + _neighbour_sum(u0, w_e, w_w, w_s, w_n) - wsum * u0
        base_v = -phi_d * iyt + _neighbour_sum(v0, w_e, w_w, w_s, w_n) - wsum * v0

        for _ in range(params.sor_iterations):
            for c in colours:
                bu = base_u + _neighbour_sum(du, w_e, w_w, w_s, w_n)
                bv = base_v + _neighbour_sum(dv, w_e, w_w, w_s, w_n)
                su = (a22 * bu - a12 * bv) / det
                sv = (a11 * bv - a12 * bu) / det
                du[c] = (1.0 - omega) * du[c] + omega * su[c]
                dv[c] = (1.0 - omega) * dv[c] + omega * sv[c]
    return du, dv


def solve_level(
    fixed,
    warped,
    flow,
    params: FlowParams,
    *,
    second=None,
    callback: Optional[Callable[[int, np.ndarray], None]] = None,
) -> np.ndarray:
    """Flow increment for one pyramid level.

    ``warped`` is the second frame already warped by ``flow``.  When the
    unwarped ``second`` frame is supplied, each relinearisation resamples it
    at ``x + flow + increment``; otherwise ``warped`` is resampled at
    ``x + increment``.  A relinearisation whose step raises the level energy
    is halved (up to four times) and dropped if it still does not help, so the
    energy never increases across outer iterations.  ``callback(k, inc)`` is
    invoked after outer iteration ``k``.
    """
    fixed = np.asarray(fixed, dtype=np.float64)
    warped = np.asarray(warped, dtype=np.float64)
    flow = np.asarray(flow, dtype=np.float64)
    check_same_shape(fixed, warped, flow, what="fixed, warped and flow")
    if second is not None:
        second = np.asarray(second, dtype=np.float64)
        check_same_shape(fixed, second, what="fixed and second")

    level = _Level(fixed, warped, flow, params, second)
    inc = np.zeros_like(flow)
    current = level.energy(inc)
    for k in range(params.outer_iterations):
        w_img = level.rewarp(inc)
        ix, iy = _derivatives(_FIXED_BLEND * fixed + (1.0 - _FIXED_BLEND) * w_img)
        it = w_img - fixed
        du, dv = relax_linearized(ix, iy, it, flow[..., 0] + inc[..., 0], flow[..., 1] + inc[..., 1], params)
        step = np.stack([du, dv], axis=-1)
        if not np.all(np.isfinite(step)):
            raise FloatingPointError("non-finite flow increment in level solve")

        accepted = False
        for _ in range(5):
            candidate = inc + step
            e = level.energy(candidate)
            if e <= current:
                inc, current, accepted = candidate, e, True
                break
            step = 0.5 * step
        if callback is not None:
            callback(k, inc)
        if not accepted:
            break
    return inc


def _forward_level(callback, lvl, im1, im2, base, k, inc):
    callback(lvl, k, im1, im2, base + inc)


def compute_flow(
    first,
    second,
    params: FlowParams | None = None,
    *,
    callback: Optional[Callable[[int, int, np.ndarray, np.ndarray, np.ndarray], None]] = None,
) -> np.ndarray:
    """Dense flow ``w`` with ``second(x + w(x)) ~ first(x)``; returns ``(H, W, 2)``.

    ``callback(level, k, first_l, second_l, total_flow)`` fires with ``k = -1``
    on entering each level and after every outer iteration ``k`` on it.
    """
    params = params or FlowParams()
    first = as_image(first)
    second = as_image(second)
    h, w = check_same_shape(first, second, what="frames")
    if h < 4 or w < 4:
        raise ValueError("frames must be at least 4x4")
    g1 = to_grayscale(first)
    g2 = to_grayscale(second)
    if np.ptp(g1) == 0.0 and np.ptp(g2) == 0.0:
        return np.zeros((h, w, 2))

    pyr1 = build_pyramid(g1, params)
    pyr2 = build_pyramid(g2, params)
    flow = np.zeros(pyr1[0].shape + (2,))
    for lvl, (im1, im2) in enumerate(zip(pyr1, pyr2)):
        if flow.shape[:2] != im1.shape:
            oh, ow = flow.shape[:2]
            nh, nw = im1.shape
            flow = resize_bilinear(flow, (nh, nw))
            flow[..., 0] *= nw / ow
            flow[..., 1] *= nh / oh
        warped = bilinear_warp(im2, flow)
        level_cb = None
        if callback is not None:
            callback(lvl, -1, im1, im2, flow)
            level_cb = functools.partial(_forward_level, callback, lvl, im1, im2, flow)
        flow = flow + solve_level(im1, warped, flow, params, second=im2, callback=level_cb)
    return flow
