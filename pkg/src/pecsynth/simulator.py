"""Fixed-step simulation of plant + detector + controller under bounded
disturbances and the stealthy sensor attack, plus the batched Monte Carlo
reachable-set oracle used by the containment tests.

The coupled dynamics are linear in (state, disturbances) with a sinusoidal
forcing after attack onset, so each RK4 stage is a single matrix-vector
product; disturbances are piecewise constant with a fixed dwell so runs are
bit-deterministic for a given seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from pecsynth import matrixkit as mk
from pecsynth.errors import DimensionMismatch, NotStable, StepTooLarge
from pecsynth.model import BaseController, Detector, LtiPlant
from pecsynth.realization import PecRealization


@dataclass(frozen=True)
class StealthyFdi:
    """Sinusoidal injection on one sensor with optional feedback gains on the
    attacked sensor's estimation error and noise.

    With zero gains the bracket of the attack law is the attack-free identity
    and the injected signal is the bare sinusoid; the observer counteracts it
    and the residual stays deep inside the alarm ellipsoid. Gains (-1, -1)
    instead cancel the attacked sensor's residual content entirely, pinning
    that residual component to amplitude * sin(freq * t).
    """

    sensor: int = 1
    t_start: float = 125.0
    amplitude: float = 0.1
    freq: float = 0.25
    e_gain: float = 0.0
    v_gain: float = 0.0


@dataclass(frozen=True)
class SimConfig:
    dt: float = 1e-3
    horizon: float = 250.0
    seed: int = 0
    disturbance_mode: str = "zero"      # 'zero' | 'boundary'
    dwell: float = 1.0
    attack: StealthyFdi = None
    x0: np.ndarray = None

    def __post_init__(self):
        if not (self.dt > 0):
            raise DimensionMismatch("dt must be positive")
        if self.horizon < self.dt:
            raise DimensionMismatch("horizon must cover at least one step")
        if self.attack is not None and self.attack.t_start > self.horizon:
            raise DimensionMismatch("attack start time beyond horizon")


@dataclass(frozen=True)
class SimTrace:
    t: np.ndarray
    x: np.ndarray
    xhat: np.ndarray
    rho: np.ndarray
    u: np.ndarray
    y: np.ndarray
    ytilde: np.ndarray
    r: np.ndarray
    delta: np.ndarray
    stealth: np.ndarray          # r^T Pi r per step
    alarm: np.ndarray            # stealth > 1, exactly

    @property
    def e(self) -> np.ndarray:
        return self.x - self.xhat

    @property
    def n_steps(self) -> int:
        return len(self.t)

    def max_stealth(self) -> float:
        return float(self.stealth.max())

    def alarm_count(self) -> int:
        return int(self.alarm.sum())


def _controller_matrices(controller):
    if isinstance(controller, PecRealization):
        return controller.A_c, controller.B_c, controller.C_c, controller.D_c, controller.F
    if isinstance(controller, BaseController):
        return controller.A_c, controller.B_c, controller.C_c, controller.D_c, None
    raise DimensionMismatch("controller must be a BaseController or PecRealization")


def _boundary_sampler(W, rng):
    """Draw vectors uniformly on the boundary of {z : z^T W z = 1}."""
    if W.shape[0] == 0:
        zero = np.zeros(0)
        return lambda: zero
    R = _inv_sqrt(W)

    def draw():
        u = rng.standard_normal(W.shape[0])
        n = np.linalg.norm(u)
        while n == 0.0:
            u = rng.standard_normal(W.shape[0])
            n = np.linalg.norm(u)
        return R @ (u / n)

    return draw


def _inv_sqrt(W):
    vals, vecs = np.linalg.eigh(0.5 * (W + W.T))
    return vecs @ np.diag(1.0 / np.sqrt(vals)) @ vecs.T


def simulate(plant: LtiPlant, controller, detector: Detector, cfg: SimConfig,
             bounds=None) -> SimTrace:
    """Classical fixed-step RK4 run of the coupled plant/detector/controller
    ODEs; the attack is injected into the transmitted output from its onset.

    `bounds` supplies the disturbance ellipsoids for boundary mode; zero mode
    needs none. With a PecRealization the realized state starts at
    rho(0) + F xbar_1(0) so nominal trajectories coincide with the base loop.
    """
    A, B, C, G, H = plant.A, plant.B, plant.C, plant.G, plant.H
    L, Pi = detector.L, detector.Pi
    A_c, B_c, C_c, D_c, F = _controller_matrices(controller)
    n_x, n_y, n_rho = plant.n_x, plant.n_y, A_c.shape[0]
    n_w, n_v = plant.n_w, plant.n_v

    att = cfg.attack
    if att is not None and not (1 <= att.sensor <= n_y):
        raise DimensionMismatch(f"attacked sensor {att.sensor} outside [1, {n_y}]")

    # fastest mode gate: dt <= 0.1 / |lambda|_max of the autonomous coupled loop
    M = np.block([
        [A + B @ D_c @ C, np.zeros((n_x, n_x)), B @ C_c],
        [(L + B @ D_c) @ C, A - L @ C, B @ C_c],
        [B_c @ C, np.zeros((n_rho, n_x)), A_c],
    ])
    lam_max = float(np.abs(np.linalg.eigvals(M)).max())
    if lam_max > 0 and cfg.dt > 0.1 / lam_max:
        raise StepTooLarge(f"dt={cfg.dt} does not resolve |lambda|max={lam_max:.3g}")

    E_w = np.vstack([G, np.zeros((n_x, n_w)), np.zeros((n_rho, n_w))])
    E_v = np.vstack([B @ D_c @ H, (L + B @ D_c) @ H, B_c @ H])
    if att is not None:
        a = att.sensor - 1
        Gam = np.zeros((n_y, 1)); Gam[a, 0] = 1.0
        E_d = np.vstack([B @ D_c @ Gam, (L + B @ D_c) @ Gam, B_c @ Gam])
        q_s = att.e_gain * np.concatenate([C[a], -C[a], np.zeros(n_rho)])
        q_v = att.v_gain * H[a]
        M_att = M + np.outer(E_d[:, 0], q_s)
        E_v_att = E_v + np.outer(E_d[:, 0], q_v)
        f_att = E_d[:, 0] * att.amplitude
    n = n_x + n_x + n_rho

    if cfg.disturbance_mode == "boundary":
        if bounds is None:
            raise DimensionMismatch("boundary mode needs disturbance bounds")
        rng = np.random.default_rng(cfg.seed)
        draw_w = _boundary_sampler(bounds.W_w, rng)
        draw_v = _boundary_sampler(bounds.W_v, rng)
    elif cfg.disturbance_mode == "zero":
        zw, zv = np.zeros(n_w), np.zeros(n_v)
        draw_w = lambda: zw
        draw_v = lambda: zv
    else:
        raise DimensionMismatch(f"unknown disturbance mode {cfg.disturbance_mode!r}")

    x0 = np.zeros(n_x) if cfg.x0 is None else np.asarray(cfg.x0, dtype=float)
    s = np.concatenate([x0, np.zeros(n_x), np.zeros(n_rho)])
    if F is not None:
        s[2 * n_x:] = F @ (C @ x0)   # rho_bar(0) = rho(0) + F xbar_1(0), rho(0) = 0

    n_steps = int(round(cfg.horizon / cfg.dt))
    dwell_steps = max(1, int(round(cfg.dwell / cfg.dt)))
    t_grid = np.empty(n_steps + 1)
    xs = np.empty((n_steps + 1, n_x)); xh = np.empty((n_steps + 1, n_x))
    rhos = np.empty((n_steps + 1, n_rho)); us = np.empty((n_steps + 1, B.shape[1]))
    ys = np.empty((n_steps + 1, n_y)); yts = np.empty((n_steps + 1, n_y))
    rs = np.empty((n_steps + 1, n_y)); deltas = np.empty(n_steps + 1)
    stealth = np.empty(n_steps + 1)

    w = draw_w(); v = draw_v()

    def outputs(t, s, w, v):
        x = s[:n_x]; xhv = s[n_x:2 * n_x]; rho = s[2 * n_x:]
        y = C @ x + H @ v
        if att is not None and t >= att.t_start:
            dlt = float(att.e_gain * (C[att.sensor - 1] @ (x - xhv))
                        + att.v_gain * (H[att.sensor - 1] @ v)
                        + att.amplitude * np.sin(att.freq * t))
        else:
            dlt = 0.0
        yt = y.copy()
        if dlt:
            yt[att.sensor - 1] += dlt
        u = C_c @ rho + D_c @ yt
        r = yt - C @ xhv
        return y, yt, u, r, dlt

    def deriv(t, s, w, v):
        if att is not None and t >= att.t_start:
            return (M_att @ s + E_w @ w + E_v_att @ v
                    + f_att * np.sin(att.freq * t))
        return M @ s + E_w @ w + E_v @ v

    t = 0.0
    y, yt, u, r, dlt = outputs(t, s, w, v)
    t_grid[0] = t; xs[0] = s[:n_x]; xh[0] = s[n_x:2 * n_x]; rhos[0] = s[2 * n_x:]
    us[0] = u; ys[0] = y; yts[0] = yt; rs[0] = r; deltas[0] = dlt
    stealth[0] = r @ Pi @ r
    dt = cfg.dt
    for k in range(n_steps):
        if k % dwell_steps == 0 and k > 0:
            w = draw_w(); v = draw_v()
        k1 = deriv(t, s, w, v)
        k2 = deriv(t + dt / 2, s + dt / 2 * k1, w, v)
        k3 = deriv(t + dt / 2, s + dt / 2 * k2, w, v)
        k4 = deriv(t + dt, s + dt * k3, w, v)
        s = s + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t = (k + 1) * dt
        y, yt, u, r, dlt = outputs(t, s, w, v)
        i = k + 1
        t_grid[i] = t; xs[i] = s[:n_x]; xh[i] = s[n_x:2 * n_x]; rhos[i] = s[2 * n_x:]
        us[i] = u; ys[i] = y; yts[i] = yt; rs[i] = r; deltas[i] = dlt
        stealth[i] = r @ Pi @ r

    return SimTrace(
        t=t_grid, x=xs, xhat=xh, rho=rhos, u=us, y=ys, ytilde=yts, r=rs,
        delta=deltas, stealth=stealth, alarm=stealth > 1.0,
    )


def mc_reachable_envelope(A, channels, P, n_samples: int = 500, horizon: float = 200.0,
                          dt: float = 0.02, dwell: float = 1.0, seed: int = 0) -> float:
    """Max of z^T P z over post-transient states of `n_samples` batched runs
    driven by boundary-sampled piecewise-constant inputs.

    `channels` is a list of (B, W) pairs; each input lives on the boundary of
    {u : u^T W u = 1}. One-sided soundness oracle: a valid certificate P keeps
    the return value at or below 1.
    """
    A = mk.as_matrix(A, "A")
    P = mk.sym(P, name="P")
    if not mk.is_hurwitz(A):
        raise NotStable("reachable-set oracle needs Hurwitz dynamics")
    lam = np.linalg.eigvals(A)
    lam_max = float(np.abs(lam).max())
    if lam_max > 0 and dt > 0.1 / lam_max:
        raise StepTooLarge(f"dt={dt} does not resolve |lambda|max={lam_max:.3g}")
    t_skip = 5.0 / float(-np.max(lam.real))
    if horizon <= t_skip:
        raise DimensionMismatch(
            f"horizon {horizon} must exceed the transient-discard window "
            f"{t_skip:.1f} (5x the slowest time constant)"
        )
    rng = np.random.default_rng(seed)
    n = A.shape[0]
    Bs, Rs = [], []
    for B, W in channels:
        B = mk.as_matrix(B, "B")
        if B.shape[1] == 0:
            continue
        Bs.append(B)
        Rs.append(_inv_sqrt(mk.sym(W)))
    Z = np.zeros((n_samples, n))
    At = A.T
    n_steps = int(round(horizon / dt))
    dwell_steps = max(1, int(round(dwell / dt)))
    env = 0.0

    def draw_inputs():
        Us = []
        for B, R in zip(Bs, Rs):
            U = rng.standard_normal((n_samples, B.shape[1]))
            U /= np.linalg.norm(U, axis=1, keepdims=True)
            Us.append(U @ R.T)
        return Us

    Us = draw_inputs()
    forcing = sum(U @ B.T for U, B in zip(Us, Bs)) if Bs else np.zeros((n_samples, n))
    for k in range(n_steps):
        if k % dwell_steps == 0 and k > 0:
            Us = draw_inputs()
            forcing = sum(U @ B.T for U, B in zip(Us, Bs)) if Bs else forcing * 0.0
        K1 = Z @ At + forcing
        K2 = (Z + dt / 2 * K1) @ At + forcing
        K3 = (Z + dt / 2 * K2) @ At + forcing
        K4 = (Z + dt * K3) @ At + forcing
        Z = Z + dt / 6 * (K1 + 2 * K2 + 2 * K3 + K4)
        if (k + 1) * dt > t_skip:
            env = max(env, float(np.einsum("ij,jk,ik->i", Z, P, Z).max()))
    return env
