"""Adaptive augmentation with a piecewise-constant adaptation law.

Runs at the control rate alongside the geometric controller.  A companion
state predictor propagates velocity and body rate under the commanded
wrench plus the current disturbance estimate sigma; the mismatch between
measurement and prediction, scaled by the discrete adaptation gain, gives
the new sigma.  Low-pass filtered sigma (sign-flipped) is the corrective
action, applied on the thrust channel and the three moment channels; the
two lateral force channels are estimated but have no actuator to go to.

Channel layout of the 6-vectors: [fx, fy, fz, mx, my, mz], forces in the
body frame.
"""

from dataclasses import dataclass, field

import numpy as np

from .controller import gyroscopic_torque

E3 = np.array([0.0, 0.0, 1.0])


def adaptation_gain(k_diag, dt):
    """Diagonal of the discrete adaptation matrix.

    For a first-order channel with bandwidth a discretized at dt the exact
    piecewise-constant gain is a * e^(a dt) / (e^(a dt) - 1), applied per
    channel.
    """
    k = np.asarray(k_diag, dtype=float)
    e = np.exp(k * dt)
    return k * e / (e - 1.0)


def blend_compensation(lam):
    """Per-channel factor restoring unit DC gain of the estimator loop.

    The measurement blend in the predictor update pulls a fixed fraction of
    any persistent prediction error back into the predictor, so a constant
    disturbance d settles at a raw estimate below d.  With e = measured -
    predicted, one cycle maps e -> (1 - lam - A dt) e + dt d / m and the
    estimate is sigma = m A e, giving the fixed point

        sigma* = d * A dt / (lam + A dt).

    Since A dt = lam e^lam / (e^lam - 1), the inverse of that fraction
    collapses to 2 - e^(-lam).  Scaling the *output* path (filtered
    estimate and corrective action) by this factor recovers constants
    exactly while leaving the predictor loop, and hence its stability,
    untouched; scaling the gain A itself by the same factor would push the
    error pole past -1 and diverge.
    """
    return 2.0 - np.exp(-np.asarray(lam, dtype=float))


@dataclass(frozen=True)
class L1Params:
    """Adaptation bandwidths and action filter coefficients.

    lam = K * dt is the per-channel predictor blend weight; the defaults
    are 0.4 on the velocity channels and 0.1 on the rate channels at a
    2 ms cycle, i.e. K = diag(200, 200, 200, 50, 50, 50) 1/s.
    """

    lam: np.ndarray = field(default_factory=lambda: np.array([0.4, 0.4, 0.4, 0.1, 0.1, 0.1]))
    lpf_alpha: np.ndarray = field(
        default_factory=lambda: np.array([0.1, 0.1, 0.1, 0.05, 0.05, 0.05]))
    dt: float = 0.002

    def __post_init__(self):
        lam = np.asarray(self.lam, dtype=float)
        alpha = np.asarray(self.lpf_alpha, dtype=float)
        if np.any(lam <= 0) or np.any(lam >= 1):
            raise ValueError("lam must lie in (0, 1) per channel")
        if np.any(alpha <= 0) or np.any(alpha > 1):
            raise ValueError("lpf_alpha must lie in (0, 1] per channel")
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "lpf_alpha", alpha)

    @property
    def k_diag(self):
        return self.lam / self.dt


@dataclass
class L1Action:
    f: float
    moment: np.ndarray


def compute_sigma(v_err, omega_err, R, a_diag, params):
    """Disturbance estimate from the prediction error.

    sigma[0:3] = m R^T A (v_m - v_p)  (body-frame force)
    sigma[3:6] = J A (omega_m - omega_p)
    """
    sf = params.mass * (R.T @ (a_diag[:3] * v_err))
    sm = params.inertia @ (a_diag[3:] * omega_err)
    return np.concatenate([sf, sm])


def predictor_derivatives(omega_m, R, f_total, m_total, sigma, params):
    """Model accelerations under the total commanded wrench plus sigma."""
    vdot = (f_total * R[:, 2] + R @ sigma[:3]) / params.mass
    vdot[2] -= params.gravity
    wdot = params.inertia_inv @ (
        m_total + sigma[3:] - gyroscopic_torque(omega_m, params))
    return vdot, wdot


class L1Controller:
    """Owns the predictor and filter state; call step() once per cycle."""

    def __init__(self, params, vehicle):
        self.p = params
        self.vehicle = vehicle
        self.a_diag = adaptation_gain(params.k_diag, params.dt)
        self.dc = blend_compensation(params.lam)
        self.v_p = np.zeros(3)
        self.omega_p = np.zeros(3)
        self.lpf = np.zeros(6)
        self.sigma = np.zeros(6)
        self.frozen = False

    def reset(self, v0=None, omega0=None):
        self.v_p = np.zeros(3) if v0 is None else np.asarray(v0, dtype=float).copy()
        self.omega_p = np.zeros(3) if omega0 is None else np.asarray(omega0, dtype=float).copy()
        self.lpf[:] = 0.0
        self.sigma[:] = 0.0
        self.frozen = False

    def freeze(self):
        """Stop adapting (used on the switch to fault-tolerant control)."""
        self.frozen = True

    @property
    def sigma_filtered(self):
        """Filtered disturbance estimate with the blend leak compensated.

        This is the quantity the action negates; the two lateral force
        channels are never filtered and stay zero here.
        """
        return self.dc * self.lpf

    @property
    def action(self):
        sf = self.sigma_filtered
        return L1Action(f=-sf[2], moment=-sf[3:6])

    def estimate(self, v_m, omega_m, R):
        """First half of a cycle: update sigma and the filter, return the action."""
        if self.frozen:
            return self.action
        self.sigma = compute_sigma(v_m - self.v_p, omega_m - self.omega_p,
                                   R, self.a_diag, self.vehicle)
        # actionable channels only: body-z force and the three moments
        a = self.p.lpf_alpha
        self.lpf[2:] = (1.0 - a[2:]) * self.lpf[2:] + a[2:] * self.sigma[2:]
        return self.action

    def propagate(self, v_m, omega_m, R, f_total, m_total):
        """Second half: advance the predictor under the wrench actually applied.

        Callers that allocate and clip rotor speeds should reconstruct the
        wrench from the clipped speeds and pass that here; feeding back the
        requested wrench instead lets sigma integrate the undeliverable
        part of its own action and wind up without bound while saturated.
        """
        if self.frozen:
            return
        vdot, wdot = predictor_derivatives(omega_m, R, f_total, m_total,
                                           self.sigma, self.vehicle)
        lam = self.p.lam
        dt = self.p.dt
        self.v_p = (1.0 - lam[:3]) * self.v_p + lam[:3] * v_m + dt * vdot
        self.omega_p = (1.0 - lam[3:]) * self.omega_p + lam[3:] * omega_m + dt * wdot

    def step(self, v_m, omega_m, R, wrench_nom, wrench_applied=None):
        """One full adaptation cycle; returns the corrective action.

        Order per cycle: estimate sigma, filter it into the action, then
        propagate the predictor under the applied wrench (base plus action
        unless the caller supplies the post-allocation wrench).
        """
        act = self.estimate(v_m, omega_m, R)
        if wrench_applied is None:
            f_total = wrench_nom.f + act.f
            m_total = wrench_nom.moment + act.moment
        else:
            f_total = wrench_applied.f
            m_total = wrench_applied.moment
        self.propagate(v_m, omega_m, R, f_total, m_total)
        return act
