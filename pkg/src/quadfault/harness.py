"""Closed-loop simulation harness.

Runs the plant at sim_dt (1 kHz default) and the full control stack at
control_dt (500 Hz default) with zero-order hold on the motor commands.
Per control cycle the harness logs state, setpoint, wrenches, speeds, the
adaptation internals, and the damage estimates; events (faults, clips,
the fault-tolerant transition) go to a separate table.  A run aborts and
is marked diverged when the position error passes 10 m or the integrator
produces a non-finite state.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import quat
from .controller import (GeometricController, IntegralBaseline, accel_command,
                         compute_b3, thrust_command, DegenerateThrustError)
from .damage import DamageEstimator, DamageObservation
from .dynamics import (ExternalDisturbance, IntegrationError, RigidBodyState,
                       measure, motor_response, step, true_mixing)
from .fault_tolerant import (Mode, SupervisorState, ft_allocate,
                             ft_moment_command, reduced_attitude_error,
                             supervise)
from .l1 import L1Controller
from .trajectories import setpoint
from .vehicle import DamageProfile, Wrench

DIVERGENCE_LIMIT = 10.0   # m position error that aborts a run

COLUMNS = (
    ["t"]
    + ["px", "py", "pz", "vx", "vy", "vz", "qw", "qx", "qy", "qz", "wx", "wy", "wz"]
    + ["pdx", "pdy", "pdz", "vdx", "vdy", "vdz", "psid"]
    + ["f_nom", "mx_nom", "my_nom", "mz_nom"]
    + ["f_cmd", "mx_cmd", "my_cmd", "mz_cmd"]
    + [f"w{i}_nom" for i in range(4)]
    + [f"w{i}_cmd" for i in range(4)]
    + [f"sig{i}" for i in range(6)]
    + [f"kmis{i}_raw" for i in range(4)]
    + [f"kmis{i}_filt" for i in range(4)]
    + ["mode", "clip", "est_ok"]
)
_IDX = {name: i for i, name in enumerate(COLUMNS)}


@dataclass
class RunRecord:
    """Per-cycle log as a dense float array with named column access."""

    data: np.ndarray
    events: list

    def __getitem__(self, name):
        return self.data[:, _IDX[name]]

    def __len__(self):
        return self.data.shape[0]

    def to_csv(self, path):
        np.savetxt(path, self.data, delimiter=",", fmt="%.10g",
                   header=",".join(COLUMNS), comments="")

    def events_to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("t,event,rotor,value\n")
            for e in self.events:
                fh.write(f"{e['t']:.6f},{e['event']},{e.get('rotor', -1)},"
                         f"{e.get('value', 0.0):.6g}\n")


@dataclass
class RunResult:
    config: object
    record: RunRecord
    summary: dict

    @property
    def diverged(self):
        return self.summary["status"] != "completed"


def rmse_report(record, warmup):
    """Per-axis position RMSE over t >= warmup, plus the axis mean."""
    t = record["t"]
    sel = t >= warmup
    if not np.any(sel):
        sel = slice(None)
    out = {}
    for axis, (pc, dc) in zip("xyz", [("px", "pdx"), ("py", "pdy"), ("pz", "pdz")]):
        err = record[pc][sel] - record[dc][sel]
        out[axis] = float(np.sqrt(np.mean(err ** 2)))
    out["mean"] = float(np.mean([out["x"], out["y"], out["z"]]))
    return out


def run(cfg, out_dir=None):
    """Execute one scenario; optionally write run.csv/events.csv/summary.json."""
    params = cfg.vehicle
    rng = np.random.default_rng(cfg.seed)
    traj = lambda t: setpoint(cfg.trajectory, t, gravity=params.gravity)

    state = RigidBodyState.hover(cfg.trajectory.start_point())
    ctrl = GeometricController(params, cfg.gains, cfg.control_dt)
    adapt = L1Controller(cfg.l1, params)
    integral = IntegralBaseline(cfg.integral_gain_f, cfg.integral_gain_m,
                                cfg.integral_clamp)
    estimator = DamageEstimator(params, window=cfg.estimator_window,
                                prior_threshold=cfg.prior_threshold,
                                min_thrust_factor=cfg.min_thrust_factor,
                                negative_limit=cfg.negative_limit)
    sup = SupervisorState(threshold=cfg.ft_threshold, debounce_n=cfg.ft_debounce,
                          enabled=cfg.supervisor_enabled)
    if cfg.ft_rotor >= 0:
        sup.mode = Mode.FAULT_TOLERANT
        sup.disabled_rotor = cfg.ft_rotor

    damage = DamageProfile.undamaged()        # plant truth, mutated by schedule
    true_mix = true_mixing(params, damage)    # cached until a fault mutates it
    model_mix = params.mixing_matrix()        # controller's undamaged model
    motor_scale = np.ones(4)                  # motor_input injection mode
    truth_mis = np.zeros(4)                   # injected mismatch for reporting
    pending = sorted(cfg.damage_schedule, key=lambda e: e.time)
    estimation_on = cfg.l1_enabled or cfg.integral_enabled

    # Gust process: one OU update per control cycle, held over the sub-steps.
    # Draws come from a stream separate from the sensor noise so turning
    # gusts on or off never perturbs the measurement sequence of a seed.
    gust_f = np.zeros(3)
    gust_m = np.zeros(3)
    if cfg.gust.enabled:
        gust_rng = np.random.default_rng([cfg.seed, 1])
        gust_decay = np.exp(-cfg.control_dt / cfg.gust.tau)
        gust_kick = np.sqrt(1.0 - gust_decay ** 2)
        gust_f = cfg.gust.force_std * gust_rng.standard_normal(3)
        gust_m = cfg.gust.moment_std * gust_rng.standard_normal(3)

    n_cycles = int(round(cfg.duration / cfg.control_dt))
    sub_steps = cfg.steps_per_cycle
    data = np.full((n_cycles, len(COLUMNS)), np.nan)
    events = []
    actual_speeds = np.full(4, params.hover_speed)
    prev_b3_ft = np.array([0.0, 0.0, 1.0])
    status = "completed"
    end_time = cfg.duration
    transition_time = None
    clip_cycles = 0

    for k in range(n_cycles):
        t = k * cfg.control_dt
        sp = traj(t)
        if not np.isfinite(state.p).all() or \
                np.linalg.norm(state.p - sp.p_d) > DIVERGENCE_LIMIT:
            status = "diverged"
            end_time = t
            events.append({"t": t, "event": "diverged"})
            data = data[:k]
            break

        v_m, omega_m = measure(state, rng, cfg.noise)
        R = quat.to_matrix(state.q)
        ft_moment_z = 0.0
        est_ok = 0.0

        if sup.fault_tolerant:
            a_cmd = accel_command(state.p, v_m, sp, cfg.gains, params.gravity)
            f = thrust_command(a_cmd, state.q, params)
            try:
                b3_d = compute_b3(a_cmd)
                prev_b3_ft = b3_d
            except DegenerateThrustError:
                b3_d = prev_b3_ft
            e_red = R.T @ reduced_attitude_error(b3_d, R[:, 2])
            e_om_xy = np.array([omega_m[0], omega_m[1], 0.0])
            M = ft_moment_command(e_red, e_om_xy, omega_m, params, cfg.gains,
                                  spin_ceiling=cfg.spin_ceiling,
                                  spin_damping=cfg.spin_damping,
                                  tilt_budget=cfg.tilt_budget)
            ft_moment_z = M[2]
            wrench_nom = Wrench(f=f, moment=M.copy())
            wrench_cmd = wrench_nom
            speeds_cmd, clipped = ft_allocate(f, M[0], M[1], sup.disabled_rotor, params)
            speeds_nom = speeds_cmd
        else:
            wrench_nom, dbg = ctrl.command(t, state.p, v_m, state.q, omega_m, traj,
                                           sp0=sp, R=R)
            if cfg.l1_enabled:
                act = adapt.estimate(v_m, omega_m, R)
                wrench_cmd = Wrench(wrench_nom.f + act.f, wrench_nom.moment + act.moment)
            elif cfg.integral_enabled:
                inc = integral.step(R.T @ (sp.v_d - v_m), cfg.control_dt)
                wrench_cmd = wrench_nom + inc
            else:
                wrench_cmd = wrench_nom
            speeds_cmd, clipped = ctrl.allocate(wrench_cmd)
            speeds_nom, _ = ctrl.allocate(wrench_nom)
            if cfg.l1_enabled:
                # predictor sees the wrench the clipped speeds can deliver,
                # not the request, so sigma cannot wind up while saturated
                deliverable = model_mix @ (speeds_cmd * speeds_cmd)
                adapt.propagate(v_m, omega_m, R, deliverable[0], deliverable[1:4])

            if estimation_on:
                # ratios use the allocation requests: past the speed cap the
                # capped value would mask how hard the adaptation is pushing
                obs = DamageObservation(omega_nom=ctrl.allocation_request(wrench_nom),
                                        omega_l1=ctrl.allocation_request(wrench_cmd),
                                        f_nom=wrench_nom.f, m_nom=wrench_nom.moment)
                estimator.estimate_cycle(obs)
                est_ok = float(estimator.last_raw is not None)
                was_adaptive = not sup.fault_tolerant
                sup = supervise(estimator.filtered, sup)
                if sup.fault_tolerant and was_adaptive:
                    transition_time = t
                    adapt.freeze()
                    events.append({"t": t, "event": "transition",
                                   "rotor": sup.disabled_rotor,
                                   "value": float(np.max(estimator.filtered))})

        if clipped.any():
            clip_cycles += 1
            events.append({"t": t, "event": "clip",
                           "value": float(sum(1 << i for i in range(4) if clipped[i]))})

        row = data[k]
        row[0] = t
        row[1:4] = state.p
        row[4:7] = state.v
        row[7:11] = state.q
        row[11:14] = state.omega
        row[14:17] = sp.p_d
        row[17:20] = sp.v_d
        row[20] = sp.psi
        row[21] = wrench_nom.f
        row[22:25] = wrench_nom.moment
        row[25] = wrench_cmd.f
        row[26:29] = wrench_cmd.moment
        row[29:33] = speeds_nom
        row[33:37] = speeds_cmd
        row[37:43] = adapt.sigma_filtered
        if estimator.last_raw is not None:
            row[43:47] = estimator.last_raw
        row[47:51] = estimator.filtered
        row[51] = 1.0 if sup.fault_tolerant else 0.0
        row[52] = 1.0 if clipped.any() else 0.0
        row[53] = est_ok

        if cfg.gust.enabled:
            gust_f = (gust_decay * gust_f
                      + gust_kick * cfg.gust.force_std * gust_rng.standard_normal(3))
            gust_m = (gust_decay * gust_m
                      + gust_kick * cfg.gust.moment_std * gust_rng.standard_normal(3))

        # plant propagation with zero-order hold on the commands
        try:
            for i in range(sub_steps):
                t_sim = t + i * cfg.sim_dt
                while pending and pending[0].time <= t_sim + 1e-12:
                    ev = pending.pop(0)
                    truth_mis[ev.rotor] = 1.0 - ev.kf_ratio
                    if cfg.injection_mode == "motor_input":
                        motor_scale[ev.rotor] = np.sqrt(ev.kf_ratio)
                    else:
                        damage.set_rotor(ev.rotor, ev.kf_ratio)
                        true_mix = true_mixing(params, damage)
                    events.append({"t": t_sim, "event": "damage_applied",
                                   "rotor": ev.rotor, "value": ev.kf_ratio})
                force = gust_f.copy()
                moment = gust_m + np.array([0.0, 0.0, ft_moment_z])
                for w in cfg.disturbance_schedule:
                    if w.active(t_sim):
                        force = force + w.force_world
                        moment = moment + w.moment_body
                dist = ExternalDisturbance(force_world=force, moment_body=moment)
                actual_speeds = motor_response(actual_speeds, speeds_cmd * motor_scale,
                                               params.motor_tau, cfg.sim_dt)
                state = step(state, actual_speeds, params, damage, dist, cfg.sim_dt,
                             mix=true_mix)
        except IntegrationError:
            status = "diverged"
            end_time = t
            events.append({"t": t, "event": "diverged"})
            data = data[:k + 1]
            break

    record = RunRecord(data=data, events=events)
    warmup = cfg.default_warmup()
    summary = {
        "schema": 1,
        "name": cfg.name,
        "seed": cfg.seed,
        "status": status,
        "end_time": end_time,
        "warmup": warmup,
        "rmse": rmse_report(record, warmup) if len(record) else None,
        "transition": {
            "occurred": transition_time is not None,
            "time": transition_time,
            "rotor": sup.disabled_rotor if transition_time is not None else None,
        },
        "damage_truth": truth_mis.tolist(),
        "estimate_final": estimator.filtered.tolist(),
        "clip_cycles": clip_cycles,
    }
    result = RunResult(config=cfg, record=record, summary=summary)
    if out_dir is not None:
        write_outputs(result, out_dir)
    return result


def write_outputs(result, out_dir):
    from .scenario import to_dict  # local import to avoid a cycle
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    result.record.to_csv(out / "run.csv")
    result.record.events_to_csv(out / "events.csv")
    payload = dict(result.summary)
    payload["config"] = to_dict(result.config)
    with open(out / "summary.json", "w") as fh:
        json.dump(payload, fh, indent=2)


def sweep(configs, out_dir=None):
    """Run a list of scenarios, collecting one summary row each.

    A run that diverges or errors is recorded and the sweep continues.
    """
    rows = []
    for cfg in configs:
        sub = Path(out_dir) / cfg.name if out_dir is not None else None
        try:
            res = run(cfg, out_dir=sub)
            rmse = res.summary["rmse"] or {}
            rows.append({
                "name": cfg.name,
                "status": res.summary["status"],
                "l1": cfg.l1_enabled,
                "damage": max(res.summary["damage_truth"]),
                "period": cfg.trajectory.period,
                "rmse_x": rmse.get("x", np.nan),
                "rmse_y": rmse.get("y", np.nan),
                "rmse_z": rmse.get("z", np.nan),
                "rmse_mean": rmse.get("mean", np.nan),
                "transition": res.summary["transition"]["occurred"],
            })
        except Exception as e:  # keep sweeping past broken runs
            rows.append({"name": cfg.name, "status": f"error: {e}", "l1": cfg.l1_enabled,
                         "damage": np.nan, "period": cfg.trajectory.period,
                         "rmse_x": np.nan, "rmse_y": np.nan, "rmse_z": np.nan,
                         "rmse_mean": np.nan, "transition": False})
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        cols = ["name", "status", "l1", "damage", "period",
                "rmse_x", "rmse_y", "rmse_z", "rmse_mean", "transition"]
        with open(out / "sweep_summary.csv", "w") as fh:
            fh.write(",".join(cols) + "\n")
            for r in rows:
                fh.write(",".join(str(r[c]) for c in cols) + "\n")
        with open(out / "sweep_summary.json", "w") as fh:
            json.dump(rows, fh, indent=2, default=float)
    return rows
