"""Per-step bookkeeping and file output for simulation runs.

Files written into the output directory (all deterministic, no clocks):

``manifest.json``         resolved configuration, seed, file list, summary
``diagnostics.csv``       one row per step: audit, charge, Gauss residual, energies
``fields_<step>.csv``     field snapshot at every output step
``moments_<step>.csv``    moment profiles, bounds and density split at output steps
``particles_final.csv``   final particle state
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import __version__
from .fields import discrete_energy, field_energy, gauss_residual, write_field_csv
from .kinetic import envelope_audit, total_charge
from .moments import (EnvelopeParams, density_log_diagnostic, envelope_flux_bound,
                      estimate_G2, flux_moment_profile, moment_profile)

MOMENT_ORDERS = (0, 1, 2, 3)


@dataclass
class RunResult:
    state: object
    series: dict
    snapshots: list
    flux_bounds: dict
    files: list = dc_field(default_factory=list)

    @property
    def max_audit(self):
        return float(np.max(self.series["audit"]))

    def max_flux_ratio(self, n):
        return max(s["vm_sup"][n] for s in self.snapshots) / self.flux_bounds[n]

    @property
    def max_density_ratio(self):
        return max(s["density_ratio"] for s in self.snapshots)


def _fmt(x):
    return repr(float(x))


class RunRecorder:
    def __init__(self, config, state, out_dir=None):
        self.config = config
        self.out_dir = out_dir
        self.env = EnvelopeParams(C0=config.distribution.C0, A=config.force.A)
        self.flux_bounds = {n: envelope_flux_bound(n, self.env) for n in MOMENT_ORDERS}
        self.every = max(1, int(config.output_every))
        self.rows = []
        self.snapshots = []
        self.files = []
        self.charge0 = total_charge(state)
        # zero-weight particles starting at rest should stay exactly there
        pt = state.particles
        self.rest = np.flatnonzero((pt.weight == 0) & np.all(pt.p == 0, axis=1))
        self.rest_x0 = pt.x[self.rest].copy()
        if out_dir is not None:
            try:
                os.makedirs(out_dir, exist_ok=True)
            except OSError as exc:
                raise OSError(f"cannot create output directory {out_dir}: {exc}") from exc

    def _path(self, name):
        self.files.append(name)
        return os.path.join(self.out_dir, name)

    def observe(self, state, force=False):
        grid = state.grid
        rho = moment_profile(state.particles, grid, 0).values
        self.rows.append(dict(
            step=state.step, time=state.time,
            audit=envelope_audit(state, self.env.C0, self.env.A),
            charge=total_charge(state),
            gauss_residual=gauss_residual(state.fields, rho, grid),
            field_energy=field_energy(state.fields, grid),
            discrete_energy=discrete_energy(state.fields, grid),
            rest_p=self._rest_p(state),
            rest_dx=self._rest_dx(state),
        ))
        last = state.step == self.config.steps
        if force or last or state.step % self.every == 0:
            self._snapshot(state, rho)

    def _rest_p(self, state):
        if not self.rest.size:
            return 0.0
        return float(np.max(np.linalg.norm(state.particles.p[self.rest], axis=1)))

    def _rest_dx(self, state):
        if not self.rest.size:
            return 0.0
        L = state.grid.L
        d = np.abs(state.particles.x[self.rest] - self.rest_x0) % L
        return float(np.max(np.minimum(d, L - d)))

    def _snapshot(self, state, rho):
        grid, parts = state.grid, state.particles
        m = {n: moment_profile(parts, grid, n).values for n in MOMENT_ORDERS}
        vm = {n: flux_moment_profile(parts, grid, n).values for n in MOMENT_ORDERS}
        G2 = estimate_G2(parts, grid) if len(parts) else 2.0
        dens = density_log_diagnostic(parts, grid, self.env, G2)
        snap = dict(step=state.step, time=state.time, G2=G2,
                    vm_sup={n: float(np.max(vm[n])) if vm[n].size else 0.0 for n in MOMENT_ORDERS},
                    density_ratio=dens.ratio, density_bound=dens.bound)
        self.snapshots.append(snap)
        if self.out_dir is None:
            return
        tag = f"{state.step:06d}"
        path = self._path(f"fields_{tag}.csv")
        try:
            write_field_csv(path, state.fields, grid)
            path = self._path(f"moments_{tag}.csv")
            cols = ([f"m{n}" for n in MOMENT_ORDERS] + [f"vm{n}" for n in MOMENT_ORDERS]
                    + [f"M{n}" for n in MOMENT_ORDERS]
                    + ["rho_near", "rho_tail", "density_bound", "G2"])
            data = np.column_stack(
                [np.arange(grid.Nx), grid.nodes] + [m[n] for n in MOMENT_ORDERS]
                + [vm[n] for n in MOMENT_ORDERS]
                + [np.full(grid.Nx, self.flux_bounds[n]) for n in MOMENT_ORDERS]
                + [dens.near, dens.tail, np.full(grid.Nx, dens.bound), np.full(grid.Nx, G2)])
            np.savetxt(path, data, delimiter=",", fmt="%.17g",
                       header=",".join(["cell", "x"] + cols), comments="")
        except OSError as exc:
            raise OSError(f"cannot write {path}: {exc}") from exc

    def series(self):
        keys = self.rows[0].keys()
        return {k: np.array([r[k] for r in self.rows]) for k in keys}

    def finish(self, state):
        result = RunResult(state=state, series=self.series(), snapshots=self.snapshots,
                           flux_bounds=self.flux_bounds, files=self.files)
        if self.out_dir is None:
            return result
        path = self._path("diagnostics.csv")
        try:
            keys = list(self.rows[0].keys())
            with open(path, "w") as fh:
                fh.write(",".join(keys) + "\n")
                for r in self.rows:
                    fh.write(",".join(str(r[k]) if k == "step" else _fmt(r[k]) for k in keys) + "\n")
            path = self._path("particles_final.csv")
            pt = state.particles
            np.savetxt(path, np.column_stack([pt.x, pt.p, pt.log_f, pt.weight]), delimiter=",",
                       fmt="%.17g", header="x,p1,p2,p3,log_f,weight", comments="")
            path = os.path.join(self.out_dir, "manifest.json")
            manifest = dict(
                package_version=__version__,
                config=self.config.to_dict(),
                seed=self.config.seed,
                files=self.files,
                summary=dict(
                    steps=state.step, final_time=state.time,
                    max_envelope_audit=result.max_audit,
                    charge_relative_drift=abs(total_charge(state) - self.charge0)
                    / max(abs(self.charge0), 1e-300),
                    max_gauss_residual=float(np.max(result.series["gauss_residual"])),
                    flux_bounds={str(n): v for n, v in self.flux_bounds.items()},
                    max_flux_ratio={str(n): result.max_flux_ratio(n) for n in MOMENT_ORDERS},
                    max_density_ratio=result.max_density_ratio,
                    max_rest_tracer_momentum=float(np.max(result.series["rest_p"])),
                    max_rest_tracer_displacement=float(np.max(result.series["rest_dx"])),
                ),
            )
            with open(path, "w") as fh:
                json.dump(manifest, fh, indent=2, sort_keys=True, default=_json_default)
                fh.write("\n")
        except OSError as exc:
            raise OSError(f"cannot write {path}: {exc}") from exc
        return result


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")
