"""Command line front end.

Every subcommand reads one JSON config, writes ``<subcommand>_<hash>.csv``
(plus ``<subcommand>_<hash>_<part>.csv`` for secondary tables) and a
``<subcommand>_<hash>.json`` manifest into the output directory.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, load_config
from .errors import ConfigError, GdseError

log = logging.getLogger("gdse")

SUBCOMMANDS = ("spectrum", "density", "gbz", "dynamics", "sweep-theta", "wannier", "check")


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def atomic_write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=path.suffix)
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class Outputs:
    """Collects tables in memory; files appear only once the run succeeded."""

    def __init__(self, out_dir: Path, stem: str):
        self.dir = out_dir
        self.stem = stem
        self.tables = {}
        self.summary = {}

    def table(self, header, rows, part: str | None = None):
        name = f"{self.stem}.csv" if part is None else f"{self.stem}_{part}.csv"
        self.tables[name] = csv_text(header, rows)

    def commit(self, manifest: dict) -> list:
        written = []
        try:
            for name, text in self.tables.items():
                atomic_write(self.dir / name, text)
                written.append(self.dir / name)
            manifest = {**manifest, "outputs": sorted(self.tables), "summary": self.summary}
            path = self.dir / f"{self.stem}.json"
            atomic_write(path, json.dumps(manifest, indent=2, sort_keys=True, default=_json_default) + "\n")
            written.append(path)
        except BaseException:
            for p in written:
                p.unlink(missing_ok=True)
            raise
        return written


def _json_default(o):
    if isinstance(o, complex):
        return [o.real, o.imag]
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(type(o))


# -- subcommands -------------------------------------------------------------

def _ladder(cfg: RunConfig, sub: str):
    """Hopping parameters for subcommands that only know the sp ladder."""
    if cfg.model.name != "sp-ladder":
        raise ConfigError(f"'{sub}' supports only model 'sp-ladder', got {cfg.model.name!r}")
    return cfg.model.hopping()


def cmd_spectrum(cfg: RunConfig, out: Outputs, threads: int):
    from .pipelines import geometry_report

    rep = geometry_report(_ladder(cfg, "spectrum"), cfg.geometry.spec(), cfg.geometry.depth,
                          cfg.numerics.dim_cap, cfg.numerics.bulk_delta)
    s = rep.spectrum
    out.table(("index", "re_E", "im_E", "fd", "rho_b"),
              ((i, e.real, e.imag, d, r) for i, (e, d, r) in
               enumerate(zip(s.eigenvalues, s.fractional_dimension, s.boundary_weight))))
    out.table(("cell_index", "x", "y", "is_boundary_shell"),
              ((i, x, y, int((x, y) in rep.shell)) for i, (x, y) in enumerate(rep.mask.cells)), part="mask")
    out.summary.update(n_cells=rep.n_cells, n_states=len(s), rho_b_mean=rep.rho_b_mean,
                       n_boundary=rep.n_boundary, median_fd_bulk=rep.median_fd_bulk,
                       n_bulk_states=int(rep.bulk.sum()))


def cmd_density(cfg: RunConfig, out: Outputs, threads: int):
    from .pipelines import geometry_report

    rep = geometry_report(_ladder(cfg, "density"), cfg.geometry.spec(), cfg.geometry.depth, cfg.numerics.dim_cap)
    out.table(("x", "y", "rho"), ((x, y, r) for (x, y), r in zip(rep.mask.cells, rep.density)))
    out.summary.update(n_cells=rep.n_cells, rho_b_mean=rep.rho_b_mean)


def cmd_gbz(cfg: RunConfig, out: Outputs, threads: int):
    from . import gbz

    params = _ladder(cfg, "gbz")
    rows, stats = [], []
    for km in cfg.numerics.k_minus:
        sl = gbz.gbz_slice(params, km, cfg.numerics.stripe_L, cfg.numerics.root_tol)
        ok = gbz.centroid_agreement(sl)
        stats.append({"k_minus": km, "accepted": len(sl.points), "acceptance": sl.acceptance,
                      "centroid_agreement": float(ok.mean()) if len(ok) else None})
        rows.extend((p.k_minus, p.E.real, p.E.imag, p.beta.real, p.beta.imag, p.kappa) for p in sl.points)
    out.table(("k_minus", "re_E", "im_E", "re_beta", "im_beta", "kappa"), rows)
    out.summary["slices"] = stats
    if cfg.numerics.kappa_grid:
        kf = gbz.kappa_map(params, cfg.numerics.kappa_grid, cfg.numerics.stripe_L, tol=cfg.numerics.root_tol)
        out.table(("k_plus", "k_minus", "kappa"), kf.rows(), part="kappa")
        out.summary["kappa_failed_slices"] = list(kf.failed)


def cmd_dynamics(cfg: RunConfig, out: Outputs, threads: int):
    from . import dynamics as dyn
    from .spectral import MomentumPath

    model = cfg.model.descriptor()
    d = cfg.drive
    force = np.asarray(d.force, dtype=float)
    duration = d.duration if d.duration is not None else dyn.bloch_period(force)
    mask = model.geometry(cfg.geometry.L, cfg.geometry.shape, cfg.geometry.theta)
    res = dyn.run_drive(model, mask, d.k0, force, duration, d.sigma0, d.band, cfg.numerics.dt,
                        cfg.numerics.record_every)
    tr, rec = res.trajectory, res.reconstruction
    out.table(("t", "x", "y", "log_norm", "kx", "ky"),
              zip(tr.t, tr.r[:, 0], tr.r[:, 1], tr.log_norm, tr.k[:, 0], tr.k[:, 1]))
    out.table(("kx", "ky", "re_E", "im_E"), zip(rec.k[:, 0], rec.k[:, 1], rec.re_E, rec.im_E), part="reconstruction")
    out.table(("kx", "ky", "re_E", "im_E"), zip(rec.k[:, 0], rec.k[:, 1], res.exact.real, res.exact.imag), part="exact")
    split = dyn.degeneracy_splitting(rec)
    out.summary.update(duration=duration, anchor=res.anchor, max_error=res.max_error, max_splitting=split.max)
    if cfg.model.name == "sp-ladder":
        path = MomentumPath(tuple(d.k0), tuple(-force * duration))
        crossings = dyn.adiabaticity_report(cfg.model.hopping(), path)
        out.summary["imag_crossings"] = crossings
        if crossings:
            log.warning("drive path crosses %d imaginary degeneracies; reconstruction past them is band-ambiguous",
                        len(crossings))


def cmd_sweep_theta(cfg: RunConfig, out: Outputs, threads: int):
    from .pipelines import theta_sweep

    d = cfg.drive
    rows = theta_sweep(_ladder(cfg, "sweep-theta"), d.sweep_thetas, d.sweep_size, cfg.geometry.depth,
                       cfg.numerics.sweep_dynamics, d.sweep_force, d.sweep_k0, d.sigma0, threads,
                       cfg.numerics.dim_cap)
    keys = ("theta", "L", "n_cells", "rho_b_mean", "n_boundary", "max_splitting")
    out.table(keys, ([r[k] for k in keys] for r in rows))
    rb = [r["rho_b_mean"] for r in rows]
    out.summary["rho_b_monotone"] = bool(all(b >= a for a, b in zip(rb, rb[1:])))


def cmd_wannier(cfg: RunConfig, out: Outputs, threads: int):
    from .wannier import OpticalPotentialSpec, fit_tight_binding

    pc = cfg.model.potential
    n = cfg.numerics
    fit = fit_tight_binding(OpticalPotentialSpec(pc.Vx, pc.V1, pc.V2, pc.phi), cfg.model.gamma,
                            n.wannier_window, n.wannier_iterations, n.wannier_spacing)
    out.table(("name", "value"), sorted(fit.couplings.items()))
    fragment = {"model": {"name": "sp-ladder", **fit.params.as_dict()}}
    out.tables[f"{out.stem}_model.json"] = json.dumps(fragment, indent=2, sort_keys=True) + "\n"
    out.summary.update(params=fit.params.as_dict(), overlap_residual=fit.overlap_residual,
                       resolution_change=fit.resolution_change)


def cmd_check(cfg: RunConfig, out: Outputs, threads: int):
    from .checks import invariant_suite

    rows = invariant_suite(_ladder(cfg, "check"))
    out.table(("check", "value", "threshold", "passed"), ((r.name, r.value, r.threshold, int(r.passed)) for r in rows))
    out.summary["all_passed"] = all(r.passed for r in rows)


COMMANDS = {
    "spectrum": cmd_spectrum,
    "density": cmd_density,
    "gbz": cmd_gbz,
    "dynamics": cmd_dynamics,
    "sweep-theta": cmd_sweep_theta,
    "wannier": cmd_wannier,
    "check": cmd_check,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gdse", description=__doc__.splitlines()[0])
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--out", help="output directory (overrides output.dir)")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--seed", type=int, default=0, help="reserved; no computation is random")
    p.add_argument("--verbose", action="store_true")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        cfg = load_config(args.config)
        out_dir = Path(args.out or cfg.output.dir)
        stem = f"{args.subcommand.replace('-', '_')}_{cfg.digest(args.subcommand)}"
        out = Outputs(out_dir, stem)
        COMMANDS[args.subcommand](cfg, out, args.threads)
        manifest = {
            "tool": "gdse",
            "version": __version__,
            "subcommand": args.subcommand,
            "config": cfg.resolved(),
            "seed": args.seed,
        }
        for path in out.commit(manifest):
            print(path)
        return 0
    except GdseError as exc:
        print(json.dumps({"error": exc.kind, "message": str(exc), "exit_code": exc.exit_code}), file=sys.stdout)
        return exc.exit_code
    except MemoryError as exc:
        print(json.dumps({"error": "resource", "message": str(exc) or "out of memory", "exit_code": 4}))
        return 4


if __name__ == "__main__":
    sys.exit(main())
