"""Command-line front end.

    membrane-stability trace --co 2 --zhat 3 --stop rprime-zero --out run/
    membrane-stability scan --co 2 --zhat -1.2:-0.55:4 --stop phi-pi --out scan/
    membrane-stability stability --co 2 --zhat -0.7 --stop phi-pi --out st/

Exit codes: 0 success, 1 unstable verdict under --assert-stable,
2 invalid arguments, 3 numerical failure. Data artifacts are
deterministic; run metadata goes to the sidecar ``meta.json``.
"""

from __future__ import annotations

import argparse
import datetime
import platform
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import List, Optional

import numpy as np
import scipy

from . import __version__
from .errors import MembraneError
from .fields import (boundary_darboux, energies, geometric_fields, rme_pointwise,
                     rme_residual)
from .io import write_csv, write_json
from .operators import OPERATORS, assemble, identity_study, to_coordinate_text
from .profile import (ApexInit, ModelParams, StopKind, StopRule, integrate_profile,
                      resample)
from .spectrum import WeightKind, solve_dirichlet_spectrum
from .stability import corollary_checks, thmbif_verdict

EXIT_OK, EXIT_UNSTABLE, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 1, 2, 3
COMMANDS = ("trace", "scan", "identities", "spectrum", "stability", "energy", "export")


class ValidationError(ValueError):
    pass


@dataclass
class JobSpec:
    command: str
    params: ModelParams
    z_hats: List[float]
    stop: StopRule
    grid_n: int = 1024
    mode: int = 0
    weight: WeightKind = WeightKind.INV_Z_SQ
    k: int = 3
    out: Path = Path(".")
    tol: float = 1e-10
    extend: float = 0.0
    workers: int = 1
    grids: List[int] = field(default_factory=lambda: [256, 512, 1024])
    operator: str = "P"
    assert_stable: bool = False


def _parse_zhat(text: str) -> List[float]:
    parts = text.split(":")
    try:
        if "," in text and len(parts) == 1:
            return [float(v) for v in text.split(",")]
        if len(parts) == 1:
            return [float(parts[0])]
        if len(parts) == 3:
            lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
            if count < 1:
                raise ValidationError("--zhat range needs a positive count")
            return [float(v) for v in np.linspace(lo, hi, count)]
    except ValueError as exc:
        raise ValidationError(f"bad --zhat value {text!r}: {exc}") from None
    raise ValidationError("--zhat takes a number or a range a:b:count")


def _glue_negative_values(argv: List[str]) -> List[str]:
    """Turn ``--zhat -0.7`` into ``--zhat=-0.7`` so ranges like -1.2:-0.55:4 parse."""
    out = []
    i = 0
    while i < len(argv):
        if argv[i] == "--zhat" and i + 1 < len(argv):
            out.append(f"--zhat={argv[i + 1]}")
            i += 2
        else:
            out.append(argv[i])
            i += 1
    return out


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--co", type=float, required=True, help="spontaneous curvature c_o")
    common.add_argument("--zhat", required=True, help="apex height; scan also takes a:b:count or a comma list")
    common.add_argument("--a", type=float, default=1.0)
    common.add_argument("--b", type=float, default=0.0)
    common.add_argument("--alpha", type=float, default=1.0)
    common.add_argument("--beta", type=float, default=1.0)
    common.add_argument("--stop", default="rprime-zero", choices=[k.value for k in StopKind])
    common.add_argument("--sigma-max", type=float, default=50.0)
    common.add_argument("--extend", type=float, default=0.0,
                        help="continue past the event by this fraction of its arc length")
    common.add_argument("--n", type=int, default=1024, help="grid intervals")
    common.add_argument("--tol", type=float, default=1e-10)
    common.add_argument("--out", default=".", help="output directory")

    parser = argparse.ArgumentParser(prog="membrane-stability", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("trace", parents=[common], help="profile CSV and boundary JSON")
    scan = sub.add_parser("scan", parents=[common], help="sweep z_hat and tabulate events")
    scan.add_argument("--workers", type=int, default=1)
    ident = sub.add_parser("identities", parents=[common], help="operator identity study")
    ident.add_argument("--grids", default="256,512,1024")
    spectrum_cmd = sub.add_parser("spectrum", parents=[common], help="Dirichlet eigenpairs of P")
    spectrum_cmd.add_argument("--mode", type=int, default=0)
    spectrum_cmd.add_argument("--weight", default="invzsq", choices=[w.value for w in WeightKind])
    spectrum_cmd.add_argument("--k", type=int, default=3)
    stab = sub.add_parser("stability", parents=[common], help="constrained stability report")
    stab.add_argument("--assert-stable", action="store_true")
    sub.add_parser("energy", parents=[common], help="energy functionals")
    exp = sub.add_parser("export", parents=[common], help="fields CSV and operator matrix")
    exp.add_argument("--operator", default="P", choices=sorted(OPERATORS))
    exp.add_argument("--mode", type=int, default=0)
    return parser


def _job_from_args(args) -> JobSpec:
    try:
        params = ModelParams(args.co, args.a, args.b, args.alpha, args.beta)
        stop = StopRule(StopKind(args.stop), args.sigma_max)
    except ValueError as exc:
        raise ValidationError(str(exc)) from None
    z_hats = _parse_zhat(args.zhat)
    if any(z == 0 for z in z_hats):
        raise ValidationError("z_hat must be non-zero")
    if args.command != "scan" and len(z_hats) != 1:
        raise ValidationError("only scan accepts a z_hat range")
    if args.n < 64:
        raise ValidationError("--n must be at least 64")
    if not 0 < args.tol < 1e-3:
        raise ValidationError("--tol must lie in (0, 1e-3)")
    if args.extend < 0:
        raise ValidationError("--extend must be non-negative")
    job = JobSpec(command=args.command, params=params, z_hats=z_hats, stop=stop,
                   grid_n=args.n, out=Path(args.out), tol=args.tol, extend=args.extend)
    if hasattr(args, "mode"):
        if args.mode < 0:
            raise ValidationError("--mode must be non-negative")
        job.mode = args.mode
    if hasattr(args, "weight"):
        job.weight = WeightKind(args.weight)
    if hasattr(args, "k"):
        if args.k < 1:
            raise ValidationError("--k must be positive")
        job.k = args.k
    if hasattr(args, "workers"):
        if args.workers < 1:
            raise ValidationError("--workers must be positive")
        job.workers = args.workers
    if hasattr(args, "grids"):
        try:
            job.grids = [int(g) for g in args.grids.split(",")]
        except ValueError:
            raise ValidationError("--grids takes comma-separated integers") from None
        if len(job.grids) < 2 or min(job.grids) < 64:
            raise ValidationError("--grids needs at least two sizes >= 64")
    job.operator = getattr(args, "operator", "P")
    job.assert_stable = getattr(args, "assert_stable", False)
    return job


def _curve(job: JobSpec, z_hat: float, n: Optional[int] = None):
    coarse = integrate_profile(job.params, ApexInit(z_hat), job.stop, job.tol)
    if job.extend > 0:
        length = float(coarse.sigma[-1])
        coarse = integrate_profile(job.params, ApexInit(z_hat),
                                   StopRule(StopKind.SIGMA_MAX, length * (1 + job.extend)),
                                   job.tol)
    return coarse, resample(coarse, n or job.grid_n)


def _profile_columns(c):
    return {"sigma": c.sigma, "r": c.r, "z": c.z, "phi": c.phi, "dphi": c.dphi}


def _trace(job, out):
    coarse, c = _curve(job, job.z_hats[0])
    fl = geometric_fields(c)
    out["profile.csv"] = _profile_columns(c)
    record = {"z_hat": job.z_hats[0], "stop": job.stop.kind.value,
              "event_sigma": c.event_sigma, "length": c.length,
              "rme_residual": rme_residual(c, fl, job.params.c_o)}
    record.update(asdict(boundary_darboux(c, fl)))
    out["boundary.json"] = record


def _scan_one(payload):
    job, z_hat = payload
    row = {"z_hat": z_hat, "status": "", "length": None, "r_o": None, "z_o": None,
           "verdict": None}
    try:
        coarse, c = _curve(job, z_hat)
    except MembraneError as exc:
        row["status"] = type(exc).__name__
        return row
    fl = geometric_fields(c)
    row.update(status="extended" if job.extend > 0 else job.stop.kind.value,
               length=c.length, r_o=float(c.r[-1]), z_o=float(c.z[-1]))
    try:
        if job.stop.kind is StopKind.PHI_MINUS_PI:
            row["verdict"] = thmbif_verdict(c, fl, job.params).verdict.value
        elif job.stop.kind is StopKind.RPRIME_ZERO:
            row["verdict"] = corollary_checks(c, fl, job.params)["cor_verdict"]
    except (MembraneError, ValueError) as exc:
        row["verdict"] = f"error: {type(exc).__name__}"
    return row


def _scan(job, out):
    jobs = [(job, z) for z in job.z_hats]
    if job.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=job.workers) as pool:
            rows = list(pool.map(_scan_one, jobs))
    else:
        rows = [_scan_one(j) for j in jobs]
    out["scan.json"] = {"c_o": job.params.c_o, "stop": job.stop.kind.value, "rows": rows}


def _identities(job, out):
    coarse = integrate_profile(job.params, ApexInit(job.z_hats[0]), job.stop, job.tol)
    study = identity_study(coarse, job.grids)
    out["identities.json"] = {"grids": study.grids, "residuals": study.residuals,
                              "slopes": study.slopes}


def _spectrum(job, out):
    _, c = _curve(job, job.z_hats[0])
    fl = geometric_fields(c)
    op = assemble(c, fl, job.params, "P", job.mode)
    pairs = solve_dirichlet_spectrum(op, job.weight, job.k)
    out["spectrum.json"] = [{"mode": job.mode, "weight": job.weight.value, "lambda": p.lam,
                             "residual": p.residual, "sign_changes": p.sign_changes}
                            for p in pairs]
    cols = {"sigma": c.sigma}
    cols.update({f"f{p.index + 1}": p.f for p in pairs})
    out["eigenfunctions.csv"] = cols


def _stability(job, out):
    _, c = _curve(job, job.z_hats[0])
    fl = geometric_fields(c)
    report = thmbif_verdict(c, fl, job.params)
    data = report.to_dict()
    data["corollaries"] = corollary_checks(c, fl, job.params)
    out["stability.json"] = data
    return EXIT_UNSTABLE if job.assert_stable and not report.is_stable else EXIT_OK


def _energy(job, out):
    _, c = _curve(job, job.z_hats[0])
    out["energies.json"] = energies(c, geometric_fields(c), job.params)


def _export(job, out):
    _, c = _curve(job, job.z_hats[0])
    fl = geometric_fields(c)
    cols = _profile_columns(c)
    cols.update({"H": fl.H, "K": fl.K, "nu3": fl.nu3, "q": fl.q,
                 "rme_residual": rme_pointwise(c, fl, job.params.c_o), "nu_r": fl.nu_r,
                 "kappa_m": fl.kappa_m, "kappa_p": fl.kappa_p})
    out["fields.csv"] = cols
    op = assemble(c, fl, job.params, job.operator, job.mode)
    out[f"operator_{job.operator}_m{job.mode}.txt"] = to_coordinate_text(op)


HANDLERS = {"trace": _trace, "scan": _scan, "identities": _identities,
            "spectrum": _spectrum, "stability": _stability, "energy": _energy,
            "export": _export}


def _write(out_dir: Path, artifacts: dict) -> List[Path]:
    written = []
    try:
        for name, data in artifacts.items():
            path = out_dir / name
            if name.endswith(".csv"):
                write_csv(path, data)
            elif name.endswith(".json"):
                write_json(path, data)
            else:
                path.write_text(data)
            written.append(path)
    except Exception:
        for p in written:
            p.unlink(missing_ok=True)
        raise
    return written


def run(job: JobSpec, argv: Optional[List[str]] = None) -> int:
    """Execute one job; artifacts are only written once every result exists."""
    artifacts: dict = {}
    status = HANDLERS[job.command](job, artifacts) or EXIT_OK
    job.out.mkdir(parents=True, exist_ok=True)
    written = _write(job.out, artifacts)
    meta = {"command": job.command, "argv": list(argv or []), "version": __version__,
            "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__,
            "created": datetime.datetime.now(datetime.timezone.utc).isoformat(),
            "outputs": [p.name for p in written], "exit_status": status}
    write_json(job.out / "meta.json", meta)
    return status


def main(argv: Optional[List[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(_glue_negative_values(argv))
    except SystemExit as exc:
        return EXIT_VALIDATION if exc.code else EXIT_OK
    try:
        job = _job_from_args(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        return run(job, argv)
    except MembraneError as exc:
        print(f"numerical failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
