"""Command-line entry point.

Subcommands map to preset experiments:

    fig1       reference ensemble histogram with nu fit and overlays
    fig2       histograms and fits at each point of the gamma_a scan
    fig3       fitted nu versus y = rho0_a * Gamma_a across the scan
    table2     sampled self-energy moments against the analytic table
    integrals  closed-form band integrals against quadrature
    custom     like fig1 but meant to be driven by a config file

Common flags: --config FILE, --seed N, --out DIR, --workers N,
--check.  Exit codes: 0 success, 2 configuration error, 3 numerical
failure, 4 check violation.

Every CSV starts with a `# config_hash=...` comment naming the
resolved configuration; a manifest.json records the full canonical
echo, the substream blocks consumed, and the file list, which is
enough to reproduce every output byte for byte.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .analytic import (
    INTEGRALS_CSV_HEADER,
    integral_csv_row,
    table1_moments,
    verification_table,
)
from .config import ExperimentConfig, config_echo, config_hash, load_config
from .ensemble import (
    HISTOGRAM_CSV_HEADER,
    SAMPLES_CSV_HEADER,
    EnsembleResult,
    run_ensemble,
    scan_points,
)
from .errors import ConfigError, NumericalError
from .ptstats import PtParams, crossover_curve, fit_nu, pt_pdf
from .rmt import ReservoirParams
from .rng import RandomStream
from .selfenergy import MOMENTS_CSV_HEADER, sample_self_energy_moments

SCAN_CSV_HEADER = "gamma_a,t2,y,nu_hat,residual,nu_curve"
OVERLAY_CSV_HEADER = "x,pdf_nu1,pdf_nu2"
TABLE2_COMPARE_HEADER = "N,quantity,sampled,analytic"


def _fmt(x) -> str:
    return repr(float(x))


def _write_csv(path: Path, cfg_hash: str, header: str, rows) -> None:
    lines = [f"# config_hash={cfg_hash}", header]
    lines.extend(rows)
    path.write_text("\n".join(lines) + "\n")


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _samples_rows(result: EnsembleResult):
    n_runs, n_samples = result.samples.shape
    for r in range(n_runs):
        row = result.samples[r]
        for s in range(n_samples):
            if np.isfinite(row[s]):
                yield f"{r},{s},{_fmt(row[s])}"


def _histogram_rows(hist):
    edges = hist.bin_edges
    for k in range(len(edges) - 1):
        yield (
            f"{_fmt(edges[k])},{_fmt(edges[k + 1])},"
            f"{_fmt(hist.density_mean[k])},{_fmt(hist.density_rms[k])}"
        )


def _fit_payload(fit, result: EnsembleResult, cfg_hash: str) -> dict:
    return {
        "nu_hat": fit.nu_hat,
        "x0": fit.x0,
        "residual": fit.residual,
        "n_bins": fit.n_bins_used,
        "n_excluded": result.n_excluded,
        "mean_p_b": result.mean_pb,
        "config_hash": cfg_hash,
    }


def _overlay_rows(x_max: float):
    xs = np.linspace(0.0, x_max, 201)[1:]
    p1 = pt_pdf(xs, PtParams(nu=1.0, x0=1.0))
    p2 = pt_pdf(xs, PtParams(nu=2.0, x0=1.0))
    for x, a, b in zip(xs, p1, p2):
        yield f"{_fmt(x)},{_fmt(a)},{_fmt(b)}"


def _run_fig1(cfg: ExperimentConfig, out: Path):
    h = config_hash(cfg)
    ens = cfg.ensemble
    result = run_ensemble(ens)
    fit = fit_nu(result.hist)
    _write_csv(out / "samples.csv", h, SAMPLES_CSV_HEADER, _samples_rows(result))
    _write_csv(out / "histogram.csv", h, HISTOGRAM_CSV_HEADER, _histogram_rows(result.hist))
    _write_json(out / "fit.json", _fit_payload(fit, result, h))
    _write_csv(out / "pt_overlay.csv", h, OVERLAY_CSV_HEADER, _overlay_rows(ens.x_max))
    outputs = ["samples.csv", "histogram.csv", "fit.json", "pt_overlay.csv"]
    checks = [
        (
            "nu_hat_in_band",
            1.7 <= fit.nu_hat <= 2.4,
            f"nu_hat={fit.nu_hat:.4f}, expected [1.7, 2.4]",
        )
    ]
    extras = {
        "substreams": [[0, ens.n_runs * ens.n_samples]],
        "n_excluded": result.n_excluded,
        "summary": {"nu_hat": fit.nu_hat, "mean_p_b": result.mean_pb},
    }
    print(f"fig1: nu_hat={fit.nu_hat:.4f}, mean P_b={result.mean_pb:.6g}")
    return outputs, checks, extras


def _scan_rows(pts):
    for p in pts:
        nu_hat = p.fit.nu_hat if p.fit is not None else float("nan")
        residual = p.fit.residual if p.fit is not None else float("nan")
        yield (
            f"{_fmt(p.gamma_a)},{_fmt(p.t2)},{_fmt(p.y)},"
            f"{_fmt(nu_hat)},{_fmt(residual)},{_fmt(crossover_curve(p.y))}"
        )


def _scan_checks(pts):
    checks = [
        (
            "all_points_fitted",
            all(p.error is None for p in pts),
            "; ".join(f"gamma_a={p.gamma_a:g}: {p.error}" for p in pts if p.error) or "ok",
        )
    ]
    good = [p for p in pts if p.fit is not None]
    if not good:
        return checks
    ys = np.array([p.y for p in good])
    nus = np.array([p.fit.nu_hat for p in good])
    order = np.argsort(ys)
    ys, nus = ys[order], nus[order]
    if ys[0] <= 0.05:
        checks.append(
            (
                "porter_thomas_limit",
                0.85 <= nus[0] <= 1.2,
                f"nu_hat(y={ys[0]:.3g})={nus[0]:.4f}, expected [0.85, 1.2]",
            )
        )
    if ys[-1] >= 2.0:
        sat = nus[ys >= 2.0]
        checks.append(
            (
                "saturated_limit",
                bool(np.all(sat >= 1.8)),
                f"nu_hat(y>=2) min={sat.min():.4f}, expected >= 1.8",
            )
        )
    steps = np.diff(nus)
    checks.append(
        (
            "monotone_crossover",
            bool(np.all(steps >= -0.15)),
            f"largest decrease {steps.min():.4f}, tolerance -0.15",
        )
    )
    dev = np.abs(nus - crossover_curve(ys))
    checks.append(
        (
            "crossover_curve_agreement",
            bool(np.all(dev <= 0.3)),
            f"max |nu_hat - nu_curve| = {dev.max():.4f}, tolerance 0.3",
        )
    )
    return checks


def _scan_extras(cfg: ExperimentConfig, pts):
    ens = cfg.ensemble
    block = ens.n_runs * ens.n_samples
    return {
        "substreams": [[i * block, (i + 1) * block] for i in range(len(pts))],
        "n_excluded": sum(p.result.n_excluded for p in pts if p.result is not None),
        "summary": {
            "points": [
                {
                    "gamma_a": p.gamma_a,
                    "y": p.y,
                    "nu_hat": p.fit.nu_hat if p.fit else None,
                    "error": p.error,
                }
                for p in pts
            ]
        },
    }


def _run_fig2(cfg: ExperimentConfig, out: Path):
    h = config_hash(cfg)
    pts = scan_points(cfg.ensemble, cfg.gamma_a_grid)
    outputs = []
    for i, p in enumerate(pts):
        payload = {
            "point_index": i,
            "gamma_a": p.gamma_a,
            "t2": p.t2,
            "y": p.y,
            "config_hash": h,
            "error": p.error,
        }
        if p.result is not None and p.fit is not None:
            name = f"hist_{i:02d}.csv"
            _write_csv(out / name, h, HISTOGRAM_CSV_HEADER, _histogram_rows(p.result.hist))
            outputs.append(name)
            payload.update(_fit_payload(p.fit, p.result, h))
        name = f"fit_{i:02d}.json"
        _write_json(out / name, payload)
        outputs.append(name)
        nu_txt = f"nu_hat={p.fit.nu_hat:.4f}" if p.fit else f"failed: {p.error}"
        print(f"fig2 point {i}: gamma_a={p.gamma_a:.4g}, y={p.y:.4g}, {nu_txt}")
    _write_csv(out / "points.csv", h, SCAN_CSV_HEADER, _scan_rows(pts))
    outputs.append("points.csv")
    return outputs, _scan_checks(pts), _scan_extras(cfg, pts)


def _run_fig3(cfg: ExperimentConfig, out: Path):
    h = config_hash(cfg)
    pts = scan_points(cfg.ensemble, cfg.gamma_a_grid)
    for p in pts:
        nu_txt = f"nu_hat={p.fit.nu_hat:.4f}" if p.fit else f"failed: {p.error}"
        print(f"fig3: gamma_a={p.gamma_a:.4g}, y={p.y:.4g}, {nu_txt}")
    _write_csv(out / "scan.csv", h, SCAN_CSV_HEADER, _scan_rows(pts))
    return ["scan.csv"], _scan_checks(pts), _scan_extras(cfg, pts)


def _run_table2(cfg: ExperimentConfig, out: Path):
    h = config_hash(cfg)
    ens = cfg.ensemble
    ra, ch = ens.reservoir_a, ens.channel
    n_draw = cfg.table2_samples
    moment_rows = []
    compare_rows = []
    checks = []
    for i, n_dim in enumerate(cfg.table2_dims):
        params = ReservoirParams(n=n_dim, v=ra.v, gamma=ra.gamma)
        stream = RandomStream(ens.master_seed, i * n_draw)
        sampled = sample_self_energy_moments(params, ch.v2, ch.v3, ch.energy, n_draw, stream)
        analytic = table1_moments(ch.v2, ch.v3, params)
        moment_rows.append(sampled.csv_row())
        pairs = [
            ("re_mean", sampled.diag_mean.real, analytic.diag_mean.real),
            ("im_mean", sampled.diag_mean.imag, analytic.diag_mean.imag),
            ("re_sd", sampled.off_re_sd, analytic.off_re_sd),
            ("im_sd", sampled.off_im_sd, analytic.off_im_sd),
            ("abs2_mean", sampled.abs2_mean, analytic.abs2_mean),
            ("abs2_sd", sampled.abs2_sd, analytic.abs2_sd),
        ]
        for name, got, want in pairs:
            compare_rows.append(f"{n_dim},{name},{_fmt(got)},{_fmt(want)}")
        rel = lambda got, want: abs(got - want) / abs(want)
        re_se = sampled.diag_re_sd / n_draw**0.5
        checks.extend(
            [
                (
                    f"N{n_dim}_im_mean",
                    rel(sampled.diag_mean.imag, analytic.diag_mean.imag) <= 0.25,
                    f"sampled {sampled.diag_mean.imag:.4f} vs {analytic.diag_mean.imag:.4f}",
                ),
                (
                    f"N{n_dim}_re_mean",
                    abs(sampled.diag_mean.real) <= 3.0 * re_se,
                    f"sampled {sampled.diag_mean.real:.4f} vs 0 within 3 SE = {3 * re_se:.4f}",
                ),
                (
                    f"N{n_dim}_off_re_sd",
                    rel(sampled.off_re_sd, analytic.off_re_sd) <= 0.25,
                    f"sampled {sampled.off_re_sd:.4f} vs {analytic.off_re_sd:.4f}",
                ),
                (
                    f"N{n_dim}_abs2_mean",
                    rel(sampled.abs2_mean, analytic.abs2_mean) <= 0.25,
                    f"sampled {sampled.abs2_mean:.4f} vs {analytic.abs2_mean:.4f}",
                ),
                (
                    f"N{n_dim}_abs2_sd",
                    rel(sampled.abs2_sd, analytic.abs2_sd) <= 0.40,
                    f"sampled {sampled.abs2_sd:.4f} vs {analytic.abs2_sd:.4f}",
                ),
            ]
        )
        print(
            f"table2 N={n_dim}: im<w_kk>={sampled.diag_mean.imag:.4f} "
            f"(analytic {analytic.diag_mean.imag:.4f}), "
            f"<|w'|^2>={sampled.abs2_mean:.4f} (analytic {analytic.abs2_mean:.4f})"
        )
    _write_csv(out / "moments_sampled.csv", h, MOMENTS_CSV_HEADER, moment_rows)
    _write_csv(out / "table2_compare.csv", h, TABLE2_COMPARE_HEADER, compare_rows)
    extras = {
        "substreams": [[i * n_draw, (i + 1) * n_draw] for i in range(len(cfg.table2_dims))],
        "n_excluded": 0,
    }
    return ["moments_sampled.csv", "table2_compare.csv"], checks, extras


def _run_integrals(cfg: ExperimentConfig, out: Path):
    h = config_hash(cfg)
    rows = verification_table()
    _write_csv(out / "integrals.csv", h, INTEGRALS_CSV_HEADER, (integral_csv_row(r) for r in rows))
    exact = [r for r in rows if r.regime_flag == "exact"]
    asym = [r for r in rows if r.regime_flag == "asymptotic"]
    checks = [
        (
            "exact_vs_quadrature",
            all(r.rel_err < 1e-8 for r in exact),
            f"worst exact rel_err = {max(r.rel_err for r in exact):.3e}, tolerance 1e-8",
        ),
        (
            "asymptotic_in_regime",
            all(r.rel_err < 0.01 for r in asym),
            f"worst asymptotic rel_err = {max(r.rel_err for r in asym):.3e}, tolerance 1e-2",
        ),
    ]
    print(
        f"integrals: {len(exact)} exact rows (worst {max(r.rel_err for r in exact):.2e}), "
        f"{len(asym)} asymptotic rows (worst {max(r.rel_err for r in asym):.2e})"
    )
    return ["integrals.csv"], checks, {"substreams": [], "n_excluded": 0}


def _run_custom(cfg: ExperimentConfig, out: Path):
    outputs, _, extras = _run_fig1(cfg, out)
    return outputs, [], extras


_DISPATCH = {
    "fig1": _run_fig1,
    "fig2": _run_fig2,
    "fig3": _run_fig3,
    "table2": _run_table2,
    "integrals": _run_integrals,
    "custom": _run_custom,
}


@dataclass(frozen=True)
class RunManifest:
    """Provenance record of one experiment run.

    Together with the package version it pins everything needed to
    reproduce the output files byte for byte: the canonical config echo
    (and its hash, which every CSV also carries), the master seed, and
    the substream id blocks each stage consumed.
    """

    experiment: str
    status: str
    config_hash: str
    config: tuple
    master_seed: int
    substreams: tuple
    n_excluded: int | None
    summary: object
    checks: tuple
    outputs: tuple
    error: str | None
    duration_s: float
    artifact: str = "goereact"
    version: str = field(default=__version__)

    def payload(self) -> dict:
        return {
            "artifact": self.artifact,
            "version": self.version,
            "experiment": self.experiment,
            "status": self.status,
            "config_hash": self.config_hash,
            "config": list(self.config),
            "master_seed": self.master_seed,
            "substreams": [list(block) for block in self.substreams],
            "n_excluded": self.n_excluded,
            "summary": self.summary,
            "checks": [dict(c) for c in self.checks],
            "outputs": list(self.outputs),
            "error": self.error,
            "duration_s": self.duration_s,
        }


def _manifest(cfg, status, outputs, checks, extras, duration, error=None) -> RunManifest:
    return RunManifest(
        experiment=cfg.experiment,
        status=status,
        config_hash=config_hash(cfg),
        config=tuple(config_echo(cfg).splitlines()),
        master_seed=cfg.ensemble.master_seed,
        substreams=tuple(tuple(block) for block in extras.get("substreams", [])),
        n_excluded=extras.get("n_excluded"),
        summary=extras.get("summary"),
        checks=tuple({"name": n, "passed": ok, "detail": d} for n, ok, d in checks),
        outputs=tuple(sorted(outputs)),
        error=error,
        duration_s=duration,
    )


def run_experiment(cfg: ExperimentConfig, out_dir=None, check: bool = False) -> RunManifest:
    """Run one preset, write its output files plus manifest.json.

    A NumericalError still writes a manifest with status "failed"
    before propagating.  With check=True, a violated preset expectation
    downgrades the status to "check_failed" without raising; mapping
    that to an exit code is the caller's concern.
    """
    out = Path(out_dir) if out_dir is not None else Path("out") / cfg.experiment
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.monotonic()
    try:
        outputs, checks, extras = _DISPATCH[cfg.experiment](cfg, out)
    except NumericalError as exc:
        manifest = _manifest(
            cfg, "failed", [], [], {}, round(time.monotonic() - t0, 3), error=str(exc)
        )
        _write_json(out / "manifest.json", manifest.payload())
        raise
    status = "ok"
    if check and any(not ok for _, ok, _ in checks):
        status = "check_failed"
    manifest = _manifest(
        cfg, status, outputs + ["manifest.json"], checks, extras,
        round(time.monotonic() - t0, 3),
    )
    _write_json(out / "manifest.json", manifest.payload())
    return manifest


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="goereact",
        description="Two-reservoir GOE reaction model experiments",
    )
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name, help_txt in [
        ("fig1", "reference ensemble histogram with nu fit"),
        ("fig2", "histograms and fits along the gamma_a scan"),
        ("fig3", "fitted nu versus y across the gamma_a scan"),
        ("table2", "sampled self-energy moments vs the analytic table"),
        ("integrals", "closed-form band integrals vs quadrature"),
        ("custom", "config-driven ensemble run"),
    ]:
        p = sub.add_parser(name, help=help_txt)
        p.add_argument("--config", default=None, help="key = value config file")
        p.add_argument("--seed", type=int, default=None, help="override master_seed")
        p.add_argument("--out", default=None, help="output directory (default out/<experiment>)")
        p.add_argument("--workers", type=int, default=None, help="worker processes (0 = all)")
        p.add_argument(
            "--check",
            action="store_true",
            help="verify preset expectations; exit 4 on violation",
        )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.experiment, seed=args.seed, workers=args.workers)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    out = Path(args.out) if args.out is not None else Path("out") / cfg.experiment
    try:
        manifest = run_experiment(cfg, out, check=args.check)
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3

    if args.check:
        for c in manifest.checks:
            print(f"[check] {c['name']}: {'PASS' if c['passed'] else 'FAIL'} ({c['detail']})")
        failed = [c for c in manifest.checks if not c["passed"]]
        if failed:
            print(f"{len(failed)} check(s) failed", file=sys.stderr)
            return 4
    print(f"{cfg.experiment}: wrote {len(manifest.outputs)} files to {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
