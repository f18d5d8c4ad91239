"""Command-line front end: ``sglab <subcommand> --config FILE``."""

from __future__ import annotations

import argparse
import csv
import json
import platform
import sys
import time
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

import numpy as np

from . import bsde, coulomb, gff, spectral, wick
from .config import ExperimentConfig, load_config, validation_report
from .errors import ConfigError, SglabError
from .montecarlo import map_mode_blocks, mean_estimate, rng

SUBCOMMANDS = ("green-check", "weyl", "wick-check", "bsde-run", "taylor-check", "partition", "charge-cf",
               "xor-check", "epsilon-sweep")


class Table:
    """A CSV table with a ``# column: definition`` header block."""

    def __init__(self, name: str, columns: list[tuple[str, str]]):
        self.name, self.columns, self.rows = name, columns, []

    def add(self, *values):
        self.rows.append(values)

    def write(self, directory: Path, manifest_name: str) -> Path:
        path = directory / f"{self.name}.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write(f"# manifest: {manifest_name}\n")
            for col, definition in self.columns:
                fh.write(f"# {col}: {definition}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow([c for c, _ in self.columns])
            for row in self.rows:
                w.writerow([_fmt(v) for v in row])
        return path


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


class Run:
    def __init__(self, cfg: ExperimentConfig, threads: int):
        self.cfg, self.threads = cfg, threads
        self.tables: list[Table] = []
        self.checks: dict[str, dict] = {}
        self.report: dict = {}

    def table(self, name, columns) -> Table:
        t = Table(name, columns)
        self.tables.append(t)
        return t

    def check(self, name: str, passed: bool, **detail):
        self.checks[name] = {"passed": bool(passed), **{k: _jsonable(v) for k, v in detail.items()}}


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating, float)):
        return float(v)
    if isinstance(v, complex):
        return [v.real, v.imag]
    return v


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_green_check(run: Run):
    """Disk Green function: eigen-series against the half-plane formula through the Cayley map."""
    cfg = run.cfg
    disk = spectral.DomainSpec.unit_disk()
    basis = spectral.build_basis(disk, cfg.green_modes)
    x, y = random_disk_pairs(cfg.green_pairs, cfg.seed)
    series = spectral.green(disk, basis, x, y)
    conformal = spectral.green(spectral.DomainSpec.conformal_disk(), None, x, y)
    swapped = spectral.green(disk, basis, y, x)
    t = run.table("green_pairs", [("pair", "pair index"), ("x1", "first point, x"), ("x2", "first point, y"),
                                  ("y1", "second point, x"), ("y2", "second point, y"),
                                  ("series", "truncated eigen-series Green value"),
                                  ("conformal", "half-plane Green value through the disk map"),
                                  ("abs_diff", "|series - conformal|")])
    for i in range(len(x)):
        t.add(i, x[i, 0], x[i, 1], y[i, 0], y[i, 1], series[i], conformal[i], abs(series[i] - conformal[i]))
    gap = float(np.max(np.abs(series - conformal)))
    run.check("series_vs_conformal", gap <= 2e-2, max_abs_diff=gap, tolerance=2e-2, modes=cfg.green_modes)
    run.check("symmetry", np.allclose(series, swapped, rtol=0, atol=1e-12),
              max_asymmetry=float(np.max(np.abs(series - swapped))))


def random_disk_pairs(n: int, seed: int, max_radius: float = 0.75, min_separation: float = 0.2):
    """``n`` point pairs in ``|x| <= max_radius`` at distance ``>= min_separation``."""
    g = rng(seed, 7)
    xs, ys = [], []
    while len(xs) < n:
        r = max_radius * np.sqrt(g.uniform(size=2))
        th = g.uniform(0, 2 * np.pi, size=2)
        p = np.column_stack([r * np.cos(th), r * np.sin(th)])
        if np.hypot(*(p[0] - p[1])) >= min_separation:
            xs.append(p[0])
            ys.append(p[1])
    return np.array(xs), np.array(ys)


def cmd_weyl(run: Run):
    cfg = run.cfg
    basis = spectral.build_basis(cfg.domain(), cfg.weyl_modes)
    stats = spectral.weyl_plateau(basis)
    t = run.table("weyl", [("k", "eigenvalue index (1-based)"),
                           ("lambda_k", "k-th inverse Dirichlet eigenvalue"),
                           ("ratio", "lambda_k * k")])
    for k, lam in enumerate(basis.lam, start=1):
        t.add(k, lam, lam * k)
    run.report["weyl"] = stats
    run.check("plateau", stats["relative_spread"] < 0.05, relative_spread=stats["relative_spread"],
              plateau=stats["plateau"], candidates=stats["candidates"], closest=stats["closest"])


def cmd_wick_check(run: Run):
    cfg = run.cfg
    basis = spectral.build_basis(cfg.domain(), cfg.chaos_modes)
    rho, psi = cfg.rho_function(), cfg.psi_function()
    eps = cfg.eps[-1]
    full = gff.build_cache(basis, eps, cfg.grid, cfg.mollifier())
    probes = np.linspace(0, full.P - 1, 16).round().astype(int)
    phi_p, var_p = full.phi[:, probes], full.variance[probes]
    # untruncated proxy: the same probes with four times the modes
    fine = spectral.build_basis(cfg.domain(), 4 * cfg.chaos_modes)
    e_fine = spectral.mollified_eigenfunctions(fine, full.points[probes], eps, cfg.mollifier())
    var_fine = np.einsum("k,kp->p", 2 * np.pi * fine.lam, e_fine**2)
    cache = gff.build_cache(basis, eps, cfg.grid, cfg.mollifier(), support=(rho.center, rho.radius))
    t = run.table("wick_nodes", [("beta", "inverse-temperature parameter"), ("node", "probe node index"),
                                 ("x", "node x"), ("y", "node y"), ("variance", "matched-truncation G^eps(x)"),
                                 ("variance_4n", "G^eps(x) with four times the modes (truncation gap proxy)"),
                                 ("mean", "sample mean of the Wick cosine"), ("stderr", "standard error"),
                                 ("z", "(mean - 1) / stderr")])
    b = run.table("wick_bound", [("beta", "inverse-temperature parameter"),
                                 ("max_abs_xi", "max |tested cosine| over samples"),
                                 ("bound", "b_rho b_psi C_beta"), ("C_beta", "grid integral of exp(beta^2 G/2)"),
                                 ("violations", "samples exceeding the bound")])
    for beta in cfg.wick_betas:
        wc = map_mode_blocks(lambda z: wick.wick_cos(z @ phi_p, var_p, beta), basis.N, cfg.samples, cfg.seed,
                             threads=run.threads)
        m, se = wc.mean(0), wc.std(0, ddof=1) / np.sqrt(cfg.samples)
        for j, p in enumerate(probes):
            t.add(beta, int(p), full.points[p, 0], full.points[p, 1], var_p[j], var_fine[j], m[j], se[j], (m[j] - 1) / se[j])
        run.report["max_truncation_gap"] = float(np.max(var_fine - var_p))
        run.check(f"wick_mean_beta_{beta:g}", bool(np.all(np.abs(m - 1) <= 3 * se)),
                  max_abs_z=float(np.max(np.abs(m - 1) / se)))
        term = bsde.WickCosineTerminal(cache, rho, psi, beta)
        xi = map_mode_blocks(term.evaluate, basis.N, cfg.samples, cfg.seed, stream=1, threads=run.threads)
        viol = int(np.sum(np.abs(xi) > term.bound))
        b.add(beta, float(np.abs(xi).max()), term.bound, term.ledger.C_beta, viol)
        run.check(f"uniform_bound_beta_{beta:g}", viol == 0, max_abs_xi=float(np.abs(xi).max()), bound=term.bound)


def _terminal(cfg, beta=None, eps=None, modes=None):
    basis = spectral.build_basis(cfg.domain(), modes or cfg.modes)
    rho, psi = cfg.rho_function(), cfg.psi_function()
    cache = gff.build_cache(basis, cfg.eps[-1] if eps is None else eps, cfg.grid, cfg.mollifier(),
                            support=(rho.center, rho.radius))
    return basis, cache, bsde.WickCosineTerminal(cache, rho, psi, cfg.beta if beta is None else beta)


def cmd_bsde_run(run: Run):
    cfg = run.cfg
    basis, cache, term = _terminal(cfg)
    alpha = cfg.alpha
    y0 = bsde.cole_hopf_y0(term, alpha, cfg.samples, cfg.seed, run.threads)
    grid = np.linspace(0.0, 1.0, cfg.steps + 1)
    sol = bsde.solve_bsde_regression(term, alpha, grid, cfg.paths, cfg.seed + 1, threads=run.threads, lam=basis.lam)
    gap = abs(sol.y0 - y0.value)
    run.check("regression_vs_cole_hopf", gap <= 1e-2 + 3 * y0.stderr, y0_regression=sol.y0,
              y0_cole_hopf=y0.value, stderr=y0.stderr, gap=gap)
    run.check("terminal_bound", bool(np.all(np.abs(sol.y) <= term.bound + 1e-12)), bound=term.bound)
    ref = mean_estimate(np.exp(alpha * bsde.terminal_samples(term, cfg.samples, cfg.seed, run.threads)))
    tower = [bsde.tower_check(term, alpha, t, cfg.outer, cfg.inner, cfg.seed + 2, reference=ref)
             for t in (0.25, 0.5, 0.75)]
    for r in tower:
        run.check(f"tower_t_{r['t']:g}", r["passed"], gap=r["gap"], tolerance=r["tolerance"])
    bmo = bsde.bmo_bound_check(sol, term.ledger)
    run.check("bmo_bound", bmo["passed"], bound=bmo["bound"], max_violation=bmo["max_violation"])
    a = np.sqrt(2.0) * np.exp(abs(alpha) * term.bound / 2)
    p = bsde.valid_p(a)
    K = bsde.reverse_holder_K(p, a)
    tw = bsde.tilt_weights(term, alpha, cfg.samples, cfg.seed + 3, run.threads)
    mom = tw.moment(p)
    run.check("gamma_moment", mom.value <= K + 3 * mom.stderr, p=p, a=a, K=K, moment=mom.value)
    run.check("split_gamma", abs(tw.split_mean - 1) <= 3 * tw.split_stderr, mean=tw.split_mean,
              stderr=tw.split_stderr)
    t = run.table("bsde_path", [("t", "grid time"), ("y_mean", "mean of regression y_t over paths"),
                                ("y_std", "std of y_t over paths"), ("zeta_sq_mean", "mean of sum_k zeta_k^2"),
                                ("residual_rms", "RMS one-step driver residual"),
                                ("bmo_estimate", "max regressed E[int_t^1 |zeta|^2 | F_t]"),
                                ("bmo_bound", "2 alpha^-2 exp(|alpha|(b_F + b_rho b_psi C_beta))")])
    zs = np.sum(sol.zeta.astype(float) ** 2, axis=2).mean(axis=1)
    for i, tt in enumerate(grid):
        last = i == len(grid) - 1
        t.add(tt, sol.y[i].mean(), sol.y[i].std(), 0.0 if last else zs[i],
              0.0 if last else sol.driver_residual[i], 0.0 if last else bmo["rows"][i]["estimate"], bmo["bound"])


def cmd_taylor_check(run: Run):
    cfg = run.cfg
    basis, cache, term = _terminal(cfg)
    cat = bsde.catalog_functionals(basis)
    t = run.table("taylor", [("functional", "catalog functional F"), ("delta", "perturbation size"),
                             ("y0_shifted", "Cole-Hopf Y0 for terminal xi + delta F"),
                             ("remainder", "|Y0(delta) - Y0(0) - delta E[Gamma F]|"),
                             ("ratio", "remainder / delta^2")])
    for name in ("tanh_point", "cos_mode1"):
        r = bsde.taylor_check(term, cat[name], cfg.alpha, cfg.deltas, cfg.samples, cfg.seed, run.threads)
        for row in r["rows"]:
            t.add(name, row["delta"], row["y0_shifted"], row["remainder"], row["ratio"])
        run.check(f"taylor_{name}", r["passed"], ratio_spread=r["ratio_spread"], sg_expectation=r["sg_expectation"])


def cmd_partition(run: Run):
    cfg = run.cfg
    basis = spectral.build_basis(cfg.domain(), cfg.modes)
    rho, psi = cfg.rho_function(), cfg.psi_function()
    cache = gff.build_cache(basis, cfg.eps[-1], cfg.partition_grid, cfg.mollifier(), support=(rho.center, rho.radius))
    t = run.table("partition", [("alpha", "activity"), ("beta", "inverse-temperature parameter"),
                                ("series_sum", "sum_{n<=n_max} alpha^n Q_n / (2^n n!) by quadrature"),
                                ("tail_bound", "closed-form bound on the omitted terms"),
                                ("onsager_constant", "smallest C with Q_n <= C^n n^(beta^2 n/4), n <= n_max"),
                                ("mc_partition", "Monte Carlo mean of exp(alpha xi)"),
                                ("mc_stderr", "standard error of mc_partition"),
                                ("y0_link", "exp(alpha Y0) from the Cole-Hopf value"),
                                ("passed", "all partition checks passed")])
    q = run.table("q_terms", [("beta", "inverse-temperature parameter"), ("n", "number of charges"),
                              ("q_quadrature", "Q_n by tensor quadrature"), ("q_moment", "E[(2 xi)^n] by Monte Carlo"),
                              ("q_moment_stderr", "standard error of q_moment")])
    reports = []
    for beta in cfg.betas:
        qt = [coulomb.q_n_quadrature(n, beta, cache, rho, psi) for n in range(cfg.n_max + 1)]
        for alpha in cfg.alphas:
            r = coulomb.partition(alpha, beta, cache, rho, psi, cfg.n_max, cfg.samples, cfg.seed, run.threads,
                                  q_terms=qt)
            reports.append(r.to_dict())
            t.add(alpha, beta, r.series_sum, r.tail_bound, r.onsager_constant, r.mc_partition, r.mc_stderr, r.y0_link, r.passed)
            run.check(f"partition_a{alpha:g}_b{beta:g}", r.passed, **r.checks)
        for n in range(cfg.n_max + 1):
            q.add(beta, n, r.q_terms[n], r.q_moments[n], r.q_moment_stderr[n])
    run.report["partition"] = reports


def cmd_charge_cf(run: Run):
    cfg = run.cfg
    basis = spectral.build_basis(cfg.domain(), cfg.modes)
    rho = cfg.rho_function()
    cache = gff.build_cache(basis, cfg.eps[-1], cfg.partition_grid, cfg.mollifier(), support=(rho.center, rho.radius))
    theta = cfg.theta_function()
    alpha, beta = cfg.alpha, cfg.beta
    t = run.table("charge_cf", [("theta", "angle field"), ("psi_tilt_re", "tilt route, real part"),
                                ("psi_tilt_im", "tilt route, imaginary part"),
                                ("psi_tilt_stderr", "tilt route standard error"),
                                ("psi_series_re", "series route, real part"),
                                ("psi_series_im", "series route, imaginary part"),
                                ("agreement", "|tilt - series|"), ("tolerance", "3 sigma + series truncation bound")])
    reports = []
    for th in (wick.Angle.zero(), theta, theta.scaled(-1.0)):
        r = coulomb.char_functional(th, alpha, beta, cache, rho, cfg.samples, cfg.char_n_max, cfg.seed, run.threads)
        reports.append(r.to_dict())
        t.add(r.theta, r.psi_tilt.real, r.psi_tilt.imag, r.psi_tilt_stderr, r.psi_series.real, r.psi_series.imag,
              r.agreement, r.tolerance)
        run.check(f"routes_{r.theta}", r.passed, agreement=r.agreement, tolerance=r.tolerance)
        run.check(f"modulus_{r.theta}", abs(r.psi_tilt) <= 1 + 3 * r.psi_tilt_stderr, psi=abs(r.psi_tilt))
    zero = reports[0]
    run.check("psi_at_zero", zero["psi_tilt"][0] == 1.0 and abs(zero["psi_series"][0] - 1) <= 1e-12,
              tilt=zero["psi_tilt"], series=zero["psi_series"])
    plus, minus = reports[1], reports[2]
    herm = abs(plus["psi_series"][0] - minus["psi_series"][0]) + abs(plus["psi_series"][1] + minus["psi_series"][1])
    run.check("hermitian_series", herm <= 1e-10, gap=herm)
    lip = run.table("lipschitz", [("pair", "theta pair index"), ("sup_norm", "||theta1 - theta2|| on nodes"),
                                  ("difference", "|Psi(theta1) - Psi(theta2)|"), ("bound", "L * sup_norm")])
    for i, s in enumerate((0.5, 0.8, 1.2, 1.5, 2.0)):
        r = coulomb.lipschitz_check(theta, theta.scaled(s), alpha, beta, cache, rho, cfg.samples, cfg.seed,
                                    run.threads)
        lip.add(i, r.get("sup_norm", 0.0), r["difference"], r["bound"])
        run.check(f"lipschitz_{i}", r["passed"], difference=r["difference"], bound=r["bound"])
    run.report["charge_cf"] = reports


def cmd_xor_check(run: Run):
    cfg = run.cfg
    rho = wick.TestFunction.smooth_bump((0.0, 0.0), 0.5)
    cmap = spectral.ConformalMap.disk_to_halfplane()
    t = run.table("xor", [("n", "number of points"), ("route_a", "charge-series form"),
                          ("route_b", "squared-correlation form"), ("difference", "|route_a - route_b|"),
                          ("tolerance", "acceptance tolerance")])
    for n in (1, 2):
        r = coulomb.xor_identity_check(n, rho, cmap, cfg.xor_radial, cfg.xor_angular)
        t.add(n, r["route_a"], r["route_b"], r["difference"], r["tolerance"])
        run.check(f"xor_n{n}", r["passed"], difference=r["difference"], tolerance=r["tolerance"])
    run.report["constants"] = coulomb.constants()


def cmd_epsilon_sweep(run: Run):
    cfg = run.cfg
    basis = spectral.build_basis(cfg.domain(), cfg.modes)
    rho, psi = cfg.rho_function(), cfg.psi_function()
    r = bsde.epsilon_sweep(cfg.alpha, cfg.beta, rho, psi, cfg.eps, cfg.samples, cfg.seed, basis, cfg.grid,
                           cfg.mollifier(), threads=run.threads)
    names = [k[3:] for k in r["rows"][0] if k.startswith("sg_") and not k.endswith("_stderr")]
    cols = [("eps", "mollification scale"), ("y0", "Cole-Hopf Y0"), ("y0_stderr", "standard error"),
            ("diff_prev", "coupled |Y0(eps) - Y0(previous eps)|"), ("split_gamma", "split-batch mean of Gamma"),
            ("split_gamma_stderr", "standard error")]
    cols += [(f"sg_{n}", f"tilted mean of {n}") for n in names]
    t = run.table("epsilon_sweep", cols)
    for row in r["rows"]:
        t.add(*[row.get(c, "") for c, _ in cols])
    run.check("cauchy_decreasing", r["cauchy_decreasing"], diffs=[row.get("diff_prev") for row in r["rows"][1:]])
    run.check("split_gamma", r["split_gamma_ok"])
    for n, ok in r["sg_stable"].items():
        run.check(f"sg_stable_{n}", ok)
    gap_basis = spectral.build_basis(cfg.domain(), cfg.chaos_modes)
    inner = wick.TestFunction.smooth_bump(rho.center, 0.1)
    g = wick.mollifier_gap(gap_basis, inner, psi, cfg.beta, cfg.eps, cfg.samples, cfg.seed,
                           (cfg.mollifier(), cfg.mollifier("compare_profile")), cfg.grid, run.threads)
    m = run.table("mollifier_gap", [("eps", "mollification scale"), ("mean_1", "tested cosine mean, first profile"),
                                    ("mean_2", "tested cosine mean, second profile"),
                                    ("rms_gap", "RMS per-sample gap on common modes")])
    for row in g["rows"]:
        m.add(row["eps"], row["mean_1"], row["mean_2"], row["rms_gap"])
    run.check("mollifier_gap_shrinking", g["shrinking"], gaps=[row["rms_gap"] for row in g["rows"]])
    run.check("mollifier_means_agree", g["means_agree"])


COMMANDS = {
    "green-check": cmd_green_check,
    "weyl": cmd_weyl,
    "wick-check": cmd_wick_check,
    "bsde-run": cmd_bsde_run,
    "taylor-check": cmd_taylor_check,
    "partition": cmd_partition,
    "charge-cf": cmd_charge_cf,
    "xor-check": cmd_xor_check,
    "epsilon-sweep": cmd_epsilon_sweep,
}


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def _version() -> str:
    try:
        return version("artifact")
    except PackageNotFoundError:
        return "unknown"


def execute(subcommand: str, cfg: ExperimentConfig, threads: int = 1) -> tuple[int, Path]:
    """Run one subcommand, write its tables and manifest, and return ``(exit status, directory)``."""
    run = Run(cfg, threads)
    start = time.time()
    COMMANDS[subcommand](run)
    wall = time.time() - start
    out = Path(cfg.output) / subcommand
    out.mkdir(parents=True, exist_ok=True)
    manifest_name = "manifest.json"
    files = [str(t.write(out, manifest_name).name) for t in run.tables]
    passed = all(c["passed"] for c in run.checks.values())
    manifest = {
        "subcommand": subcommand,
        "config": _jsonable(cfg.echo()),
        "library_version": _version(),
        "python": platform.python_version(),
        "numpy": np.__version__,
        "threads": threads,
        "started": time.strftime("%Y-%m-%dT%H:%M:%S", time.localtime(start)),
        "wall_clock_seconds": wall,
        "checks": run.checks,
        "passed": passed,
        "tables": files,
        "report": _jsonable(run.report),
    }
    with open(out / manifest_name, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, default=str)
    return (0 if passed else 1), out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sglab", description="Sine-Gordon / log-gas numerical laboratory")
    sub = p.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS + ("validate",):
        s = sub.add_parser(name)
        s.add_argument("--config", required=True, help="INI experiment configuration")
        s.add_argument("--seed", type=int, default=None, help="override [run] seed")
        s.add_argument("--threads", type=int, default=1, help="cap on worker threads")
        s.add_argument("--out", default=None, help="output root (default: [run] output, then $SGLAB_OUT)")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, seed=args.seed, output=args.out)
    except ConfigError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    if args.command == "validate":
        print(validation_report(cfg))
        return 0
    try:
        status, out = execute(args.command, cfg, max(1, args.threads))
    except SglabError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    with open(out / "manifest.json", encoding="utf-8") as fh:
        checks = json.load(fh)["checks"]
    for name, c in checks.items():
        print(f"{'PASS' if c['passed'] else 'FAIL'}  {args.command}:{name}")
    print(f"artifacts: {out}")
    return status


if __name__ == "__main__":
    sys.exit(main())
