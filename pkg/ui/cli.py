"""Command-line interface for mbo-lab."""

import argparse
import logging
from typing import Callable, Dict, List, Optional, Sequence

from rich.console import Console
from rich.logging import RichHandler
from rich.panel import Panel
from rich.table import Table

from config import Config, DatumKind, RunConfig, build_run_config
from core.counting import (
    CURVES, FACTS, count_ellipse, count_hyperbola, counting_scan, large_mu_probes, fact_scan,
)
from core.datum import colored_noise, two_mode, zero_datum
from core.errors import ConfigInvalid, InvalidRegularity, InvariantViolation, MboLabError
from core.estimates import (
    ENSEMBLES, ESTIMATE_IDS, MIXED, check_regularity, estimate_campaign, product_campaign,
    replay_witness,
)
from core.gauge import (
    bilinear_ratio, difference_bounds, exponential_bounds, gauge_residuals, lipschitz_probe, set_oversample,
)
from core.identities import phi5_scan, phi6_scan, small_output_region_scan
from core.normal_form import DECAY_FAMILIES, cross_decomposition, decay_scan, telescoping_check
from core.solver import (
    Equation, StepConfig, Trajectory, conserved_drift, mbo_to_mbo_prime, order_check, simulate, twin_probe,
)
from core.spectral import SpectralField
from core.trees import J_MAX, phase_bound_check, resonance_scan
from core.twisted import build_snapshots, omega_equation_residual
from store import ReportStore, read_trajectory, write_conserved_csv, write_trajectory
from utils.helpers import format_norm, format_ratio, format_status, parse_floats, parse_sizes

logger = logging.getLogger(__name__)

REPLAY_TOL = 1e-12
TWIN_FACTOR = 10.0
LARGE_MU_R = 16

# argparse dests that are flags of the CLI itself, not run parameters
_CONTROL = {"command", "config", "verbose", "order_check", "decay", "omega_check"}
_DATUM_FLAGS = {"datum_kind": "kind", "datum_a": "a", "datum_b": "b", "datum_amplitude": "amplitude",
                "datum_decay": "decay", "datum_mean": "mean"}


def _default(name: str):
    field = RunConfig.model_fields[name]
    value = field.default_factory() if field.default_factory is not None else field.default
    return getattr(value, "value", value)


def _help(text: str, name: str) -> str:
    return f"{text} (default {_default(name)})"


class CLI:
    """Command-line interface for the spectral laboratory."""

    def __init__(self, console: Optional[Console] = None):
        """Initialize CLI.

        Args:
            console: Rich console for summaries (stdout by default)
        """
        self.console = console or Console()
        self.handlers: Dict[str, Callable[[RunConfig, argparse.Namespace], None]] = {
            "simulate": self.handle_simulate,
            "gauge-check": self.handle_gauge_check,
            "nf-expand": self.handle_nf_expand,
            "verify-estimates": self.handle_verify_estimates,
            "count-lemma": self.handle_count_lemma,
            "twin-probe": self.handle_twin_probe,
            "identity-scan": self.handle_identity_scan,
        }

    # Parsing

    def build_parser(self) -> argparse.ArgumentParser:
        common = argparse.ArgumentParser(add_help=False)
        common.add_argument("--config", help="TOML or JSON run configuration")
        common.add_argument("--threads", type=int, help="worker threads (default: available parallelism)")
        common.add_argument("--report-dir", dest="report_dir", help=_help("report directory", "report_dir"))
        common.add_argument("--seed", type=int, help=_help("random seed", "seed"))
        common.add_argument("--verbose", action="store_true", help="debug logging")

        solver = argparse.ArgumentParser(add_help=False)
        solver.add_argument("--n-max", dest="n_max", type=int, help=_help("lattice half-width N", "n_max"))
        solver.add_argument("--dt", type=float, help=_help("time step", "dt"))
        solver.add_argument("--T", dest="T", type=float, help=_help("final time", "T"))
        solver.add_argument("--sigma", type=int, choices=(-1, 1), help=_help("nonlinearity sign", "sigma"))
        solver.add_argument("--equation", choices=[e.value for e in Equation], help=_help("equation", "equation"))
        solver.add_argument("--sample-every", dest="sample_every", type=int,
                            help=_help("keep every k-th step", "sample_every"))
        solver.add_argument("--blowup-factor", dest="blowup_factor", type=float,
                            help=_help("abort when the L2 norm grows by this factor", "blowup_factor"))
        solver.add_argument("--datum", dest="datum_kind", choices=[k.value for k in DatumKind],
                            help="initial datum (default two_mode)")
        solver.add_argument("--a", dest="datum_a", type=float, help="cos x amplitude (default 0.5)")
        solver.add_argument("--b", dest="datum_b", type=float, help="cos 2x amplitude (default 0.25)")
        solver.add_argument("--amplitude", dest="datum_amplitude", type=float,
                            help="colored noise amplitude (default 0.1)")
        solver.add_argument("--decay", dest="datum_decay", type=float, help="colored noise decay (default 2.0)")
        solver.add_argument("--mean", dest="datum_mean", type=float, help="datum mean (default 0.0)")

        parser = argparse.ArgumentParser(prog="mbo-lab",
                                         description="Spectral laboratory for the periodic modified Benjamin-Ono equation")
        sub = parser.add_subparsers(dest="command", required=True)

        p = sub.add_parser("simulate", parents=[common, solver], help="integrate mBO or mBO'")
        p.add_argument("--output", help="trajectory JSONL path (default <report-dir>/simulate-<hash>.jsonl)")
        p.add_argument("--order-check", dest="order_check", action="store_true",
                       help="also measure the RK4 step-halving ratio")

        p = sub.add_parser("gauge-check", parents=[common], help="residuals of the gauge-transformed equation")
        p.add_argument("--input", "--traj", dest="trajectory", required=True, help="trajectory JSONL")
        p.add_argument("--s", type=float, help=_help("Sobolev index", "s"))
        p.add_argument("--sigma", type=int, choices=(-1, 1), help="sign for header-less trajectories")
        p.add_argument("--weight-band", dest="weight_band", type=int, help="band of the exponential weights")
        p.add_argument("--stride", type=int, help=_help("use every k-th sample for the bounds", "stride"))
        p.add_argument("--report", help="CSV path for per-time residuals")

        p = sub.add_parser("nf-expand", parents=[common], help="normal-form families of generation J")
        p.add_argument("--traj", "--input", dest="trajectory", required=True, help="trajectory JSONL")
        p.add_argument("--J", dest="J", type=int, choices=range(1, J_MAX + 1), help=_help("generation", "J"))
        p.add_argument("--M", dest="M", type=float, help=_help("resonance threshold", "M"))
        p.add_argument("--M-values", dest="M_values", type=parse_floats,
                       help=_help("thresholds of the decay scan", "M_values"))
        p.add_argument("--eta", type=float, help=_help("harmless-set parameter", "eta"))
        p.add_argument("--s", type=float, help=_help("Sobolev index", "s"))
        p.add_argument("--sigma", type=int, choices=(-1, 1), help="sign for header-less trajectories")
        p.add_argument("--mode", choices=("exact", "mc"), help=_help("evaluation mode", "mode"))
        p.add_argument("--samples", type=int, help=_help("Monte-Carlo samples per tree", "samples"))
        p.add_argument("--stride", type=int, help=_help("use every k-th sample", "stride"))
        p.add_argument("--weight-band", dest="weight_band", type=int, help="band of the exponential weights")
        p.add_argument("--decay", action="store_true", help="scan family norms over --M-values")
        p.add_argument("--omega-check", dest="omega_check", action="store_true",
                       help="residual of the omega equation itself")
        p.add_argument("--report", help="JSON report path")

        p = sub.add_parser("verify-estimates", parents=[common], help="empirical constants of the estimates")
        p.add_argument("--id", dest="estimate_id",
                       choices=("all", "product") + ESTIMATE_IDS, help=_help("estimate", "estimate_id"))
        p.add_argument("--s", type=float, help=_help("Sobolev index", "s"))
        p.add_argument("--delta", type=float, help="delta (default (s - 1/2) / 4)")
        p.add_argument("--eta", type=float, help=_help("harmless-set parameter", "eta"))
        p.add_argument("--sizes", type=parse_sizes, help="lattice sizes (default 16,32,64)")
        p.add_argument("--trials", type=int, help=_help("trials per size", "trials"))
        p.add_argument("--ensemble", choices=ENSEMBLES + (MIXED,), help=_help("input ensemble", "ensemble"))
        p.add_argument("--exact-max-n", dest="exact_max_n", type=int,
                       help=_help("largest exactly summed lattice", "exact_max_n"))
        p.add_argument("--mc-samples", dest="mc_samples", type=int,
                       help=_help("sampled tuples per output mode above it", "mc_samples"))
        p.add_argument("--report", help="JSON report path")

        p = sub.add_parser("count-lemma", parents=[common], help="lattice points on conics")
        p.add_argument("--curve", choices=CURVES + ("both",), help=_help("conic", "curve"))
        p.add_argument("--rmax", type=int, help=_help("largest radius", "rmax"))
        p.add_argument("--centers", type=int, help=_help("random centers besides the origin", "centers"))
        p.add_argument("--probes", type=int, help=_help("large-mu probes", "probes"))
        p.add_argument("--report", help="CSV report path")

        p = sub.add_parser("twin-probe", parents=[common, solver], help="divergence of two schemes")
        p.add_argument("--s", type=float, help=_help("Sobolev index", "s"))
        p.add_argument("--perturbation", type=float,
                       help=_help("size of a colored perturbation of the second datum", "perturbation"))
        p.add_argument("--report", help="JSON report path")

        p = sub.add_parser("identity-scan", parents=[common], help="resonance identities and region scans")
        p.add_argument("--eta", type=float, help=_help("harmless-set parameter", "eta"))
        p.add_argument("--M", dest="M", type=float, help=_help("resonance threshold", "M"))
        p.add_argument("--s", type=float, help=_help("Sobolev index", "s"))
        p.add_argument("--delta", type=float, help="delta (default (s - 1/2) / 4)")
        p.add_argument("--scan-bound", dest="scan_bound", type=int,
                       help=_help("frequency bound of the region scan", "scan_bound"))
        p.add_argument("--samples", type=int, help=_help("sampled phase chains", "samples"))
        p.add_argument("--report", help="JSON report path")
        return parser

    def _run_config(self, args: argparse.Namespace) -> RunConfig:
        values = vars(args)
        overrides = {k: v for k, v in values.items() if k not in _CONTROL and k not in _DATUM_FLAGS}
        if "equation" in overrides and overrides["equation"] is not None:
            overrides["equation"] = Equation(overrides["equation"])
        overrides["datum"] = {key: values.get(flag) for flag, key in _DATUM_FLAGS.items()}
        return build_run_config(args.config, overrides)

    def _configure_logging(self, verbose: bool):
        level = logging.DEBUG if verbose else Config.LOG_LEVEL.upper()
        logging.basicConfig(level=level, format="%(message)s", datefmt="[%X]",
                            handlers=[RichHandler(console=Console(stderr=True), rich_tracebacks=True)])
        logging.getLogger().setLevel(level)

    # Entry

    def run(self, argv: Optional[Sequence[str]] = None) -> int:
        """Parse argv, run one subcommand and return the process exit code."""
        parser = self.build_parser()
        try:
            args = parser.parse_args(argv)
        except SystemExit as exc:
            return int(exc.code or 0)
        self._configure_logging(args.verbose)
        try:
            set_oversample(Config.OVERSAMPLE)
            cfg = self._run_config(args)
            self.handlers[args.command](cfg, args)
        except InvalidRegularity as exc:
            self._error(exc)
            return ConfigInvalid.exit_code
        except MboLabError as exc:
            self._error(exc)
            return exc.exit_code
        return 0

    def _error(self, exc: MboLabError):
        self.console.print(Panel(f"[red]{exc}[/red]", title=type(exc).__name__, border_style="red"))

    def _store(self, subcommand: str, cfg: RunConfig, delta: Optional[float] = None) -> ReportStore:
        parameters = cfg.parameters()
        if delta is not None:
            parameters["delta"] = delta
        return ReportStore(cfg.report_dir, subcommand, cfg.digest(), parameters)

    def _threads(self, cfg: RunConfig) -> int:
        return cfg.threads or Config.THREADS

    def _table(self, title: str, columns: Sequence[str]) -> Table:
        table = Table(title=title, show_header=True, header_style="bold magenta")
        for k, column in enumerate(columns):
            table.add_column(column, style="cyan" if k == 0 else None, justify="left" if k == 0 else "right")
        return table

    def _written(self, *paths):
        for path in paths:
            self.console.print(f"[dim]wrote {path}[/dim]")

    # Inputs

    def _datum(self, cfg: RunConfig) -> SpectralField:
        spec = cfg.datum
        if spec.kind is DatumKind.ZERO:
            return zero_datum(cfg.n_max)
        if spec.kind is DatumKind.TWO_MODE:
            u0 = two_mode(cfg.n_max, spec.a, spec.b)
            if spec.mean:
                u0 = u0 + SpectralField.constant(cfg.n_max, spec.mean)
            return u0
        return colored_noise(cfg.n_max, cfg.seed, spec.amplitude, spec.decay, spec.mean)

    def _trajectory(self, cfg: RunConfig) -> Trajectory:
        if not cfg.trajectory:
            raise ConfigInvalid("a trajectory file is required")
        traj = read_trajectory(cfg.trajectory, sigma=cfg.sigma, dt=cfg.dt)
        if traj.equation is Equation.MBO:
            logger.info("mapping mBO samples to mBO'")
            traj = mbo_to_mbo_prime(traj)
        return traj

    # Subcommands

    def handle_simulate(self, cfg: RunConfig, args: argparse.Namespace):
        """Integrate the configured datum and write trajectory, conserved log and summary."""
        u0 = self._datum(cfg)
        traj = simulate(u0, cfg.dt, cfg.T, cfg.sigma, cfg.equation, cfg.sample_every, cfg.blowup_factor)
        store = self._store("simulate", cfg)
        traj_path = write_trajectory(traj, store.path("jsonl", cfg.output))
        csv_path = write_conserved_csv(traj, store.path("csv"))
        drift = conserved_drift(traj)
        payload = {"trajectory": str(traj_path), "samples": len(traj), "n_max": traj.n_max,
                   "equation": traj.equation.value, "drift": drift}
        if args.order_check:
            payload["order_ratio"] = order_check(u0, cfg.dt, cfg.T, cfg.sigma, cfg.equation)
        json_path = store.write_json(payload)

        table = self._table("Conserved quantities", ["Quantity", "Max drift"])
        table.add_row("mean", format_norm(drift["mean"]))
        table.add_row("L2 (relative)", format_norm(drift["mass_l2"]))
        table.add_row("energy (relative)", format_norm(drift["energy"]))
        if "order_ratio" in payload:
            table.add_row("RK4 step-halving ratio", format_ratio(payload["order_ratio"], 2))
        self.console.print(table)
        self._written(traj_path, csv_path, json_path)

    def handle_gauge_check(self, cfg: RunConfig, args: argparse.Namespace):
        """Per-time residuals of the v equation and the weight identity, plus bound ratios."""
        traj = self._trajectory(cfg)
        if len(traj) < 3:
            raise ConfigInvalid("gauge-check needs at least three samples")
        rows = gauge_residuals(traj, cfg.s, cfg.weight_band, cfg.pair_tol)
        store = self._store("gauge-check", cfg)
        columns = list(rows[0].keys())
        csv_path = store.write_csv(columns, [[row[c] for c in columns] for row in rows], cfg.report)

        bounds: Dict[str, float] = {}
        for u in traj.states[::cfg.stride]:
            for key, value in exponential_bounds(u, cfg.s, traj.sigma, cfg.weight_band).items():
                bounds[key] = max(bounds.get(key, 0.0), value)
        first, last = traj.states[0], traj.final
        constants = {
            **bounds,
            **difference_bounds(first, last, cfg.s, traj.sigma, cfg.weight_band),
            "bilinear_ratio": max(bilinear_ratio(u, u, cfg.s) for u in traj.states[::cfg.stride]),
        }
        worst = {c: max(row[c] for row in rows) for c in columns if c != "t"}
        json_path = store.write_json({"trajectory": cfg.trajectory, "s": cfg.s, "worst_residual": worst,
                                      "constants": constants})

        table = self._table("Gauge residuals (sup over time)", ["Residual", f"H^{cfg.s - 1:g} norm"])
        for key, value in worst.items():
            table.add_row(key, format_norm(value))
        self.console.print(table)
        table = self._table("Empirical constants", ["Ratio", "Value"])
        for key, value in constants.items():
            table.add_row(key, format_ratio(value))
        self.console.print(table)
        self._written(csv_path, json_path)

    def handle_nf_expand(self, cfg: RunConfig, args: argparse.Namespace):
        """Family norms, per-generation ratios and the telescoping residual."""
        traj = self._trajectory(cfg)
        snaps = build_snapshots(traj, cfg.eta, cfg.weight_band, self._threads(cfg), cfg.stride)
        J_range = list(range(1, cfg.J + 1))
        scan = decay_scan(snaps, [cfg.M], J_range, cfg.s, cfg.mode, cfg.samples, cfg.seed)
        ratios = {entry["family"]: entry["ratio"] for entry in scan["ratios"]}
        residual = None
        telescoping = None
        if cfg.J <= 2 and len(snaps) >= 2:
            telescoping = telescoping_check(snaps, cfg.J, cfg.M, cfg.s)
            residual = telescoping["residual"]
        families = [
            {"family": row["family"], "J": row["J"], "norm_l2s": row["norm"],
             "ratio": ratios.get(row["family"]), "residual": residual}
            for row in scan["rows"] if row["J"] == cfg.J
        ]
        payload = {"trajectory": cfg.trajectory, "J": cfg.J, "mode": cfg.mode, "families": families,
                   "telescoping": telescoping}
        if cfg.J >= 2 and len(snaps) >= 2:
            payload["cross_decomposition"] = cross_decomposition(snaps, cfg.M, cfg.s, cfg.mode, cfg.samples,
                                                                 cfg.seed)
        if args.omega_check and len(snaps) >= 3:
            payload["omega_residual"] = omega_equation_residual(snaps, cfg.s)
        store = self._store("nf-expand", cfg)
        paths = []
        if args.decay:
            decay = decay_scan(snaps, cfg.M_values, J_range, cfg.s, cfg.mode, cfg.samples, cfg.seed)
            payload["decay"] = decay
            run_id = store.config_hash
            paths.append(store.write_long_csv(
                [(run_id, f"{row['family']}_J{row['J']}", row["M"], row["norm"]) for row in decay["rows"]]))
        paths.insert(0, store.write_json(payload, cfg.report))

        table = self._table(f"Generation {cfg.J} families (M = {cfg.M:g}, {cfg.mode})",
                            ["Family", "sup l2_s norm", "Ratio"])
        for entry in families:
            table.add_row(entry["family"], format_norm(entry["norm_l2s"]), format_ratio(entry["ratio"]))
        self.console.print(table)
        if telescoping is not None:
            self.console.print(f"telescoping residual {format_norm(residual)}"
                               f" (quadrature error {format_norm(telescoping['quadrature_error'])})")
        if "cross_decomposition" in payload:
            cross = payload["cross_decomposition"]
            self.console.print(f"cross decomposition gap {format_norm(cross['gap'])} "
                               f"{format_status(cross['within_error'])}")
        if args.decay:
            slopes = payload["decay"]["slopes"]
            table = self._table("Decay in M", ["Family", "Ratio slope"])
            for family in DECAY_FAMILIES:
                table.add_row(family.value, format_ratio(slopes.get(family.value)))
            self.console.print(table)
        self._written(*paths)

    def handle_verify_estimates(self, cfg: RunConfig, args: argparse.Namespace):
        """Worst ratios per lattice size with replayed witnesses."""
        try:
            delta = check_regularity(cfg.s, cfg.delta)
        except InvalidRegularity as exc:
            raise ConfigInvalid(str(exc)) from exc
        ids = ESTIMATE_IDS if cfg.estimate_id == "all" else (
            () if cfg.estimate_id == "product" else (cfg.estimate_id,))
        threads = self._threads(cfg)
        reports, failures = [], []
        for estimate_id in ids:
            report = estimate_campaign(estimate_id, cfg.s, delta, cfg.sizes, cfg.trials, cfg.seed, cfg.ensemble,
                                       cfg.eta, 1, cfg.exact_max_n, cfg.mc_samples, threads)
            for witness, worst in zip(report.witnesses, report.worst_ratio):
                if witness is None:
                    continue
                replayed = replay_witness(witness)
                if abs(replayed - worst) > REPLAY_TOL * max(1.0, abs(worst)):
                    failures.append({"estimate_id": estimate_id, "n_max": witness["n_max"],
                                     "recorded": worst, "replayed": replayed})
            reports.append(report.to_dict())
        payload = {"estimates": reports, "replay_failures": failures}
        if cfg.estimate_id in ("all", "product"):
            payload["product"] = product_campaign(cfg.s, seed=cfg.seed)
        path = self._store("verify-estimates", cfg, delta).write_json(payload, cfg.report)

        table = self._table(f"Estimates at s = {cfg.s:g}, delta = {delta:g}",
                            ["Estimate"] + [f"N={N}" for N in cfg.sizes] + ["Slope"])
        for report in reports:
            table.add_row(report["estimate_id"], *[format_ratio(r) for r in report["worst_ratio"]],
                          format_ratio(report["slope"]))
        self.console.print(table)
        if "product" in payload:
            product = payload["product"]
            self.console.print(f"product estimate worst ratios {[format_ratio(r) for r in product['worst_ratio']]}"
                               f" slope {format_ratio(product['slope'])}")
        self._written(path)
        if failures:
            raise InvariantViolation(f"{len(failures)} witnesses did not reproduce their ratio")

    def handle_count_lemma(self, cfg: RunConfig, args: argparse.Namespace):
        """Maximal conic counts per radius, the fact scans and the large-mu probes."""
        curves = CURVES if cfg.curve == "both" else (cfg.curve,)
        threads = self._threads(cfg)
        scans = [counting_scan(curve, cfg.rmax, centers=cfg.centers, seed=cfg.seed, threads=threads)
                 for curve in curves]
        R_probe = min(cfg.rmax, LARGE_MU_R)
        facts_R = [R for R in (4, 8, 16, 32) if R <= cfg.rmax] or [cfg.rmax]
        payload = {
            "scans": [scan.to_dict() for scan in scans],
            "spot_checks": {
                "hyperbola_mu12_R10": count_hyperbola(0, 0, 12, 10),
                "ellipse_mu0_R10": count_ellipse(0, 0, 0, 10),
            },
            "large_mu": large_mu_probes(R_probe, cfg.probes, cfg.seed),
            "facts": [fact_scan(which, facts_R, seed=cfg.seed, threads=threads) for which in FACTS],
        }
        store = self._store("count-lemma", cfg)
        rows = []
        for scan in scans:
            for witness in scan.witnesses:
                rows.append([scan.curve, witness["R"], witness["count"], witness["center"][0],
                             witness["center"][1], witness["mu"]])
        csv_path = store.write_csv(["curve", "R", "max_count", "center1", "center2", "mu"], rows, cfg.report)
        json_path = store.write_json(payload)

        table = self._table("Maximal counts", ["Curve", "R max", "Max count", "Slope"])
        for scan in scans:
            table.add_row(scan.curve, str(scan.R_values[-1]), str(max(scan.max_counts)), format_ratio(scan.slope))
        for fact in payload["facts"]:
            table.add_row(fact["fact"], str(fact["R_values"][-1]), str(max(fact["max_counts"])),
                          format_ratio(fact["slope"]))
        self.console.print(table)
        large = payload["large_mu"]
        self.console.print(f"large mu probes at R = {large['R']}: max count {large['max_count']}, "
                           f"violations {large['violations']} {format_status(large['violations'] == 0)}")
        self._written(csv_path, json_path)
        if large["violations"]:
            raise InvariantViolation(f"{large['violations']} large-mu probes found more than two points")

    def handle_twin_probe(self, cfg: RunConfig, args: argparse.Namespace):
        """Two schemes, dt and dt/2, from one datum (optionally perturbed)."""
        u0 = self._datum(cfg)
        perturbation = None
        if cfg.perturbation > 0:
            perturbation = colored_noise(cfg.n_max, cfg.seed + 1, cfg.perturbation, cfg.datum.decay)
        schemes = (StepConfig(cfg.dt, "if-rk4"), StepConfig(cfg.dt / 2, "if-rk4-half"))
        result = twin_probe(u0, schemes, cfg.T, cfg.sigma, cfg.s, cfg.equation, perturbation)
        report = dict(result.report)
        if perturbation is not None:
            report["lipschitz"] = lipschitz_probe(result.first, result.second, cfg.s,
                                                  [h for h in cfg.horizons if h <= cfg.T] or None)
        path = self._store("twin-probe", cfg).write_json(report, cfg.report)

        table = self._table("Twin probe", ["Quantity", "Value"])
        table.add_row("sup divergence", format_norm(report["divergence"]))
        table.add_row("final divergence", format_norm(report["divergence_final"]))
        if "combined_error" in report:
            table.add_row("truncation errors", ", ".join(format_norm(e) for e in report["truncation_errors"]))
            table.add_row("ratio to fine error", format_ratio(report["ratio_to_fine"]))
            table.add_row(f"within {TWIN_FACTOR:g}x combined error", format_status(report["within_bound"]))
        for row in report.get("lipschitz", []):
            table.add_row(f"Lipschitz ratio to t={row['horizon']:g}", format_ratio(row["ratio"]))
        self.console.print(table)
        self._written(path)
        if report.get("within_bound") is False:
            raise InvariantViolation("the two schemes diverge beyond their truncation errors")

    def handle_identity_scan(self, cfg: RunConfig, args: argparse.Namespace):
        """Resonance identities, the small-output region, set partitions and phase bounds."""
        delta = cfg.delta if cfg.delta is not None else max((cfg.s - 0.5) / 4.0, 1e-3)
        threads = self._threads(cfg)
        payload = {
            "identities": [phi5_scan(), phi6_scan()],
            "region": small_output_region_scan(cfg.scan_bound, cfg.eta, threads),
            "partition": resonance_scan(cfg.M),
            "phase_bounds": [phase_bound_check(J, cfg.M, delta, cfg.samples, cfg.seed)
                             for J in range(1, J_MAX + 1)],
        }
        path = self._store("identity-scan", cfg, delta).write_json(payload, cfg.report)
        checks: List[tuple] = [(ident["identity"], ident["ok"], f"{ident['mismatches']} of {ident['checked']}")
                               for ident in payload["identities"]]
        region = payload["region"]
        checks.append(("small-output region", region["empty"],
                       f"{region['survivors']} of {region['candidates']} candidates"))
        for part in payload["partition"]:
            checks.append((f"partition J={part['J']}", part["ok"],
                           f"overlap {part['overlap']}, uncovered {part['uncovered']}"))
        for bound in payload["phase_bounds"]:
            checks.append((f"phase bounds J={bound['J']}", bound["levels_exceeded"],
                           f"constant {format_ratio(bound['nonresonant_constant'])}"))

        table = self._table("Identity scans", ["Check", "Status", "Detail"])
        for name, ok, detail in checks:
            table.add_row(name, format_status(ok), detail)
        self.console.print(table)
        self._written(path)
        failed = [name for name, ok, _ in checks if not ok]
        if failed:
            raise InvariantViolation(f"failed checks: {', '.join(failed)}")
