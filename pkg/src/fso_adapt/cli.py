"""Command-line front end.

Subcommands: params, ase, required-snr, mc, reproduce.  Configuration is
a flat key=value file with dotted section prefixes, overridable with
repeated --set flags.  All emitted files are UTF-8 CSV with a header row.

Exit codes: 0 success, 2 usage/config error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
from dataclasses import dataclass, field, replace

import numpy as np

from . import (
    BerPolicy,
    ChannelModel,
    ConstellationSet,
    LinkGeometry,
    McConfig,
    SeriesConfig,
    SnrSpec,
    SolverBracketError,
    adaptive_required_snr,
    ase_limit,
    audit_power_constraint,
    beam_waist_at_rx,
    discrete_ase,
    estimate_ase_mc,
    estimate_discrete_ase_mc,
    fixed_required_snr,
    gg_params,
    high_snr_ase,
    pointing_params,
    rytov_variance,
    solve_cutoff_continuous,
    solve_cutoff_discrete,
)
from .specfun import SingularOrderError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


class ConfigError(Exception):
    pass


_DEFAULTS = {
    "geometry.length_m": 1000.0 / 3.0,
    "geometry.wavelength_m": 1550e-9,
    "geometry.tx_waist_m": 0.015,
    "geometry.rx_aperture_radius_m": 0.02,
    "geometry.cn2": 1.5e-13,
    "geometry.jitter_sigma_m": 0.01,
    "turbulence.sigma_r2": None,
    "pointing.enabled": True,
    "ber.target": 1e-3,
    "snr.start_db": 0.0,
    "snr.stop_db": 30.0,
    "snr.step_db": 1.0,
    "constellations": "0,4,16,64,256,1024",
    "series.max_terms": 20,
    "series.singularity_eps": 1e-6,
    "series.convergence_tol": 1e-12,
    "mc.n_samples": 40_000,
    "mc.seed": 12345,
    "mc.workers": 1,
    "output.path": None,
}

_BOOL_KEYS = {"pointing.enabled"}
_INT_KEYS = {"series.max_terms", "mc.n_samples", "mc.seed", "mc.workers"}
_STR_KEYS = {"constellations", "output.path"}


def _coerce(key: str, raw: str):
    if key in _STR_KEYS:
        return raw
    if key in _BOOL_KEYS:
        low = raw.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {raw!r}")
    try:
        return int(raw) if key in _INT_KEYS else float(raw)
    except ValueError as exc:
        raise ConfigError(f"{key}: {exc}") from None


def parse_config_file(path: str) -> dict:
    values = {}
    try:
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                stripped = line.split("#", 1)[0].strip()
                if not stripped:
                    continue
                if "=" not in stripped:
                    raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
                key, raw = (s.strip() for s in stripped.split("=", 1))
                if key not in _DEFAULTS:
                    raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
                values[key] = _coerce(key, raw)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return values


@dataclass(frozen=True)
class RunConfig:
    """Resolved run settings after file parsing and overrides."""

    raw: dict = field(default_factory=dict)

    @classmethod
    def load(cls, path: str | None, overrides: list[str] | None) -> "RunConfig":
        values = dict(_DEFAULTS)
        if path:
            values.update(parse_config_file(path))
        for item in overrides or []:
            if "=" not in item:
                raise ConfigError(f"--set expects key=value, got {item!r}")
            key, raw = (s.strip() for s in item.split("=", 1))
            if key not in _DEFAULTS:
                raise ConfigError(f"--set: unknown key {key!r}")
            values[key] = _coerce(key, raw)
        step = values["snr.step_db"]
        if step <= 0:
            raise ConfigError("snr.step_db must be > 0")
        if values["snr.start_db"] > values["snr.stop_db"]:
            raise ConfigError("snr.start_db must not exceed snr.stop_db")
        return cls(raw=values)

    def __getitem__(self, key):
        return self.raw[key]

    def geometry(self, sigma_r2: float | None = None) -> LinkGeometry:
        cn2 = self["geometry.cn2"]
        target = sigma_r2 if sigma_r2 is not None else self["turbulence.sigma_r2"]
        if target is not None:
            probe = LinkGeometry(
                length_m=self["geometry.length_m"],
                wavelength_m=self["geometry.wavelength_m"],
                tx_waist_m=self["geometry.tx_waist_m"],
                rx_aperture_radius_m=self["geometry.rx_aperture_radius_m"],
                cn2=cn2,
                jitter_sigma_m=self["geometry.jitter_sigma_m"],
            )
            cn2 = cn2 * target / rytov_variance(probe)
        return LinkGeometry(
            length_m=self["geometry.length_m"],
            wavelength_m=self["geometry.wavelength_m"],
            tx_waist_m=self["geometry.tx_waist_m"],
            rx_aperture_radius_m=self["geometry.rx_aperture_radius_m"],
            cn2=cn2,
            jitter_sigma_m=self["geometry.jitter_sigma_m"],
        )

    def channel_model(
        self, sigma_r2: float | None = None, pointing: bool | None = None
    ) -> ChannelModel:
        geom = self.geometry(sigma_r2)
        turb = gg_params(rytov_variance(geom))
        use_pe = self["pointing.enabled"] if pointing is None else pointing
        if not use_pe:
            return ChannelModel.gg_only(turb)
        wl = beam_waist_at_rx(geom)
        pp = pointing_params(geom.rx_aperture_radius_m, wl, geom.jitter_sigma_m)
        return ChannelModel.with_pointing(turb, pp)

    def series(self) -> SeriesConfig:
        return SeriesConfig(
            max_terms=self["series.max_terms"],
            singularity_eps=self["series.singularity_eps"],
            convergence_tol=self["series.convergence_tol"],
        )

    def policy(self) -> BerPolicy:
        return BerPolicy(self["ber.target"])

    def constellations(self) -> ConstellationSet:
        sizes = tuple(int(s) for s in str(self["constellations"]).split(",") if s.strip())
        return ConstellationSet(sizes=sizes)

    def mc(self, args) -> McConfig:
        workers = self["mc.workers"]
        env = os.environ.get("FSO_ADAPT_WORKERS")
        if env:
            workers = int(env)
        if getattr(args, "workers", None) is not None:
            workers = args.workers
        n = self["mc.n_samples"]
        if getattr(args, "samples", None) is not None:
            n = args.samples
        seed = self["mc.seed"]
        if getattr(args, "seed", None) is not None:
            seed = args.seed
        return McConfig(n_samples=n, seed=seed, workers=workers)

    def snr_grid(self):
        start, stop, step = (
            self["snr.start_db"],
            self["snr.stop_db"],
            self["snr.step_db"],
        )
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [start + i * step for i in range(n)]


def _write_csv(path: str | None, header: list[str], rows: list[list]):
    out = open(path, "w", newline="", encoding="utf-8") if path else sys.stdout
    try:
        writer = csv.writer(out)
        writer.writerow(header)
        writer.writerows(rows)
    finally:
        if path:
            out.close()


def _fmt(x: float, nd: int = 4) -> str:
    return f"{x:.{nd}f}"


# ---------------------------------------------------------------------------
# subcommands


def cmd_params(config: RunConfig, args) -> int:
    geom = config.geometry()
    sr2 = rytov_variance(geom)
    turb = gg_params(sr2)
    policy = config.policy()
    header = ["quantity", "value"]
    rows = [
        ["sigma_r2", _fmt(sr2)],
        ["alpha", _fmt(turb.alpha)],
        ["beta", _fmt(turb.beta)],
        ["k_margin", f"{policy.k_margin:.6f}"],
        ["model", "GG_POINTING" if config["pointing.enabled"] else "GG_ONLY"],
    ]
    if config["pointing.enabled"]:
        wl = beam_waist_at_rx(geom)
        pp = pointing_params(geom.rx_aperture_radius_m, wl, geom.jitter_sigma_m)
        rows[4:4] = [
            ["w_l_m", f"{wl:.6f}"],
            ["a0", _fmt(pp.a0)],
            ["xi", _fmt(pp.xi)],
        ]
    _write_csv(args.out or config["output.path"], header, rows)
    return EXIT_OK


def cmd_ase(config: RunConfig, args) -> int:
    model = config.channel_model()
    policy = config.policy()
    cfg = config.series()
    cset = config.constellations()
    mc_cfg = config.mc(args)
    header = [
        "snr_db",
        "ase_limit",
        "ase_discrete",
        "ase_mc",
        "ase_mc_stderr",
        "high_snr_approx",
    ]
    rows = []
    failures = 0
    for snr_db in config.snr_grid():
        snr = SnrSpec.from_db(snr_db)
        try:
            limit = ase_limit(snr, policy, model, cfg)
            disc = discrete_ase(snr, policy, model, cset, cfg)
            mc_mean, mc_se = estimate_ase_mc(snr, policy, model, mc_cfg, cutoff=limit.cutoff)
            approx = high_snr_ase(snr, policy, model)
            rows.append(
                [
                    f"{snr_db:.1f}",
                    _fmt(limit.ase_bits),
                    _fmt(disc.ase_bits),
                    _fmt(mc_mean),
                    f"{mc_se:.6f}",
                    _fmt(approx),
                ]
            )
        except (SolverBracketError, SingularOrderError) as exc:
            failures += 1
            rows.append([f"{snr_db:.1f}", "nan", "nan", "nan", "nan", "nan"])
            print(f"warning: {snr_db} dB failed: {exc}", file=sys.stderr)
    _write_csv(args.out or config["output.path"], header, rows)
    return EXIT_NUMERIC if failures else EXIT_OK


def cmd_required_snr(config: RunConfig, args) -> int:
    targets = [float(t) for t in args.targets.split(",")] if args.targets else [2, 4, 6, 8, 10]
    if any(t <= 0 for t in targets):
        raise ConfigError("targets must be positive")
    policy = config.policy()
    cfg = config.series()
    cases = []
    for pe in (False, True):
        for name, sr2 in (("weak", 0.4), ("strong", 2.0)):
            cases.append((f"{name}_{'pe' if pe else 'nope'}", sr2, pe))
    header = ["rb_bits"]
    for case, _, _ in cases:
        header += [f"fixed_{case}_db", f"adaptive_{case}_db"]
    rows = []
    for rb in targets:
        row = [f"{rb:g}"]
        for _, sr2, pe in cases:
            model = config.channel_model(sigma_r2=sr2, pointing=pe)
            fixed = fixed_required_snr(rb, policy.target_ber, model)
            adapt = adaptive_required_snr(rb, policy, model, cfg)
            row += [f"{fixed.snr_db:.1f}", f"{adapt.snr_db:.1f}"]
        rows.append(row)
    _write_csv(args.out or config["output.path"], header, rows)
    return EXIT_OK


def cmd_mc(config: RunConfig, args) -> int:
    model = config.channel_model()
    policy = config.policy()
    cset = config.constellations()
    mc_cfg = config.mc(args)
    header = [
        "snr_db",
        "ase_mc",
        "ase_mc_stderr",
        "ase_discrete_mc",
        "ase_discrete_mc_stderr",
        "power_audit_z_cont",
        "power_audit_z_disc",
    ]
    rows = []
    for snr_db in config.snr_grid():
        snr = SnrSpec.from_db(snr_db)
        sol_c = solve_cutoff_continuous(snr, policy, model)
        sol_d = solve_cutoff_discrete(snr, policy, model, cset)
        mean_c, se_c = estimate_ase_mc(snr, policy, model, mc_cfg, cutoff=sol_c.cutoff)
        mean_d, se_d = estimate_discrete_ase_mc(
            snr, policy, model, cset, mc_cfg, cutoff=sol_d.cutoff
        )
        audit_c = audit_power_constraint(snr, policy, model, sol_c, mc_cfg, "continuous")
        audit_d = audit_power_constraint(
            snr, policy, model, sol_d, mc_cfg, "discrete", cset
        )
        rows.append(
            [
                f"{snr_db:.1f}",
                _fmt(mean_c),
                f"{se_c:.6f}",
                _fmt(mean_d),
                f"{se_d:.6f}",
                f"{audit_c.z_score:.3f}",
                f"{audit_d.z_score:.3f}",
            ]
        )
    _write_csv(args.out or config["output.path"], header, rows)
    return EXIT_OK


_SIGMA_ROWS = (("weak", 0.4), ("moderate", 1.0), ("strong", 2.0))


def cmd_reproduce(config: RunConfig, args) -> int:
    artifact = args.artifact
    out = args.out or config["output.path"] or f"{artifact}.csv"
    policy = BerPolicy(1e-3)
    cfg = SeriesConfig(max_terms=20)
    if artifact == "table3":
        header = ["strength", "sigma_r2", "alpha", "beta", "xi", "a0"]
        rows = []
        for name, sr2 in _SIGMA_ROWS:
            geom = config.geometry(sr2)
            turb = gg_params(rytov_variance(geom))
            pp = pointing_params(
                geom.rx_aperture_radius_m, beam_waist_at_rx(geom), geom.jitter_sigma_m
            )
            rows.append(
                [name, f"{sr2:g}", _fmt(turb.alpha), _fmt(turb.beta), _fmt(pp.xi), _fmt(pp.a0)]
            )
        _write_csv(out, header, rows)
    elif artifact == "table2":
        args2 = argparse.Namespace(targets="2,4,6,8,10", out=out)
        return cmd_required_snr(config, args2)
    elif artifact in ("fig2", "fig3", "fig4"):
        rows = []
        if artifact == "fig2":
            header = ["config", "snr_db", "ase_limit", "ase_mc", "ase_mc_stderr"]
            cases = [
                (f"{name}_{'pe' if pe else 'nope'}", sr2, pe)
                for pe in (False, True)
                for name, sr2 in _SIGMA_ROWS
            ]
            mc_cfg = McConfig(n_samples=40_000, seed=config["mc.seed"], workers=1)
            for case, sr2, pe in cases:
                model = config.channel_model(sigma_r2=sr2, pointing=pe)
                for snr_db in range(0, 31):
                    snr = SnrSpec.from_db(float(snr_db))
                    limit = ase_limit(snr, policy, model, cfg)
                    mc_mean, mc_se = estimate_ase_mc(
                        snr, policy, model, mc_cfg, cutoff=limit.cutoff
                    )
                    rows.append(
                        [case, f"{snr_db}", _fmt(limit.ase_bits), _fmt(mc_mean), f"{mc_se:.6f}"]
                    )
        else:
            sr2 = 0.4 if artifact == "fig3" else 2.0
            header = ["config", "snr_db", "ase_limit", "ase_discrete"]
            cset = ConstellationSet()
            for pe in (False, True):
                case = f"{'pe' if pe else 'nope'}"
                model = config.channel_model(sigma_r2=sr2, pointing=pe)
                for snr_db in range(0, 31):
                    snr = SnrSpec.from_db(float(snr_db))
                    limit = ase_limit(snr, policy, model, cfg)
                    disc = discrete_ase(snr, policy, model, cset, cfg)
                    rows.append([case, f"{snr_db}", _fmt(limit.ase_bits), _fmt(disc.ase_bits)])
        _write_csv(out, header, rows)
    else:
        raise ConfigError(f"unknown artifact {artifact!r}")
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fso-adapt",
        description="Spectral-efficiency limits of adaptive MQAM over turbulent optical links",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="key=value config file")
        p.add_argument("--set", dest="overrides", action="append", metavar="KEY=VALUE")
        p.add_argument("--out", help="output CSV path (default: stdout)")
        p.add_argument("--seed", type=int)
        p.add_argument("--samples", type=int)
        p.add_argument("--workers", type=int)

    common(sub.add_parser("params", help="derived channel parameters"))
    common(sub.add_parser("ase", help="spectral-efficiency sweep over the SNR grid"))
    p = sub.add_parser("required-snr", help="required SNR for target efficiencies")
    common(p)
    p.add_argument("--targets", help="comma-separated bits/s/Hz targets")
    common(sub.add_parser("mc", help="Monte Carlo estimates and power audits"))
    p = sub.add_parser("reproduce", help="regenerate a published table or figure dataset")
    common(p)
    p.add_argument(
        "artifact", choices=["table2", "table3", "fig2", "fig3", "fig4"]
    )
    return parser


_COMMANDS = {
    "params": cmd_params,
    "ase": cmd_ase,
    "required-snr": cmd_required_snr,
    "mc": cmd_mc,
    "reproduce": cmd_reproduce,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = RunConfig.load(args.config, args.overrides)
        return _COMMANDS[args.command](config, args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverBracketError, SingularOrderError, ValueError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
