"""Batch command-line front end.

Every command reads a YAML scenario, prints a key-value report and, with
``--out``, writes the report and any curves/tables into that directory.
Exit codes: 0 pass, 1 input error, 2 solver budget exhausted / unreachable,
3 a verification check or internal invariant failed.
"""

from __future__ import annotations

import functools
import sys
from pathlib import Path

import click
import numpy as np
import yaml

from . import ccmetric as cm
from . import homogeneity as hm
from .errors import CarnotError, ComparisonAborted, NotHorizontalError, StagnationError, UnreachableError
from .flow import FlowConfig, deviation_certificate, integrate_projected_field, speed_violations
from .geometry import (
    Domain,
    SampledCurve,
    ensure_lipschitz,
    horizontality_check,
    resolve_distribution,
    resolve_norm,
    subspace_distance,
)
from .io import (
    Scenario,
    as_point,
    curve_to_csv,
    format_report,
    load_scenario,
    read_curve_csv,
    table_to_csv,
)
from .smoothing import SmoothingConfig, circle_lift, smooth_horizontal_approximation
from .zigzag import ZigzagSpec, tangent_convergence_check, zigzag_curve

EXIT_OK, EXIT_INPUT, EXIT_BUDGET, EXIT_CHECK = 0, 1, 2, 3


class CheckFailed(Exception):
    """A verification threshold or invariant did not hold."""


def _one_line(exc) -> str:
    return " ".join(str(exc).split())


def _handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (UnreachableError, ComparisonAborted) as exc:
            click.echo(f"error: {_one_line(exc)}", err=True)
            sys.exit(EXIT_BUDGET)
        except (CheckFailed, StagnationError) as exc:
            click.echo(f"check failed: {_one_line(exc)}", err=True)
            sys.exit(EXIT_CHECK)
        except (CarnotError, ValueError, KeyError, TypeError, OSError) as exc:
            click.echo(f"error: {_one_line(exc)}", err=True)
            sys.exit(EXIT_INPUT)

    return wrapper


class Output:
    """Collects files and writes them once at the end of a command."""

    def __init__(self, out_dir):
        self.dir = Path(out_dir) if out_dir else None
        self.files: dict[str, str] = {}

    def add(self, name: str, text: str) -> None:
        self.files[name] = text

    def flush(self) -> None:
        if self.dir is None:
            return
        self.dir.mkdir(parents=True, exist_ok=True)
        for name, text in self.files.items():
            (self.dir / name).write_text(text)


def _scenario(path, seed) -> Scenario:
    sc = load_scenario(path)
    if seed is not None:
        sc.seed = seed
    return sc


def _domain(sc: Scenario, n: int) -> Domain:
    return sc.domain if sc.domain is not None else Domain.cube(n, 1.0, 16)


def _solver_config(sc: Scenario, section: dict) -> cm.CCSolverConfig:
    opts = dict(sc.sections.get("solver") or {})
    opts.update(section.get("solver") or {})
    if "penalty_schedule" in opts:
        opts["penalty_schedule"] = tuple(float(w) for w in opts["penalty_schedule"])
    opts["seed"] = sc.require_seed()
    try:
        return cm.CCSolverConfig(**opts)
    except TypeError as exc:
        raise ValueError(f"bad solver option: {exc}") from None


def _eps_list(text: str | None, section: dict):
    if text:
        return [float(e) for e in text.split(",") if e.strip()]
    if section.get("eps_list"):
        return [float(e) for e in section["eps_list"]]
    return None


def _load_curve(sc: Scenario, spec, D) -> SampledCurve:
    if not isinstance(spec, dict):
        raise ValueError("curve entry must be a mapping")
    if "csv" in spec:
        return read_curve_csv(sc.base_dir / spec["csv"])
    if "samples" in spec:
        data = np.asarray(spec["samples"], dtype=float)
        return SampledCurve(data[:, 0], data[:, 1:])
    kind = spec.get("builtin")
    if kind == "circle-lift":
        return circle_lift(float(spec.get("radius", 0.5)), float(spec.get("turns", 1.0)),
                           int(spec.get("samples", 4001)))
    if kind == "flow":
        p = as_point(spec["p"], D.n, "p")
        v = as_point(spec["v"], D.n, "v")
        T = float(spec.get("duration", 1.0))
        return integrate_projected_field(p, v, T, D, FlowConfig(float(spec.get("step", 1e-3)), max(T, 1.0)))
    raise ValueError(f"unknown curve source {spec}")


@click.group()
def main():
    """Numerical Carnot-Caratheodory geometry on a chart."""


# --------------------------------------------------------------------------
# ccdist
# --------------------------------------------------------------------------


@main.command()
@click.option("--scenario", "scenario_path", required=True, type=click.Path(dir_okay=False))
@click.option("--seed", type=click.IntRange(min=0), default=None)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None)
@_handle_errors
def ccdist(scenario_path, seed, out_dir):
    """Bracket the CC distance between two points."""
    sc = _scenario(scenario_path, seed)
    sec = sc.section("ccdist")
    D = resolve_distribution(sc.distribution)
    norm = resolve_norm(sc.norm)
    p = as_point(sec["p"], D.n, "p")
    q = as_point(sec["q"], D.n, "q")
    cfg = _solver_config(sc, sec)
    res = cm.cc_distance_upper(p, q, D, norm, cfg, sc.domain)
    lower = cm.cc_chord_lower(p, q, norm)
    hz = horizontality_check(res.path, D)
    rec = {
        "distribution": D.name,
        "p": p,
        "q": q,
        "lower": lower,
        "upper": res.value,
        "path_length": res.length,
        "endpoint_gap": res.gap,
        "best_restart": res.restart,
        "horizontality": hz.max_deviation,
        "seed": cfg.seed,
    }
    text = format_report({"ccdist": rec})
    click.echo(text, nl=False)
    out = Output(out_dir)
    out.add("ccdist_report.txt", text)
    if sec.get("path", True):
        out.add("ccdist_path.csv", curve_to_csv(res.path))
    out.flush()
    if lower > res.value + 1e-9:
        raise CheckFailed("lower bound exceeds upper bound")


# --------------------------------------------------------------------------
# smooth
# --------------------------------------------------------------------------


def _smooth_once(eta, D, sec, eps, dom):
    cfg = SmoothingConfig(eps, FlowConfig(float(sec.get("flow_step", 1e-3))),
                          float(sec.get("horizontality_tol", 1e-3)), dom)
    return smooth_horizontal_approximation(eta, D, cfg)


@main.command()
@click.option("--scenario", "scenario_path", required=True, type=click.Path(dir_okay=False))
@click.option("--seed", type=click.IntRange(min=0), default=None)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None)
@click.option("--eps-list", default=None, help="comma-separated window lengths for a sweep")
@_handle_errors
def smooth(scenario_path, seed, out_dir, eps_list):
    """Replace a horizontal curve by a piecewise integral curve with a certificate."""
    sc = _scenario(scenario_path, seed)
    sec = sc.section("smooth")
    D = resolve_distribution(sc.distribution)
    dom = _domain(sc, D.n)
    eta = _load_curve(sc, sec.get("curve"), D)
    out = Output(out_dir)
    eps_values = _eps_list(eps_list, sec)
    eps = float(sec.get("epsilon", eps_values[-1] if eps_values else 0.01))
    try:
        sigma, cert = _smooth_once(eta, D, sec, eps, dom)
    except NotHorizontalError as exc:
        rep = exc.report
        text = format_report({"horizontality": {
            "max_deviation": rep.max_deviation, "tolerance": exc.tol,
            "offending_segments": len(rep.offending), "first_offending": rep.offending[0]}})
        out.add("smooth_rejected.txt", text)
        out.flush()
        click.echo(text, nl=False)
        where = f" (report: {out.dir / 'smooth_rejected.txt'})" if out.dir else ""
        raise ValueError(f"input curve is not horizontal{where}") from None
    sections = {"certificate": cert.as_record()}
    out.add("smooth_sigma.csv", curve_to_csv(sigma))
    if eps_values:
        rows = []
        for e in eps_values:
            _, c = _smooth_once(eta, D, sec, e, dom)
            rows.append([e, c.n_windows, c.endpoint_error, c.predicted_error_bound, c.delta, c.speed_cap])
        out.add("smooth_sweep.csv", table_to_csv(
            ["epsilon", "n_windows", "endpoint_error", "predicted_error_bound", "delta", "speed_cap"], rows))
        errs = [r[2] for r in rows]
        sections["sweep"] = {
            "epsilons": [r[0] for r in rows],
            "endpoint_errors": errs,
            "monotone": all(b <= a for a, b in zip(errs, errs[1:])),
        }
    text = format_report(sections)
    out.add("smooth_certificate.txt", text)
    out.flush()
    click.echo(text, nl=False)
    # rounding in the flow leaves a residue even when the bound is exactly zero
    slack = 1e-10 * max(1.0, cert.length_input)
    if cert.endpoint_error > 2.0 * cert.predicted_error_bound + slack:
        raise CheckFailed("endpoint error exceeds twice the recursion bound")


# --------------------------------------------------------------------------
# zigzag
# --------------------------------------------------------------------------


@main.command()
@click.option("--scenario", "scenario_path", required=True, type=click.Path(dir_okay=False))
@click.option("--seed", type=click.IntRange(min=0), default=None)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None)
@click.option("--eps-list", default=None, help="comma-separated switch periods, decreasing")
@_handle_errors
def zigzag(scenario_path, seed, out_dir, eps_list):
    """Alternate generator flows and report convergence to the target line."""
    sc = _scenario(scenario_path, seed)
    sec = sc.section("zigzag")
    D = resolve_distribution(sc.distribution)
    spec = ZigzagSpec(
        as_point(sec.get("base_point", [0.0] * D.n), D.n, "base_point"),
        np.asarray(sec["generators"], dtype=float),
        np.asarray(sec["coefficients"], dtype=float),
        float(sec["epsilon"]),
        float(sec.get("duration", 1.0)),
        FlowConfig(float(sec.get("flow_step", 1e-3))),
    )
    curve = zigzag_curve(spec, D)
    out = Output(out_dir)
    out.add("zigzag_curve.csv", curve_to_csv(curve))
    sections = {"zigzag": {
        "epsilon": spec.epsilon,
        "duration": spec.duration,
        "endpoint": curve.end,
        "target_endpoint": spec.base_point + spec.duration * spec.target_velocity,
        "horizontality": horizontality_check(curve, D).max_deviation,
    }}
    passed = True
    eps_values = _eps_list(eps_list, sec)
    if eps_values:
        rep = tangent_convergence_check(spec, D, eps_values)
        out.add("zigzag_convergence.csv", table_to_csv(
            ["epsilon", "sup_deviation"], [[e, d] for e, d in zip(rep.epsilons, rep.deviations)]))
        sections["convergence"] = {"epsilons": rep.epsilons, "deviations": rep.deviations, "passed": rep.passed}
        passed = rep.passed
    text = format_report(sections)
    out.add("zigzag_report.txt", text)
    out.flush()
    click.echo(text, nl=False)
    if not passed:
        raise CheckFailed("zig-zag deviations did not converge")


# --------------------------------------------------------------------------
# flow
# --------------------------------------------------------------------------


@main.command()
@click.option("--scenario", "scenario_path", required=True, type=click.Path(dir_okay=False))
@click.option("--seed", type=click.IntRange(min=0), default=None)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None)
@_handle_errors
def flow(scenario_path, seed, out_dir):
    """Integrate a projected constant field and certify speed and quadratic deviation."""
    sc = _scenario(scenario_path, seed)
    sec = sc.section("flow")
    D = resolve_distribution(sc.distribution)
    dom = _domain(sc, D.n)
    p = as_point(sec["p"], D.n, "p")
    v = as_point(sec["v"], D.n, "v")
    T = float(sec.get("duration", 1.0))
    cfg = FlowConfig(float(sec.get("step", 1e-3)), max(T, 1.0))
    C = ensure_lipschitz(D, dom)
    gamma = integrate_projected_field(p, v, T, D, cfg, dom)
    dev = deviation_certificate(gamma, p, v, C, D)
    speed = float(np.linalg.norm(v))
    rec = {
        "distribution": D.name,
        "lipschitz_constant": C,
        "duration": gamma.duration,
        "exited_domain": gamma.meta["exited_domain"],
        "endpoint": gamma.end,
        "deviation_constant": dev.constant,
        "deviation_bound": dev.bound,
        "deviation_passed": dev.passed,
        "speed_violations": speed_violations(gamma, speed),
        "horizontality": horizontality_check(gamma, D).max_deviation,
    }
    text = format_report({"flow": rec})
    out = Output(out_dir)
    out.add("flow_curve.csv", curve_to_csv(gamma))
    out.add("flow_report.txt", text)
    out.flush()
    click.echo(text, nl=False)
    if not dev.passed or rec["speed_violations"]:
        raise CheckFailed("flow certificate failed")


# --------------------------------------------------------------------------
# verify
# --------------------------------------------------------------------------


def _oracle(name: str, cfg, norm, pushed):
    if name == "cc:pushforward":
        if pushed is None:
            raise ValueError("cc:pushforward needs a 'pushforward' section")
        return cm.cc_oracle(pushed, norm, cfg, name="cc:pushforward")
    return cm.resolve_oracle(name, cfg, norm)


@main.command()
@click.option("--scenario", "scenario_path", required=True, type=click.Path(dir_okay=False))
@click.option("--seed", type=click.IntRange(min=0), default=None)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None)
@_handle_errors
def verify(scenario_path, seed, out_dir):
    """Check homogeneity hypotheses of a family and compare the induced metrics."""
    sc = _scenario(scenario_path, seed)
    sec = sc.section("verify")
    seed_val = sc.require_seed()
    F = hm.resolve_family(sec.get("family", "heisenberg-left"))
    dom = _domain(sc, F.n)
    norm = resolve_norm(sc.norm)
    cfg = _solver_config(sc, sec)
    samp = dict(sec.get("sampling") or {})
    samp["seed"] = seed_val
    sampling = hm.SamplingConfig(**samp)
    thresholds = hm.Thresholds(**(sec.get("thresholds") or {}))
    metric = cm.resolve_oracle(sec.get("metric", "euclidean"), cfg, norm)

    sections = {}
    verdicts = {}
    rep = hm.check_family_hypotheses(F, metric, dom, sampling, thresholds)
    sections["hypotheses"] = {"family": F.name, "metric": metric.name, **rep.as_record()}
    verdicts["hypotheses"] = rep.passed
    env = hm.distortion_modulus(F, dom, sampling)
    sections["distortion"] = {"radii": env.radii, "envelope": env.envelope,
                              "quadratic_fit": env.quadratic_fit, "passed": env.passed}
    verdicts["distortion"] = env.passed

    pushed = None
    if "pushforward" in sec:
        pf = sec["pushforward"] or {}
        delta0 = np.asarray(pf.get("delta0", np.eye(F.n)[:2]), dtype=float)
        pushed = hm.push_forward_distribution(F, delta0)
        rec = {"rank": pushed.k}
        if pf.get("reference"):
            ref = resolve_distribution(pf["reference"])
            pts = dom.sample(np.random.default_rng(seed_val), int(pf.get("samples", 50)))
            gap = float(np.max(subspace_distance(pushed.frame_at(pts), ref.frame_at(pts))))
            tol = float(pf.get("tol", 1e-6))
            rec.update({"reference": ref.name, "max_subspace_distance": gap, "passed": gap <= tol})
            verdicts["pushforward"] = gap <= tol
        sections["pushforward"] = rec

    if "compare" in sec:
        c = sec["compare"]
        d1 = _oracle(c.get("d1", "cc:pushforward"), cfg, norm, pushed)
        d2 = _oracle(c.get("d2", "euclidean"), cfg, norm, pushed)
        br = cm.compare_metrics(d1, d2, dom, int(c.get("n_pairs", 30)), float(c.get("min_sep", 0.3)), seed_val)
        rec = br.as_record()
        if "L_max" in c:
            rec["passed"] = br.L_emp <= float(c["L_max"])
            verdicts["compare"] = rec["passed"]
        sections["compare"] = rec

    if "chain" in sec:
        ch = sec["chain"]
        cr = hm.chain_transport(F, as_point(ch["p"], F.n, "chain.p"), float(ch.get("R", 0.8)), metric, rep.k_emp)
        sections["chain"] = {"N_p": cr.N_p, "step_bound": cr.step_bound, "d_length_bound": cr.d_length_bound,
                             "endpoint": cr.endpoints[-1], "passed": cr.passed}
        verdicts["chain"] = cr.passed

    sections["verdict"] = {**verdicts, "all_passed": all(verdicts.values())}
    text = format_report(sections)
    out = Output(out_dir)
    out.add("verify_report.txt", text)
    out.flush()
    click.echo(text, nl=False)
    if not all(verdicts.values()):
        failed = ", ".join(k for k, v in verdicts.items() if not v)
        raise CheckFailed(f"failed: {failed}")


# --------------------------------------------------------------------------
# fixtures
# --------------------------------------------------------------------------


@main.group()
def fixtures():
    """Reference values derived by running the pipelines."""


@fixtures.command("regenerate")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), required=True)
@click.option("--seed", type=click.IntRange(min=0), default=0)
@_handle_errors
def fixtures_regenerate(out_dir, seed):
    """Recompute the derived fixture values and write ``fixtures.yaml``."""
    from .fixtures import compute_fixtures

    data = compute_fixtures(seed)
    out = Output(out_dir)
    out.add("fixtures.yaml", yaml.safe_dump(data, sort_keys=True))
    out.flush()
    click.echo(f"wrote {len(data)} fixture groups to {Path(out_dir) / 'fixtures.yaml'}")


if __name__ == "__main__":  # pragma: no cover
    main()
