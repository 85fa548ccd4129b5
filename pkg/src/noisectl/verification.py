"""Acceptance suite: analytic spot checks plus the full figure sweep.

Each criterion is a standalone function returning a ``CriterionResult``;
``run_all`` executes them in order and prints one PASS/FAIL line per
criterion. The figure sweep re-simulates every simulation panel at a fixed
verification seed and compares the observed convergence/trapping fractions
against the reference table shipped in ``data/figure_reference.json``
(recorded once from an independent pinned seed), with +-0.1 tolerance.

Regenerate the reference table after intentional engine changes with:

    python -m noisectl.verification --write-reference
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .analysis import empirical_eta
from .control import (
    Constant,
    DestabilizeK,
    DestabilizeZero,
    DiscreteBound,
    StabilizeK,
    StabilizeZero,
    check_destabilize,
    check_stabilize_zero,
    check_trap,
)
from .distributions import (
    DiscreteUniform,
    PiecewiseUniform,
    PolynomialSymmetric,
    log_gain_eta,
)
from .engine import EngineOptions, run_ensemble
from .maps import (
    Logistic,
    ModifiedBevertonHolt,
    PiecewiseBH,
    Ricker,
    fixed_points,
    shifted_bound,
)
from .reporting import write_summary_csv

__all__ = ["CriterionResult", "run_all", "CRITERIA", "figure_panels", "run_panel"]

REFERENCE_SEED = 20180811
VERIFY_SEED = 909090913

_ETA_UNIFORM = 1.0 - math.log(2.0)


@dataclass(frozen=True)
class CriterionResult:
    criterion: int
    passed: bool
    details: str
    elapsed: float

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"criterion {self.criterion:2d}: {tag}  [{self.elapsed:6.2f}s]  {self.details}"


def _result(criterion: int, checks: list[tuple[bool, str]], t0: float) -> CriterionResult:
    passed = all(ok for ok, _ in checks)
    details = "; ".join(msg for _, msg in checks)
    return CriterionResult(criterion, passed, details, time.time() - t0)


# ---------------------------------------------------------------------------
# MBH trap geometry (shared by criteria 7 and the sweep)
# ---------------------------------------------------------------------------

def mbh_trap() -> tuple[float, float, float]:
    """(b, d, F(d)) for the modified Beverton-Holt trap, d = max of F by grid search."""
    m = ModifiedBevertonHolt()
    xs = np.linspace(0.0, 10.0, 100_001)
    vals = np.array([m.F(float(x)) for x in xs])
    i = int(np.argmax(vals))
    from scipy.optimize import minimize_scalar

    res = minimize_scalar(lambda t: -m.F(float(t)), bounds=(xs[max(i - 1, 0)], xs[i + 1]),
                          method="bounded", options={"xatol": 1e-12})
    d = float(res.x)
    f_max = float(-res.fun)
    return 2.0, f_max, m.F(f_max)


# ---------------------------------------------------------------------------
# Criteria 1-9
# ---------------------------------------------------------------------------

def criterion_1() -> CriterionResult:
    """Closed-form eta for s=3, sigma=1, and its Monte Carlo confirmation."""
    t0 = time.time()
    expected = 1.0 + 1.0 / 3.0 + 1.0 / 5.0 + 1.0 / 7.0 - math.log(2.0)
    eta = log_gain_eta(PolynomialSymmetric(3), 1.0)
    est = empirical_eta(PolynomialSymmetric(3), 1.0, n_samples=10 ** 6, seed=VERIFY_SEED)
    elapsed = time.time() - t0
    checks = [
        (abs(eta - expected) < 1e-12, f"eta = {eta:.10f} (closed form {expected:.10f})"),
        (round(eta, 3) == 0.983, "matches 0.983 to 3 decimals"),
        (abs(est.mean - eta) < 4.0 * est.stderr,
         f"MC mean {est.mean:.5f} within 4 SE ({4 * est.stderr:.5f}) of eta"),
        (elapsed < 1.0, f"runtime {elapsed:.2f}s < 1s"),
    ]
    return _result(1, checks, t0)


def criterion_2() -> CriterionResult:
    """Stabilization of zero for the Ricker map below the eta threshold."""
    t0 = time.time()
    noise = PolynomialSymmetric(3)
    opts = EngineOptions(eps_conv=1e-6, window=50)
    summary = run_ensemble(StabilizeZero(1.0), Ricker(0.94), noise, 0.5, 2000, 100,
                           VERIFY_SEED, options=opts)
    report_hi = check_stabilize_zero(Ricker(0.99), (0.0, 10.0), noise, 1.0)
    elapsed = time.time() - t0
    checks = [
        (summary.convergence_fraction >= 0.99,
         f"r=0.94 convergence fraction {summary.convergence_fraction:.3f} >= 0.99"),
        (not report_hi.satisfied,
         f"r=0.99 flagged unsatisfied (margin {report_hi.margin:.4f})"),
        (elapsed < 5.0, f"runtime {elapsed:.2f}s < 5s"),
    ]
    return _result(2, checks, t0)


def criterion_3() -> CriterionResult:
    """Bernoulli vs 6-state noise on the logistic map at sigma = 0.865."""
    t0 = time.time()
    opts = EngineOptions(eps_conv=1e-4, window=50)
    frac = {}
    for l in (1, 3):
        s = run_ensemble(StabilizeZero(0.865), Logistic(2.0), DiscreteUniform(l),
                         0.5, 2000, 100, VERIFY_SEED, options=opts)
        frac[l] = s.convergence_fraction
    eta1 = log_gain_eta(DiscreteUniform(1), 0.865)
    eta3 = log_gain_eta(DiscreteUniform(3), 0.865)
    ln2 = math.log(2.0)
    checks = [
        (frac[1] >= 0.95, f"l=1 convergence fraction {frac[1]:.3f} >= 0.95"),
        (frac[3] <= 0.05, f"l=3 convergence fraction {frac[3]:.3f} <= 0.05"),
        (abs(eta1 - 0.6896) < 5e-4, f"eta(l=1) = {eta1:.4f} ~ 0.6896"),
        (eta1 < ln2, f"eta(l=1) < ln 2 = {ln2:.4f}: sufficient condition marginally fails"),
        (abs(eta3 - 0.2872) < 5e-4, f"eta(l=3) = {eta3:.4f} ~ 0.2872"),
        (eta3 < ln2 - 0.4, "eta(l=3) fails decisively"),
    ]
    return _result(3, checks, t0)


def criterion_4() -> CriterionResult:
    """Stabilize-K boundaries from bisection on ln calH = eta (uniform noise).

    As specified this criterion pins calH(Ricker, r=2.3068) = e^eta and the
    logistic boundary r = 3.3484, neither of which the numeric supremum of
    the shifted per-capita map reproduces (see the acceptance analysis in
    the test suite); the checks are asserted as stated and report the
    measured values.
    """
    t0 = time.time()
    eta = _ETA_UNIFORM
    target = math.exp(eta)

    calh_ricker = shifted_bound(Ricker(2.3068), 1.0, n_grid=20_001).numeric_sup

    def log_calh_logistic(r: float) -> float:
        return math.log(shifted_bound(Logistic(r), 1.0 - 1.0 / r, n_grid=20_001).numeric_sup)

    lo, hi = 2.05, 5.0
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        if log_calh_logistic(mid) < eta:
            lo = mid
        else:
            hi = mid
    r_logistic = 0.5 * (lo + hi)
    elapsed = time.time() - t0
    checks = [
        (abs(calh_ricker - target) <= 1e-3,
         f"numeric calH(Ricker, r=2.3068) = {calh_ricker:.4f} vs e^eta = {target:.4f} (tol 1e-3)"),
        (abs(r_logistic - 3.3484) <= 5e-3,
         f"logistic boundary by bisection = {r_logistic:.4f} vs 3.3484 (tol 5e-3)"),
        (elapsed < 10.0, f"runtime {elapsed:.2f}s < 10s"),
    ]
    return _result(4, checks, t0)


def criterion_5() -> CriterionResult:
    """Numeric and formula bounds of the shifted Ricker map."""
    t0 = time.time()
    sb3 = shifted_bound(Ricker(3.0), 1.0)
    sb1 = shifted_bound(Ricker(1.0), 1.0)
    checks = [
        (abs(sb3.numeric_sup - 2.4925) <= 5e-3,
         f"r=3 numeric sup {sb3.numeric_sup:.4f} ~ 2.4925"),
        (abs(sb1.numeric_sup - 1.0) <= 1e-3,
         f"r=1 numeric sup {sb1.numeric_sup:.4f} ~ 1.0"),
        (abs(sb3.paper_bound - 3.0) < 1e-9 and abs(sb1.paper_bound - 3.0) < 1e-9,
         "formula bound = 3 in both cases"),
        (sb3.paper_bound >= sb3.numeric_sup and sb1.paper_bound >= sb1.numeric_sup,
         "formula bound dominates"),
    ]
    return _result(5, checks, t0)


@dataclass(frozen=True)
class _ConstMap:
    """Constant per-capita rate, for oracle tests of the destabilization check."""

    c: float

    def f(self, x: float) -> float:
        return self.c

    def f_prime(self, x: float) -> float:
        return 0.0

    def F(self, x: float) -> float:
        return x * self.c

    @property
    def working_interval(self) -> tuple[float, float]:
        return (0.0, 1.0)


def criterion_6() -> CriterionResult:
    """check_destabilize at alpha=1 flips exactly at the Bernoulli bound."""
    t0 = time.time()
    noise = DiscreteUniform(1)
    disagreements = []
    f_values = np.linspace(0.0, 2.0, 10)
    factors = np.array([0.85, 0.9, 0.95, 0.99, 1.01, 1.05, 1.1, 1.2, 1.5, 2.0])
    for fv in f_values:
        bound = (1.0 + math.sqrt(1.0 + 4.0 * fv * fv)) / 2.0
        for fac in factors:
            sigma = bound * fac
            got = bool(check_destabilize(_ConstMap(float(fv)), (0.0, 1.0), noise,
                                         Constant(float(sigma)), alpha_grid=[1.0],
                                         n_grid=8))
            want = sigma > bound
            if got != want:
                disagreements.append((float(fv), float(sigma)))
    checks = [
        (not disagreements,
         f"100-point (f, sigma) grid: {len(disagreements)} disagreements with the closed-form bound"),
    ]
    return _result(6, checks, t0)


def criterion_7() -> CriterionResult:
    """Truncated destabilizing noise drives every run into the trap [b, d]."""
    t0 = time.time()
    b, d, f_of_max = mbh_trap()
    noise = DiscreteUniform(1)
    scheme = DestabilizeZero(DiscreteBound(1, margin=0.01), truncation_b=b, clamp=True)
    opts = EngineOptions(trap=(b, d))
    total = trapped = violations = 0
    for j, x0 in enumerate((0.05, 0.1, 0.3)):
        summary, trajs = run_ensemble(scheme, ModifiedBevertonHolt(), noise, x0,
                                      10 ** 4, 100, VERIFY_SEED + j,
                                      options=opts, return_trajectories=True)
        total += len(trajs)
        trapped += sum(1 for t in trajs if t.status.value == "trapped")
        violations += sum(t.trap_violations for t in trajs)
    trap_report = check_trap(ModifiedBevertonHolt(), b, d)
    checks = [
        (trapped == total, f"trapped fraction {trapped}/{total} = 1.0"),
        (violations == 0, f"{violations} post-entry violations of [b, d]"),
        (abs(d - 4.73736) <= 1e-3, f"F_max = {d:.5f} ~ 4.73736 (grid search)"),
        (abs(f_of_max - 2.8320) <= 1e-3, f"F(F_max) = {f_of_max:.5f} ~ 2.8320"),
        (trap_report.invariant and trap_report.f_positive, "F-invariance of [b, d] holds"),
    ]
    return _result(7, checks, t0)


def criterion_8() -> CriterionResult:
    """Fixed-point catalogs of the two Beverton-Holt-type maps."""
    t0 = time.time()
    mbh = fixed_points(ModifiedBevertonHolt(), 0.5, 10.0)
    pbh = fixed_points(PiecewiseBH(), -0.5, 10.0)
    mbh_xs = [round(p.x, 9) for p in mbh]
    pbh_xs = [round(p.x, 9) for p in pbh]
    d4 = next((p.F_prime for p in mbh if abs(p.x - 4.0) < 1e-6), math.nan)
    stable = sorted(round(p.x) for p in pbh if p.stable)
    checks = [
        (mbh_xs == [2.0, 4.0], f"MBH fixed points {mbh_xs} == [2, 4]"),
        (abs(d4 - (-5.0 / 3.0)) <= 1e-6, f"F'(4) = {d4:.8f} ~ -5/3"),
        (pbh_xs == [0.0, 1.0, 3.0, 5.0, 7.0], f"PBH fixed points {pbh_xs}"),
        (stable == [0, 3], f"stable PBH fixed points {stable} == [0, 3]"),
    ]
    return _result(8, checks, t0)


def criterion_9(tmp_dir: str | Path | None = None) -> CriterionResult:
    """Bit-identical summary.csv at parallelism 1 and 8."""
    import tempfile

    t0 = time.time()
    tmp = Path(tmp_dir) if tmp_dir else Path(tempfile.mkdtemp(prefix="noisectl_crit9_"))
    opts = EngineOptions(eps_conv=1e-6, window=50)
    blobs = []
    for hint in (1, 8):
        s = run_ensemble(StabilizeZero(1.0), Ricker(0.96), PolynomialSymmetric(3),
                         0.5, 1000, 64, VERIFY_SEED, thread_hint=hint, options=opts)
        path = tmp / f"summary_threads{hint}.csv"
        write_summary_csv(path, [s.to_row()])
        blobs.append(path.read_bytes())
    checks = [
        (blobs[0] == blobs[1],
         f"summary.csv identical at thread_hint 1 and 8 ({len(blobs[0])} bytes)"),
    ]
    return _result(9, checks, t0)


# ---------------------------------------------------------------------------
# Figure sweep (criterion 10)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Panel:
    id: str
    scheme: object
    map_spec: object
    noise: object
    x0: float
    options: EngineOptions
    n_steps: int = 2000
    n_runs: int = 200


def figure_panels() -> list[Panel]:
    """All simulation panels of the reproduced figures, desk scale.

    Panels whose reference fraction sits well inside (0, 1) get 800 runs
    instead of 200 so that two independent seeds agree within the sweep's
    +-0.1 tolerance with ample margin.
    """
    panels: list[Panel] = []
    eps6 = EngineOptions(eps_conv=1e-6, window=50)
    eps4 = EngineOptions(eps_conv=1e-4, window=50)
    BIG = 800

    for r in (0.94, 0.96, 0.98):
        panels.append(Panel(f"fig1_r{r}", StabilizeZero(1.0), Ricker(r),
                            PolynomialSymmetric(3), 0.5, eps6))
    for l in (1, 2, 3):
        panels.append(Panel(f"fig2_l{l}", StabilizeZero(0.865), Logistic(2.0),
                            DiscreteUniform(l), 0.5, eps4))
    for r, runs in ((2.3, BIG), (2.4, 200), (2.5, 200)):
        panels.append(Panel(f"fig3_r{r}", StabilizeK(1.0, 1.0), Ricker(r),
                            PolynomialSymmetric(0), 0.5, eps4, n_runs=runs))
    for r in (3.345, 3.3483, 3.35):
        panels.append(Panel(f"fig4_r{r}", StabilizeK(1.0 - 1.0 / r, 1.0), Logistic(r),
                            PolynomialSymmetric(0), 0.5, eps4, n_runs=BIG))
    for l in (2, 3, 4):
        panels.append(Panel(f"fig5_l{l}", StabilizeK(0.75, 1.05), Logistic(4.0),
                            DiscreteUniform(l), 0.5, eps4))
    for l, runs in ((4, 200), (6, BIG), (10, BIG)):
        panels.append(Panel(f"fig6_l{l}", StabilizeK(4.0, 1.05), ModifiedBevertonHolt(),
                            DiscreteUniform(l), 0.5, eps4, n_runs=runs))
    for l in (2, 6):
        panels.append(Panel(f"fig7_l{l}", StabilizeK(1.0, 0.7), Ricker(2.1),
                            PiecewiseUniform(l, 0.02), 0.5, eps4, n_runs=BIG))
    panels.append(Panel("fig7_nonoise", StabilizeK(1.0, 0.0), Ricker(2.1),
                        PiecewiseUniform(2, 0.02), 0.5, eps4))

    b, d, _ = mbh_trap()
    trap4 = EngineOptions(eps_conv=1e-4, window=50, trap=(b, d))
    for sigma, runs in ((1.2, 200), (1.4, BIG), (1.6, 200)):
        panels.append(Panel(f"fig8_s1_sig{sigma}",
                            DestabilizeZero(Constant(sigma), truncation_b=b, clamp=True),
                            ModifiedBevertonHolt(), PolynomialSymmetric(1), 0.1, trap4,
                            n_runs=runs))
    for sigma, runs in ((1.1, 200), (1.15, BIG), (1.2, 200)):
        panels.append(Panel(f"fig9_s4_sig{sigma}",
                            DestabilizeZero(Constant(sigma), truncation_b=b, clamp=True),
                            ModifiedBevertonHolt(), PolynomialSymmetric(4), 0.1, trap4,
                            n_runs=runs))
    for l in (1, 3, 4):
        panels.append(Panel(f"fig10_l{l}",
                            DestabilizeZero(DiscreteBound(l, margin=0.01), truncation_b=b, clamp=True),
                            ModifiedBevertonHolt(), DiscreteUniform(l), 0.3, trap4))

    for sigma, runs in ((1.2, 200), (1.8, BIG), (1.9, BIG)):
        panels.append(Panel(f"fig11_sig{sigma}",
                            DestabilizeK(3.0, Constant(sigma), window=(-math.inf, 4.0)),
                            PiecewiseBH(), DiscreteUniform(2), 0.8, eps4, n_runs=runs))
    for p, q in ((1.0, 4.0), (1.5, 3.5), (2.2, 3.8), (2.5, 3.5)):
        panels.append(Panel(f"fig12_w{p}_{q}",
                            DestabilizeK(3.0, Constant(1.9), window=(p, q)),
                            PiecewiseBH(), DiscreteUniform(2), 2.0, eps4, n_runs=BIG))
    return panels


def run_panel(panel: Panel, master_seed: int) -> dict:
    summary = run_ensemble(panel.scheme, panel.map_spec, panel.noise, panel.x0,
                           panel.n_steps, panel.n_runs, master_seed,
                           options=panel.options)
    return {
        "convergence_fraction": summary.convergence_fraction,
        "trapped_fraction": summary.trapped_fraction,
    }


def _reference_path() -> Path:
    return Path(str(resources.files("noisectl").joinpath("data/figure_reference.json")))


def load_reference() -> dict:
    with open(_reference_path()) as fh:
        return json.load(fh)


def write_reference(path: str | Path | None = None, seed: int = REFERENCE_SEED) -> dict:
    """Regenerate the pinned-seed reference table for the figure sweep."""
    table = {
        "reference_seed": seed,
        "tolerance": 0.1,
        "panels": {p.id: run_panel(p, seed) for p in figure_panels()},
    }
    out = Path(path) if path else _reference_path()
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(table, indent=2, sort_keys=True) + "\n")
    return table


def criterion_10(budget_used: float = 0.0) -> CriterionResult:
    """Figure sweep against the pinned-seed reference, and the time budget."""
    t0 = time.time()
    ref = load_reference()
    tol = float(ref.get("tolerance", 0.1))
    failures = []
    for panel in figure_panels():
        got = run_panel(panel, VERIFY_SEED)
        want = ref["panels"][panel.id]
        for key in ("convergence_fraction", "trapped_fraction"):
            if abs(got[key] - want[key]) > tol:
                failures.append(f"{panel.id}.{key}: {got[key]:.2f} vs ref {want[key]:.2f}")
    elapsed = time.time() - t0
    total = budget_used + elapsed
    checks = [
        (not failures,
         f"{len(figure_panels())} panels within +-{tol} of the reference"
         + ("" if not failures else ": " + "; ".join(failures[:6]))),
        (total < 120.0, f"verification runtime {total:.1f}s < 120s"),
    ]
    return _result(10, checks, t0)


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9]


def run_all(stream=None) -> list[CriterionResult]:
    """Run criteria 1-10 in order, printing one PASS/FAIL line per criterion."""
    import sys

    out = stream or sys.stdout
    t_start = time.time()
    results = []
    for fn in CRITERIA:
        res = fn()
        results.append(res)
        print(res.line(), file=out, flush=True)
    res10 = criterion_10(budget_used=time.time() - t_start)
    results.append(res10)
    print(res10.line(), file=out, flush=True)
    n_pass = sum(1 for r in results if r.passed)
    print(f"{n_pass}/{len(results)} criteria passed in {time.time() - t_start:.1f}s",
          file=out, flush=True)
    return results


def main(argv=None) -> int:
    import argparse

    parser = argparse.ArgumentParser(prog="noisectl.verification")
    parser.add_argument("--write-reference", action="store_true",
                        help="regenerate data/figure_reference.json from the pinned seed")
    parser.add_argument("--reference-path", default=None)
    args = parser.parse_args(argv)
    if args.write_reference:
        table = write_reference(args.reference_path)
        print(f"wrote reference table with {len(table['panels'])} panels")
        return 0
    results = run_all()
    return 0 if all(r.passed for r in results) else 1


if __name__ == "__main__":
    raise SystemExit(main())
