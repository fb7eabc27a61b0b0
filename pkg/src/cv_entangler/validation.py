"""Regression checks against the published results.

Each ``criterion_*`` function runs one check and returns a
:class:`CriterionResult`; :func:`run_all` runs them in order.  The test
suite and ``cv-entangler validate`` both use these functions, so a number
printed by one is the number checked by the other.
"""

import itertools
import math
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import gaussian as gs
from .certification import DATA_DIR, MeasuredCM, monte_carlo_eigs, read_cm
from .densecoding import (
    DecodingConfig,
    baseline_capacities,
    find_crossing,
    optimize_capacity,
    propagate,
    ubs,
)
from .oracle import sample_chain
from .protocols import A, Protocol, bipartitions, classify, pre_bs_state, protocol1_pre_bs, protocol_state

#: Published minimum PPT eigenvalues for ``J = {A}, {B}, {C}``.
TABLE_TARGETS = {
    "gamma1": (-0.022, 0.069, -0.022),
    "gamma2": (-0.144, 0.351, 0.528),
}
TABLE_TOL = 5e-4
AC_TARGETS = {"gamma1": (0.84, 5e-3), "gamma2": (9.371, 5e-4)}
MU_RS = tuple(round(0.1 * k, 10) for k in range(1, 21))
PATTERN_RS = (0.1, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0)
EXPECTED_PATTERNS = {
    Protocol.P1: ("A|BC", "C|AB"),
    Protocol.P2: ("A|BC",),
    Protocol.P3: ("A|BC",),
}
# (protocol, baseline, target, tolerance, bracket)
CROSSINGS = (
    (Protocol.P2, "coh", 0.36, 0.04, (0.05, 1.0)),
    (Protocol.P1, "coh", 0.44, 0.04, (0.05, 1.0)),
    (Protocol.P3, "sq", 11.28, 1.0, (5.0, 20.0)),
)
ORDER_GRID = tuple(np.linspace(0.05, 20.0, 30))
PROPERTY_TOL = 1e-12
ORACLE_PAIRS = 20
ORACLE_SAMPLES = 10**7
ORACLE_SIGNIFICANT = 3
INVARIANT_CASES = 120
MC_SIGMA = 0.0125
MC_DRAWS = 10**4
MC_TARGET = 1e-3
MC_FACTOR = 3.0
BUDGETS = {4: 1.0, 5: 300.0, 7: 120.0, 8: 30.0}


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    details: list
    seconds: float = 0.0
    budget: float = None

    def line(self, timing=False):
        text = f"[{'PASS' if self.passed else 'FAIL'}] {self.number}. {self.title}"
        return f"{text} ({self.seconds:.2f} s)" if timing else text


def _mark(ok):
    return "ok" if ok else "FAIL"


def load_fixtures(fixtures=None):
    """Read ``gamma1.cm`` and ``gamma2.cm`` from ``fixtures`` (default: packaged data)."""
    root = Path(fixtures) if fixtures is not None else DATA_DIR
    return {name: read_cm(root / f"{name}.cm") for name in ("gamma1", "gamma2")}


def criterion_1(fixtures=None):
    details, passed = [], True
    for name, measured in load_fixtures(fixtures).items():
        for mode, target in zip("ABC", TABLE_TARGETS[name]):
            lam = float(gs.min_eig_ppt(measured.cm, "ABC".index(mode)))
            ok = abs(lam - target) <= TABLE_TOL
            passed &= ok
            details.append(f"{name} J={{{mode}}}: {lam:+.5f} vs {target:+.3f} +- {TABLE_TOL} {_mark(ok)}")
    return passed, details


def criterion_2(fixtures=None):
    details, passed = [], True
    for name, measured in load_fixtures(fixtures).items():
        target, tol = AC_TARGETS[name]
        lam = float(gs.min_eig_ppt(gs.partial_trace(measured.cm, [0, 2]), 0))
        ok = abs(lam - target) <= tol
        passed &= ok
        details.append(f"{name} AC (T_A): {lam:.5f} vs {target} +- {tol} {_mark(ok)}")
    return passed, details


def mu_closed_form(r):
    return math.exp(-r) * (math.cosh(r) - (math.sqrt(5.0) - 2.0) * math.sinh(r))


def criterion_3(fixtures=None):
    mu_err = max(abs(gs.nonclassicality(protocol1_pre_bs(r)) - mu_closed_form(r)) for r in MU_RS)
    local_err = max(abs(gs.nonclassicality(gs.partial_trace(protocol1_pre_bs(r), [A])) - 1.0) for r in MU_RS)
    ok_mu, ok_local = mu_err <= 1e-10, local_err <= 1e-12
    return ok_mu and ok_local, [
        f"max |mu - closed form| over r = 0.1..2.0: {mu_err:.2e} {_mark(ok_mu)}",
        f"max |mu_A - 1|: {local_err:.2e} {_mark(ok_local)}",
    ]


def criterion_4(fixtures=None):
    details, passed = [], True
    for protocol, expected in EXPECTED_PATTERNS.items():
        found = {r: classify(protocol_state(protocol, r)).entangled for r in PATTERN_RS}
        ok = all(set(v) == set(expected) for v in found.values())
        passed &= ok
        patterns = sorted({", ".join(v) for v in found.values()})
        details.append(
            f"protocol {int(protocol)} post-BS entangled across {{{'; '.join(patterns)}}},"
            f" expected {{{', '.join(expected)}}} {_mark(ok)}"
        )
    worst = min(
        float(np.min([float(gs.min_eig_ppt(gs.partial_trace(pre_bs_state(p, r), kept), t)) for _, t, kept in bipartitions(3)]))
        for p in Protocol
        for r in PATTERN_RS
    )
    ok = worst >= -gs.PPT_TOL
    passed &= ok
    details.append(f"pre-BS states: smallest PPT eigenvalue {worst:+.3e} {_mark(ok)}")
    return passed, details


def criterion_5(fixtures=None):
    details, passed = [], True
    for protocol, baseline, target, tol, (lo, hi) in CROSSINGS:
        label = f"C{int(protocol)} over C_{baseline}"
        try:
            crossing = find_crossing(protocol, baseline, lo, hi)
        except ValueError as exc:
            passed = False
            details.append(f"{label}: {exc} FAIL")
            continue
        ok = abs(crossing.nbar - target) <= tol
        passed &= ok
        details.append(f"{label}: nbar = {crossing.nbar:.5f} vs {target} +- {tol} {_mark(ok)}")
        if not ok:
            for nbar, excess, res in crossing.trace:
                c = res.config
                details.append(
                    f"  nbar={nbar:.5f} excess={excess:+.3e} r={res.squeezing:.6f}"
                    f" t1={c.t1:+.6f} t2={c.t2:+.6f} g={c.g:+.6f} P={c.P:.6f}"
                )
    return passed, details


def criterion_6(fixtures=None):
    worst_order, worst_charlie = np.inf, -np.inf
    for nbar in ORDER_GRID:
        c1, c2, c3 = (optimize_capacity(p, nbar).capacity for p in Protocol)
        worst_order = min(worst_order, c3 - c2, c2 - c1)
        coh, _ = baseline_capacities(nbar)
        for p in Protocol:
            worst_charlie = max(worst_charlie, optimize_capacity(p, nbar, ignore_charlie=True).capacity - coh)
    coh1, sq1 = baseline_capacities(1.0)
    base_err = max(abs(coh1 - math.log(2.0)), abs(sq1 - math.log(3.0)))
    ok_order = worst_order >= -PROPERTY_TOL
    ok_charlie = worst_charlie <= PROPERTY_TOL
    ok_base = base_err <= 1e-12
    return ok_order and ok_charlie and ok_base, [
        f"min over grid of C3 - C2 and C2 - C1: {worst_order:+.3e} {_mark(ok_order)}",
        f"max over grid of C(ignore Charlie) - C_coh: {worst_charlie:+.3e} {_mark(ok_charlie)}",
        f"baseline error at nbar = 1: {base_err:.1e} {_mark(ok_base)}",
    ]


def oracle_pairs(seed=1, pairs=ORACLE_PAIRS):
    """Random ``(protocol, r, DecodingConfig)`` triples for the Monte Carlo comparison."""
    rng = np.random.default_rng(seed)
    out = []
    for k in range(pairs):
        protocol = Protocol(k % 3 + 1)
        r = rng.uniform(0.1, 1.5)
        t1, t2 = rng.uniform(-1.0, 1.0, size=2)
        config = DecodingConfig(t1=t1, t2=t2, g=rng.uniform(-2.0, 2.0), P=rng.uniform(0.1, 5.0))
        out.append((protocol, r, config))
    return out


def agrees_to_significant(actual, desired, significant):
    """True when ``np.testing.assert_approx_equal`` accepts the pair."""
    try:
        np.testing.assert_approx_equal(actual, desired, significant=significant)
    except AssertionError:
        return False
    return True


def criterion_7(fixtures=None, samples=ORACLE_SAMPLES, seed=1):
    details, passed = [], True
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(7,)))
    for protocol, r, config in oracle_pairs(seed):
        gamma = protocol_state(protocol, r)
        analytic = propagate(gamma, config)
        snr = analytic.signal_powers(config.P) / analytic.noise_powers(gamma)
        sampled = sample_chain(gamma, config.t1, config.t2, config.g, config.P, samples, rng).snr
        oks = [agrees_to_significant(s, a, ORACLE_SIGNIFICANT) for s, a in zip(sampled, snr)]
        passed &= all(oks)
        details.append(
            f"P{int(protocol)} r={r:.3f} t1={config.t1:+.3f} t2={config.t2:+.3f} g={config.g:+.3f}"
            f" P={config.P:.3f}: S/N x {snr[0]:.5g}/{sampled[0]:.5g}, p {snr[1]:.5g}/{sampled[1]:.5g}"
            f" {_mark(all(oks))}"
        )
    return passed, details


def random_symplectic(n, rng, depth=6):
    """Random product of squeezers, rotations, phase flips and (signed) splitters.

    Returns the product and the list of factors.
    """
    factors = []
    for _ in range(depth):
        kind = rng.integers(5) if n > 1 else rng.integers(3)
        mode = int(rng.integers(n))
        if kind == 0:
            factors.append(gs.squeezer(mode, rng.uniform(-1.0, 1.0), n, axis="xp"[rng.integers(2)]))
        elif kind == 1:
            factors.append(gs.rotation(mode, rng.uniform(0.0, 2.0 * np.pi), n))
        elif kind == 2:
            factors.append(gs.phase_flip(mode, n))
        else:
            i, j = (int(m) for m in rng.choice(n, size=2, replace=False))
            t = rng.uniform(0.0, 1.0) if kind == 3 else rng.uniform(-1.0, 1.0)
            factors.append(gs.beamsplitter(i, j, t, n) if kind == 3 else ubs(i, j, t, n))
    S = np.eye(2 * n)
    for F in factors:
        S = F @ S
    return S, factors


def random_state(n, rng):
    """Random physical CM: thermal modes, a random symplectic and classical noise."""
    thermal = np.diag(np.repeat(rng.uniform(1.0, 3.0, size=n), 2))
    S, _ = random_symplectic(n, rng)
    gamma = gs.apply_transform(thermal, S)
    return gs.inject_noise(gamma, rng.normal(size=2 * n), rng.uniform(0.0, 0.5))


def proper_subsets(n):
    for size in range(1, n):
        yield from itertools.combinations(range(n), size)


def criterion_8(fixtures=None, cases=INVARIANT_CASES, seed=8):
    rng = np.random.default_rng(seed)
    worst = {"symplectic": 0.0, "det": 0.0, "involution": 0.0, "physical": np.inf, "product": np.inf, "embedding": 0.0}
    for _ in range(cases):
        n = int(rng.integers(2, 5))
        omega = gs.symplectic_form(n)
        S, factors = random_symplectic(n, rng)
        for F in factors + [S]:
            worst["symplectic"] = max(worst["symplectic"], float(np.max(np.abs(F @ omega @ F.T - omega))))
            worst["det"] = max(worst["det"], abs(float(np.linalg.det(F)) - 1.0))

        gamma = random_state(n, rng)
        for J in proper_subsets(n):
            comp = [m for m in range(n) if m not in J]
            diff = abs(float(gs.min_eig_ppt(gamma, J)) - float(gs.min_eig_ppt(gamma, comp)))
            worst["involution"] = max(worst["involution"], diff)

        kept = sorted(int(m) for m in rng.choice(n, size=int(rng.integers(1, n + 1)), replace=False))
        images = [
            gs.apply_transform(gamma, S),
            gs.inject_noise(gamma, rng.normal(size=2 * n), rng.uniform(0.0, 1.0)),
            gs.tensor(gamma, random_state(1, rng)),
            gs.partial_trace(gamma, kept),
        ]
        worst["physical"] = min(worst["physical"], min(float(gs.min_symplectic_test(g)) for g in images))

        product = gs.tensor(*[random_state(1, rng) for _ in range(n)])
        worst["product"] = min(worst["product"], min(float(gs.min_eig_ppt(product, J)) for J in proper_subsets(n)))

        J = list(rng.choice(n, size=int(rng.integers(1, n)), replace=False))
        transposed = gs.partial_transpose(gamma, J)
        embedded = gs.hermitian_eigvals(transposed, omega)
        direct = np.linalg.eigvalsh(transposed + 1j * omega)
        worst["embedding"] = max(worst["embedding"], float(np.max(np.abs(embedded - direct))))

    checks = [
        ("max |S Omega S^T - Omega|", worst["symplectic"], worst["symplectic"] <= 1e-12),
        ("max |det S - 1|", worst["det"], worst["det"] <= 1e-9),
        ("max PPT involution mismatch", worst["involution"], worst["involution"] <= 1e-9),
        ("min eig(gamma + i Omega) after maps", worst["physical"], worst["physical"] >= -gs.PHYSICAL_TOL),
        ("min PPT eigenvalue of product states", worst["product"], worst["product"] >= -gs.PPT_TOL),
        ("max embedding vs complex eigensolve", worst["embedding"], worst["embedding"] <= 1e-10),
    ]
    details = [f"{cases} cases"] + [f"{name}: {value:+.3e} {_mark(ok)}" for name, value, ok in checks]
    return all(ok for *_, ok in checks), details


def criterion_9(fixtures=None, draws=MC_DRAWS, seed=1):
    gamma1 = load_fixtures(fixtures)["gamma1"]
    measured = MeasuredCM(gamma1.cm, sigma=np.full(gamma1.cm.shape, MC_SIGMA), label="gamma1")
    report = monte_carlo_eigs(measured, draws, seed)
    std = float(report.mc_std[0])
    lo, hi = MC_TARGET / MC_FACTOR, MC_TARGET * MC_FACTOR
    ok = lo <= std <= hi
    return ok, [f"std of lambda(T_A) with sigma {MC_SIGMA}: {std:.5f}, band [{lo:.5f}, {hi:.5f}] {_mark(ok)}"]


CRITERIA = (
    (1, "Table I minimum PPT eigenvalues", criterion_1),
    (2, "two-mode A-C checks", criterion_2),
    (3, "closed-form nonclassicality", criterion_3),
    (4, "separability patterns", criterion_4),
    (5, "capacity thresholds", criterion_5),
    (6, "capacity properties", criterion_6),
    (7, "Monte Carlo oracle equivalence", criterion_7),
    (8, "randomized invariant suite", criterion_8),
    (9, "Monte Carlo error propagation", criterion_9),
)


def run_criterion(number, fixtures=None, **options):
    """Run one criterion; runtime budgets count toward the verdict."""
    _, title, func = CRITERIA[number - 1]
    start = time.perf_counter()
    passed, details = func(fixtures, **options)
    seconds = time.perf_counter() - start
    budget = BUDGETS.get(number)
    if budget is not None and seconds >= budget:
        passed = False
        details.append(f"runtime exceeded the {budget:g} s budget FAIL")
    return CriterionResult(number, title, bool(passed), details, seconds, budget)


def run_all(fixtures=None, oracle_samples=ORACLE_SAMPLES, callback=None):
    """Run every criterion in order, calling ``callback(result)`` after each."""
    results = []
    for number, _, _ in CRITERIA:
        options = {"samples": oracle_samples} if number == 7 else {}
        result = run_criterion(number, fixtures, **options)
        if callback is not None:
            callback(result)
        results.append(result)
    return results


def format_result(result, verbose=True, timing=False):
    lines = [result.line(timing)]
    if verbose:
        lines += [f"    {d}" for d in result.details]
    return "\n".join(lines)
