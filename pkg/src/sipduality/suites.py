"""Verification suites run by the command-line driver.

Each suite takes a :class:`Scenario` and returns check records plus optional
tables.  All randomness flows from the scenario seed through
:class:`RngStream`, one stream id per check, so records are reproducible.
"""
from __future__ import annotations

import time
from math import factorial
from typing import Callable

import numpy as np
import scipy.sparse as sp
from scipy import stats

from .fock import CapacityError, TruncatedSpace, inner_product, rising_factorial
from .meixner import (
    HYPERGEOMETRIC_MAX_DEGREE,
    MeixnerParams,
    generating_function,
    generating_partial_sum,
    meixner_M,
    meixner_monic,
    monic_by_recurrence,
)
from .operators import build_k_minus, build_k_plus, build_k_zero, commutator, respects_shift, weighted_adjoint
from .pascal import (
    McEstimate,
    RngStream,
    check_laplace,
    check_papangelou,
    goodness_of_fit,
    papangelou_battery,
    sample_pascal_compound,
    sample_pascal_direct,
    two_sample_chisquare,
)
from .scenario import CheckRecord, Scenario, Table
from .sip import (
    RateKernel,
    build_generator,
    build_generator_algebraic,
    check_conservative_factorials,
    check_consistency,
    check_detailed_balance,
    expected_jumps,
    gillespie_final_states,
    gillespie_simulate,
    sector_generators,
    semigroup_matrix,
)
from .unitary import (
    DENSE_LIMIT,
    MobiusAction,
    apply_blocks,
    UnitaryParams,
    apply_theorem_check,
    block_semigroup,
    build_unitary,
    check_exponential_transform,
    check_intertwining,
    check_symmetry,
    exponential_state,
    exponential_state_norm_sq,
    k_transform,
    mobius_transform,
    multiplier,
    weighted_unitarity_defect,
)

__all__ = ["SUITE_RUNNERS", "run_suite", "perturbed_generators"]


class _Recorder:
    def __init__(self, suite: str, scenario: Scenario):
        self.suite = suite
        self.scenario = scenario
        self.records: list[CheckRecord] = []
        self.tables: dict[str, Table] = {}

    def check(self, name: str, anchor: str, threshold: str | float, comparison: str = "le"):
        """``rec.check(...)(fn)`` runs ``fn`` and records the outcome.

        ``threshold`` is a key into the scenario thresholds or a literal
        value.  ``fn`` returns a statistic or ``(statistic, coverage, n_max)``.
        """
        if isinstance(threshold, str):
            threshold = self.scenario.thresholds[threshold]
        threshold = float(threshold)

        def run(fn: Callable):
            start = time.perf_counter()
            out = fn()
            elapsed = time.perf_counter() - start
            coverage = n_max = None
            if isinstance(out, tuple):
                out, coverage, n_max = out
                coverage, n_max = float(coverage), int(n_max)
            stat = float(out)
            self.records.append(
                CheckRecord(
                    suite=self.suite,
                    name=name,
                    anchor=anchor,
                    statistic=stat,
                    threshold=threshold,
                    comparison=comparison,
                    passed=CheckRecord.judge(stat, threshold, comparison),
                    runtime=elapsed,
                    coverage=coverage,
                    n_max=n_max,
                )
            )
            return out

        return run


def _complex_pair(gen: np.random.Generator, m: int):
    return gen.normal(size=m) + 1j * gen.normal(size=m), gen.normal(size=m) + 1j * gen.normal(size=m)


def commutation_residuals(ts: TruncatedSpace, phi, theta) -> tuple[float, float, float]:
    """Entrywise residuals of the three commutation relations below the top sector.

    ``[k-(phi), k+(theta)] = 2 k0(conj(phi) theta)``,
    ``[k0(theta), k+(phi)] = k+(phi theta)``,
    ``[k0(theta), k-(phi)] = -k-(phi conj(theta))``.
    """
    top = ts.n_max - 1
    r1 = commutator(build_k_minus(ts, phi), build_k_plus(ts, theta)) - 2 * build_k_zero(ts, np.conj(phi) * theta)
    r2 = commutator(build_k_zero(ts, theta), build_k_plus(ts, phi)) - build_k_plus(ts, phi * theta)
    r3 = commutator(build_k_zero(ts, theta), build_k_minus(ts, phi)) + build_k_minus(ts, phi * np.conj(theta))
    return tuple(float(np.max(np.abs(r.block(ts, top)), initial=0.0)) for r in (r1, r2, r3))


def adjointness_violation(ts: TruncatedSpace, f, g, phi) -> float:
    """``|<f, k+ g> - <k- f, g>|`` relative to ``||f|| ||k+ g|| + ||k- f|| ||g||``."""
    kp = build_k_plus(ts, phi)
    km = build_k_minus(ts, phi)
    kpg = kp @ g
    kmf = km @ f
    lhs = inner_product(ts, f, kpg)
    rhs = inner_product(ts, kmf, g)

    def nrm(v):
        return np.sqrt(abs(inner_product(ts, v, v)))

    scale = nrm(f) * nrm(kpg) + nrm(kmf) * nrm(g)
    return float(abs(lhs - rhs) / scale) if scale > 0 else float(abs(lhs - rhs))


def algebra_suite(sc: Scenario) -> _Recorder:
    rec = _Recorder("algebra", sc)
    ts = TruncatedSpace(sc.space, sc.exact_n_max)
    rng = RngStream(sc.seed, 100)
    anchor = "su(1,1) current-algebra commutation relations"
    gen = rng.generator(0)
    pairs = [_complex_pair(gen, ts.m) for _ in range(sc.random_trials)]
    names = ("commutator_lowering_raising", "commutator_neutral_raising", "commutator_neutral_lowering")
    for i, name in enumerate(names):
        rec.check(name, anchor, "exact")(
            lambda i=i: max(commutation_residuals(ts, phi, theta)[i] for phi, theta in pairs)
        )

    def adjoint():
        g = rng.generator(1)
        out = 0.0
        for _ in range(sc.random_trials):
            f = g.normal(size=ts.dim) + 1j * g.normal(size=ts.dim)
            h = g.normal(size=ts.dim) + 1j * g.normal(size=ts.dim)
            phi = g.normal(size=ts.m) + 1j * g.normal(size=ts.m)
            out = max(out, adjointness_violation(ts, f, h, phi))
        return out

    rec.check("adjointness", "raising and lowering operators are mutually adjoint", "exact")(adjoint)

    def adjoint_matrix():
        g = rng.generator(2)
        phi = g.normal(size=ts.m) + 1j * g.normal(size=ts.m)
        km = build_k_minus(ts, phi).toarray()
        adj = weighted_adjoint(ts, build_k_plus(ts, phi)).toarray()
        return float(np.max(np.abs(adj - km)) / max(1.0, np.max(np.abs(km))))

    rec.check("adjointness_matrix", "raising and lowering operators are mutually adjoint", "exact")(adjoint_matrix)

    def shifts():
        phi = np.linspace(0.5, 1.5, ts.m)
        ops = (build_k_plus(ts, phi), build_k_minus(ts, phi), build_k_zero(ts, phi))
        return sum(not respects_shift(ts, op) for op in ops)

    rec.check("sector_shift", "raising adds, lowering removes, neutral keeps one particle", "exact")(shifts)
    return rec


def pascal_suite(sc: Scenario) -> _Recorder:
    rec = _Recorder("pascal", sc)
    space = sc.space
    n = sc.mc_samples
    for k, (name, F) in enumerate(sorted(papangelou_battery(space).items())):

        def papangelou(F=F, k=k):
            lhs, rhs = check_papangelou(space, F, n, RngStream(sc.seed, 200 + k))
            return lhs.z_score(rhs)

        rec.check(f"papangelou_{name}", "Papangelou kernel p(alpha + eta) of the Pascal process", "sigma")(papangelou)

    laplace_tests = {"constant": np.full(space.m, 0.5), "ramp": 0.3 * (1 + np.arange(space.m))}
    for k, (name, f) in enumerate(sorted(laplace_tests.items())):

        def laplace(f=f, k=k):
            est, exact = check_laplace(space, f, n, RngStream(sc.seed, 210 + k))
            return est.z_score(exact)

        rec.check(f"laplace_{name}", "Laplace functional of the Pascal process", "sigma")(laplace)

    direct = sample_pascal_direct(space, RngStream(sc.seed, 220), n)
    compound = sample_pascal_compound(space, RngStream(sc.seed, 221), n)
    for i in range(space.m):
        rec.check(
            f"compound_vs_direct_site{i}",
            "compound Poisson representation of the Pascal process",
            "significance",
            "ge",
        )(lambda i=i: two_sample_chisquare(direct[:, i], compound[:, i]))

    def merged():
        # pooled counts are negative binomial with the summed mass
        totals = direct.sum(axis=1)
        top = int(totals.max())
        observed = np.bincount(totals, minlength=top + 1)
        pmf = stats.nbinom.pmf(np.arange(top + 1), space.total_mass, 1.0 - space.p)
        pmf[-1] += stats.nbinom.sf(top, space.total_mass, 1.0 - space.p)
        return goodness_of_fit(observed, pmf)

    rec.check("merged_sites_negative_binomial", "Pascal law of the total count", "significance", "ge")(merged)
    return rec


def perturbed_generators(generators: dict, n: int, delta: float) -> dict:
    """Copy of ``generators`` with one off-diagonal rate of sector ``n`` raised by ``delta``.

    The diagonal is adjusted so rows still sum to zero; used as a negative
    control for the consistency check.
    """
    out = {k: g.matrix for k, g in generators.items()}
    mat = sp.lil_array(out[n])
    row = 0
    col = next(j for j in mat.rows[row] if j != row)
    mat[row, col] += delta
    mat[row, row] -= delta
    out[n] = sp.csr_array(mat)
    return out


def sip_suite(sc: Scenario) -> _Recorder:
    rec = _Recorder("sip", sc)
    space = sc.space
    kern = sc.rate_kernel
    ts = TruncatedSpace(space, sc.exact_n_max)
    gens = sector_generators(ts, kern)

    rec.check("detailed_balance", "Pascal law is reversible for the inclusion process", "exact")(
        lambda: max(check_detailed_balance(space, kern, n, relative=True) for n in range(ts.n_max + 1))
    )
    rec.check("consistency", "consistency: removal operator commutes with the generator", "block_exact")(
        lambda: check_consistency(ts, generators=gens)
    )

    def control():
        target = min(2, ts.n_max)
        return check_consistency(ts, generators=perturbed_generators(gens, target, 0.1))

    rec.check(
        "consistency_negative_control", "consistency: a perturbed rate is detected", "detection", "ge"
    )(control)

    rec.check("conservative_factorials", "consistent semigroups are conservative", "block_exact")(
        lambda: max(
            check_conservative_factorials(ts, kern, t, k, generators=gens) for t in sc.times for k in (1, 2, 3)
        )
    )

    def constants():
        worst = 0.0
        for n in range(ts.n_max + 1):
            for t in sc.times:
                P = semigroup_matrix(gens[n], t)
                worst = max(worst, float(np.max(np.abs(P.sum(axis=1) - 1.0))))
        return worst

    rec.check("semigroup_preserves_constants", "consistent semigroups are conservative", "block_exact")(constants)

    def rewrite():
        g = RngStream(sc.seed, 300).generator(0)
        if sc.kernel.get("type") == "product":
            phis = [np.asarray(sc.kernel["phi"], dtype=float)]
        else:
            phis = [g.uniform(0, 1.5, size=space.m) for _ in range(min(sc.random_trials, 10))]
        worst = 0.0
        top = ts.n_max - 1
        for phi in phis:
            L = build_generator_algebraic(ts, phi).block(ts, top)
            direct = sp.block_diag(
                [build_generator(space, RateKernel.product_form(phi), n, ts.sectors[n]).matrix for n in range(top + 1)]
            ).toarray()
            worst = max(worst, float(np.max(np.abs(L - direct))))
        return worst

    rec.check("algebraic_rewrite", "product-form generator as a quadratic expression in k+, k-, k0", "block_exact")(
        rewrite
    )

    # Gillespie against the exact semigroup on sector 2
    n_g = 2
    gen2 = build_generator(space, kern, n_g)
    start_config = gen2.basis.configs[0]
    finals, jumps = gillespie_final_states(
        space, kern, start_config, sc.gillespie_time, sc.gillespie_replicas, RngStream(sc.seed, 310)
    )

    def occupation():
        row = semigroup_matrix(gen2, sc.gillespie_time)[0]
        idx = np.array([gen2.basis.position(eta) for eta in finals.tolist()])
        observed = np.bincount(idx, minlength=len(gen2.basis))
        return goodness_of_fit(observed, np.clip(row, 0, None) / np.clip(row, 0, None).sum())

    rec.check("gillespie_occupation", "Gillespie paths reproduce the semigroup", "significance", "ge")(occupation)

    def jump_count():
        exact = expected_jumps(gen2, sc.gillespie_time)[0]
        return McEstimate.from_samples(jumps).z_score(exact)

    rec.check("gillespie_jump_count", "Gillespie paths reproduce the semigroup", "sigma")(jump_count)

    rows = []
    traj = RngStream(sc.seed, 311)
    for r in range(sc.trajectory_replicas):
        events, _ = gillespie_simulate(space, kern, start_config, sc.gillespie_time, traj.generator(r))
        rows.extend((r, float(e.time), int(e.from_site), int(e.to_site)) for e in events)
    rec.tables["trajectory"] = Table(("replica", "time", "from_site", "to_site"), tuple(rows))
    return rec


def meixner_suite(sc: Scenario) -> _Recorder:
    rec = _Recorder("meixner", sc)
    a, p = float(sc.alpha[0]) if sc.alpha[0] > 0 else 1.0, sc.p
    params = MeixnerParams(a, p)

    def symmetry():
        grid = np.arange(11)
        return max(
            float(np.max(np.abs(meixner_M(n, grid, params) - np.array([meixner_M(int(x), n, params) for x in grid]))))
            for n in range(11)
        )

    rec.check("symmetry", "Meixner self-duality M_n(x) = M_x(n)", "exact")(symmetry)

    x_max = max(200, int(np.ceil(80.0 / -np.log(p))))
    xs = np.arange(x_max + 1, dtype=float)
    nb = stats.nbinom.pmf(xs, a, 1.0 - p)
    degrees = range(7)

    def orthogonality():
        vals = np.array([meixner_M(n, xs, params) for n in degrees])
        gram = (vals * nb) @ vals.T
        norms = np.array([factorial(n) / (rising_factorial(a, n) * p**n) for n in degrees])
        return float(np.max(np.abs(gram / np.sqrt(np.outer(norms, norms)) - np.eye(len(norms)))))

    rec.check("orthogonality", "Meixner orthogonality under the negative binomial law", "meixner")(orthogonality)

    def monic_norm():
        worst = 0.0
        for n in degrees:
            exact = factorial(n) * rising_factorial(a, n) * p**n / (1 - p) ** (2 * n)
            got = float(np.sum(nb * meixner_monic(n, xs, params) ** 2))
            worst = max(worst, abs(got / exact - 1))
        return worst

    rec.check("monic_norm", "Meixner orthogonality under the negative binomial law", "meixner")(monic_norm)

    def genfun():
        worst = 0.0
        for s, x, aa, pp in ((0.4, 3, 1.5, 0.3), (0.4, 3, a, p), (-0.3, 5, a, p)):
            pr = MeixnerParams(aa, pp)
            value, terms = generating_partial_sum(s, x, pr)
            exact = generating_function(s, x, pr)
            worst = max(worst, abs(value - exact) / abs(exact) if terms < 200 else np.inf)
        return worst

    rec.check("generating_function", "Meixner generating function", "meixner")(genfun)

    def degree_one():
        grid = np.arange(20, dtype=float)
        return float(np.max(np.abs(meixner_monic(1, grid, params) - (grid - p * a / (1 - p)))))

    rec.check("monic_degree_one", "monic Meixner polynomials", "exact")(degree_one)

    def recurrence():
        grid = np.arange(0, 40, dtype=float)
        worst = 0.0
        for n in range(1, HYPERGEOMETRIC_MAX_DEGREE + 1):
            # both paths are defined on this range; above it only the recurrence runs
            ref = meixner_monic(n, grid, params)
            got = monic_by_recurrence(n, grid, params)
            worst = max(worst, float(np.max(np.abs(got - ref)) / np.max(np.abs(ref))))
        return worst

    rec.check("recurrence_vs_hypergeometric", "monic Meixner polynomials", "meixner")(recurrence)
    return rec


def _theorem_probes(ts: TruncatedSpace):
    """Sector functions used for the unitary/Meixner theorem: vacuum, site, pair indicators."""
    m = ts.m
    pair = (1, 1) + (0,) * (m - 2) if m >= 2 else (2,)
    out = {}
    for n, eta in ((0, (0,) * m), (1, (1,) + (0,) * (m - 1)), (2, pair)):
        f = np.zeros(len(ts.sectors[n]))
        f[ts.sectors[n].position(eta)] = 1.0
        out[n] = f
    return out


def _require_dense(ts: TruncatedSpace):
    if ts.dim > DENSE_LIMIT:
        raise CapacityError(f"the unitary suite needs a dense space of at most {DENSE_LIMIT} configurations, got {ts.dim}")
    if np.any(np.asarray(ts.space.alpha) <= 0):
        raise CapacityError("the unitary suite needs every site mass to be positive")


def unitary_suite(sc: Scenario) -> _Recorder:
    rec = _Recorder("unitary", sc)
    space = sc.space
    theorem = "unitary U(artanh sqrt p, 0) maps sector indicators to Meixner expansions"
    transform = "exponential states are mapped to exponential states"
    xi_star = UnitaryParams.meixner_point(space.p)
    z_point = 0.3

    convergence_rows = []
    history: dict[str, list[float]] = {}
    for n_max in sorted(set(sc.convergence) | {sc.n_max}):
        ts = TruncatedSpace(space, n_max)
        _require_dense(ts)
        probes = _theorem_probes(ts)
        res = {n: apply_theorem_check(ts, n, f) for n, f in probes.items()}
        ex = check_exponential_transform(ts, 0.4, z_point)
        if n_max in sc.convergence:
            convergence_rows.append(
                (n_max, ts.coverage, res[0].residual, res[1].residual, res[2].residual, ex.residual)
            )
            for n in probes:
                history.setdefault(f"theorem_n{n}", []).append(res[n].residual)
            history.setdefault("exponential_transform", []).append(ex.residual)
        if n_max == sc.n_max:
            for n, name in ((0, "vacuum"), (1, "site"), (2, "pair")):
                rec.check(f"theorem_{name}", theorem, "theorem")(lambda r=res[n]: tuple(r))
            rec.check("exponential_transform", transform, "transform")(lambda: tuple(ex))
            rec.check("exponential_transform_vacuum", transform, "transform")(
                lambda ts=ts: tuple(check_exponential_transform(ts, xi_star.xi, 0.0))
            )
            main_ts = ts
    rec.tables["convergence"] = Table(
        ("n_max", "coverage", "theorem_vacuum", "theorem_site", "theorem_pair", "exponential_transform"),
        tuple(convergence_rows),
    )

    def decay():
        # largest ratio residual(n_max_{j+1}) / residual(n_max_j); must stay below one
        ratios = [b / a if a > 0 else (0.0 if b == 0 else np.inf) for seq in history.values() for a, b in zip(seq, seq[1:])]
        return max(ratios)

    rec.check("residual_decay", "truncation residuals decrease with n_max", 1.0, "lt")(decay)

    ts = main_ts
    rec.check("weighted_unitarity", "U(xi, theta) is unitary in the Pascal-weighted inner product", "unitarity")(
        lambda: _unitarity(ts, xi_star)
    )
    rec.check("weighted_unitarity_complex", "U(xi, theta) is unitary in the Pascal-weighted inner product", "unitarity")(
        lambda: _unitarity(ts, UnitaryParams(0.3 - 0.2j, 0.7))
    )

    kern = sc.rate_kernel
    gens = sector_generators(ts, kern)
    for t in sc.times:
        blocks = block_semigroup(ts, kern, t, gens)
        rec.check(f"symmetry_t{t:g}", "inclusion semigroup commutes with every U(xi, theta)", "symmetry")(
            lambda blocks=blocks, t=t: tuple(check_symmetry(ts, kern, xi_star, t, blocks=blocks, seed=sc.seed))
        )
        if t == sc.times[len(sc.times) // 2]:
            rec.check(f"symmetry_complex_t{t:g}", "inclusion semigroup commutes with every U(xi, theta)", "symmetry")(
                lambda blocks=blocks, t=t: tuple(
                    check_symmetry(ts, kern, UnitaryParams(0.2 + 0.15j, 0.4), t, blocks=blocks, seed=sc.seed + 1)
                )
            )

    def group_law():
        worst = 0.0
        for phase in (1.0, np.exp(0.7j)):
            a1, a2 = MobiusAction(0.3 * phase), MobiusAction(0.5 * phase)
            worst = max(worst, float(np.max(np.abs(a1.matrix @ a2.matrix - MobiusAction(0.8 * phase).matrix))))
            for ma in (a1, a2):
                worst = max(worst, abs(abs(ma.a) ** 2 - abs(ma.b) ** 2 - 1))
        return worst

    rec.check("mobius_group_law", "Moebius action of A(xi)", "exact")(group_law)

    def disk():
        g = RngStream(sc.seed, 400).generator(0)
        z = 0.95 * np.sqrt(g.uniform(size=200)) * np.exp(2j * np.pi * g.uniform(size=200))
        return max(float(np.max(np.abs(mobius_transform(MobiusAction(xi), z)))) for xi in (0.4, 1.5j, xi_star.xi))

    rec.check("mobius_preserves_disk", "Moebius action of A(xi)", 1.0, "lt")(disk)

    def corollary():
        s = 0.5
        block = np.zeros(space.m)
        block[0] = 1.0
        z = s * np.sqrt(space.p) * block
        got = multiplier(MobiusAction(xi_star.xi), space, z)
        exact = (1 - space.p) ** (space.total_mass / 2) * (1 + space.p * s) ** (-space.alpha[0])
        return abs(got - exact) / abs(exact)

    rec.check("multiplier_generating_function", "multiplier C(xi) at xi = artanh sqrt p", "exact")(corollary)

    def state_norm():
        z = np.full(space.m, 0.4)
        psi = exponential_state(ts, z)
        trunc = float(np.sum(ts.weights * np.abs(psi) ** 2))
        exact = exponential_state_norm_sq(space, z)
        return (abs(exact - trunc) / exact, ts.coverage, ts.n_max)

    rec.check("exponential_state_norm", transform, "theorem")(state_norm)
    return rec


def _unitarity(ts: TruncatedSpace, params: UnitaryParams) -> tuple:
    return (weighted_unitarity_defect(ts, build_unitary(ts, params)), ts.coverage, ts.n_max)


def intertwine_suite(sc: Scenario) -> _Recorder:
    rec = _Recorder("intertwine", sc)
    space = sc.space
    kern = sc.rate_kernel
    ts = TruncatedSpace(space, sc.intertwine_n_max)
    gens = sector_generators(ts, kern)
    g = RngStream(sc.seed, 500).generator(0)
    anchor = "P_t I_n(f_n) = I_n(p_t f_n)"
    for n in (1, 2):
        f = g.normal(size=len(ts.sectors[n]))
        for t in sc.times:
            rec.check(f"intertwining_n{n}_t{t:g}", anchor, "block_exact")(
                lambda f=f, n=n, t=t: check_intertwining(ts, kern, n, f, t, generators=gens)
            )

    def vacuum():
        vac = ts.indicator((0,) * ts.m)
        return float(np.max(np.abs(k_transform(ts, vac) - 1.0)))

    rec.check("k_transform_vacuum", "K-transform exp(sqrt p k+(1))", "exact")(vacuum)

    def k_commutes():
        worst = 0.0
        for t in sc.times:
            blocks = block_semigroup(ts, kern, t, gens)
            f = np.zeros(ts.dim)
            low = ts.below(min(2, ts.n_max))
            f[low] = g.normal(size=low.stop)
            lhs = apply_blocks(ts, blocks, k_transform(ts, f))
            rhs = k_transform(ts, apply_blocks(ts, blocks, f))
            worst = max(worst, float(np.max(np.abs(lhs - rhs))))
        return worst

    rec.check("k_transform_commutes", "K-transform exp(sqrt p k+(1))", "block_exact")(k_commutes)
    return rec


SUITE_RUNNERS = {
    "algebra": algebra_suite,
    "pascal": pascal_suite,
    "sip": sip_suite,
    "meixner": meixner_suite,
    "unitary": unitary_suite,
    "intertwine": intertwine_suite,
}


def run_suite(name: str, scenario: Scenario):
    """Run one suite; returns ``(records, tables)``."""
    rec = SUITE_RUNNERS[name](scenario)
    return rec.records, rec.tables
