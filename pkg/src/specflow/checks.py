"""Invariant suite behind ``specflow verify``.

Each check draws its instances from a generator seeded with the suite seed
and returns ``(ok, detail)``.  ``faults`` names deliberately corrupted
components, so the suite itself can be shown to catch failures.
"""
from __future__ import annotations

import math
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from . import paths
from .lift import (endpoint_sum, lift_path, project, read_track_csv, step_displacements, tail_sums,
                   write_track_csv)
from .matching import brute_force_d, distance_d
from .mu import loop_constancy_check, mu_integral, mu_invariant
from .rigged import CIRCLE, LINE, TWO_PI, RiggedSet, counting_function, pos_neg_parts, rho1, truncate_eps
from .scatter import (DEFAULT_LAMBDA_GRID, default_rank_one, default_rank_two, t0, tilde_s,
                      unitarity_residual, xi_decompose)
from .unispec import (UnitaryTC, eigen_velocity_check, random_hermitian, random_unitary, spec,
                      spec_continuity_check, trace_norm, unitary_path, velocity_bound)

TOL = 1e-12


def random_rigged(rng: np.random.Generator, space: str = CIRCLE, max_rank: int = 4) -> RiggedSet:
    """Random finite-rank set; points are sometimes repeated to exercise multiplicities."""
    n = int(rng.integers(0, max_rank + 1))
    if space == CIRCLE:
        pts = rng.uniform(1e-3, TWO_PI - 1e-3, n)
    else:
        pts = rng.uniform(0.05, 3.0, n) * rng.choice([-1.0, 1.0], n)
    if n > 1 and rng.random() < 0.3:
        pts[-1] = pts[0]
    return RiggedSet.from_pairs(space, [(float(x), 1) for x in pts])


def _metric(faults):
    if "metric" in faults:
        # asymmetric corruption: breaks symmetry and the brute-force agreement
        return lambda S, T: distance_d(S, T).cost + 1e-3 * (S.rank > T.rank)
    return lambda S, T: distance_d(S, T).cost


@dataclass(frozen=True)
class Check:
    name: str
    fn: Callable


def check_metric_axioms(rng, faults, n=300):
    d = _metric(faults)
    worst = 0.0
    for _ in range(n):
        space = CIRCLE if rng.random() < 0.5 else LINE
        S, T, U = (random_rigged(rng, space) for _ in range(3))
        if d(S, T) != d(T, S) or d(S, S) != 0.0 or (S != T and d(S, T) <= 0.0):
            return False, f"symmetry/identity fails for {S}, {T}"
        worst = max(worst, d(S, U) - d(S, T) - d(T, U))
    return worst <= TOL, f"max triangle excess {worst:.3g}"


def check_brute_force(rng, faults, n=200):
    d = _metric(faults)
    worst = 0.0
    for _ in range(n):
        space = CIRCLE if rng.random() < 0.5 else LINE
        S, T = random_rigged(rng, space), random_rigged(rng, space)
        worst = max(worst, abs(d(S, T) - brute_force_d(S, T)))
    return worst < TOL, f"max |d - brute force| {worst:.3g}"


def check_d_rho1(rng, faults, n=300):
    d = _metric(faults)
    worst = 0.0
    for _ in range(n):
        S, T = random_rigged(rng, CIRCLE, 5), random_rigged(rng, CIRCLE, 5)
        worst = max(worst, abs(d(S, T) - rho1(counting_function(S), counting_function(T))))
    return worst < 1e-10, f"max |d - rho1| {worst:.3g}"


def check_sum_lemma(rng, faults, n=200):
    d = _metric(faults)
    worst = -math.inf
    for _ in range(n):
        space = CIRCLE if rng.random() < 0.5 else LINE
        S1, S2, T1, T2 = (random_rigged(rng, space, 3) for _ in range(4))
        worst = max(worst, d(S1 + S2, T1 + T2) - d(S1, T1) - d(S2, T2))
    return worst <= TOL, f"max excess {worst:.3g}"


def _sub(rng, S):
    return RiggedSet.from_pairs(S.space, [(x, k) for x, m in S if (k := int(rng.integers(0, m + 1)))])


def check_important_estimate(rng, faults, n=200):
    d = _metric(faults)
    worst = -math.inf
    for _ in range(n):
        S, T = random_rigged(rng, CIRCLE, 4), random_rigged(rng, CIRCLE, 4)
        S1, T1 = _sub(rng, S), _sub(rng, T)
        worst = max(worst, d(S - S1, T - T1) - d(S1, T1) - d(S, T))
    return worst <= TOL, f"max excess {worst:.3g}"


def check_line_splitting(rng, faults, n=200):
    d = _metric(faults)
    worst = 0.0
    for _ in range(n):
        S, T = random_rigged(rng, LINE, 4), random_rigged(rng, LINE, 4)
        (Sp, Sm), (Tp, Tm) = pos_neg_parts(S), pos_neg_parts(T)
        worst = max(worst, abs(d(S, T) - d(Sp, Tp) - d(Sm, Tm)))
    return worst <= TOL, f"max |d - d+ - d-| {worst:.3g}"


def check_truncation(rng, faults, n=100):
    d = _metric(faults)
    for _ in range(n):
        space = CIRCLE if rng.random() < 0.5 else LINE
        S = random_rigged(rng, space, 5)
        radii = sorted({min(x, TWO_PI - x) if space == CIRCLE else abs(x) for x in S.points}, reverse=True)
        prev = math.inf
        for eps in [r + 1e-9 for r in radii] + [radii[-1] / 2 if radii else 0.5]:
            gap = d(S - truncate_eps(S, eps), S)
            if gap > prev + TOL:
                return False, f"d(S - S(eps), S) increased at eps={eps}"
            prev = gap
        if prev != 0.0:
            return False, f"d(S - S(eps), S) = {prev} below all breakpoints"
    return True, "monotone to 0"


def check_sticky_cost(rng, faults, n=200):
    worst = 0.0
    for _ in range(n):
        S, T = random_rigged(rng, CIRCLE), random_rigged(rng, CIRCLE)
        res = distance_d(S, T)
        worst = max([worst] + [_pair_cost(a, b) for a, b in res.pairs])
    return worst <= math.pi + TOL, f"max pair cost {worst:.3g}"


def _pair_cost(a, b):
    a = 0.0 if not isinstance(a, float) else a
    b = 0.0 if not isinstance(b, float) else b
    x = abs(a - b)
    return min(x, TWO_PI - x)


def _random_lifts(rng, n):
    for _ in range(n):
        N = int(rng.integers(1, 6))
        P = paths.random_two_generator(N, rng, 0.5)
        yield P, lift_path(unitary_path(P.U, 0.0, 1.0), step_tol=0.1)


def check_lift_roundtrip(rng, faults, n=10):
    d = _metric(faults)
    worst = 0.0
    for P, tr in _random_lifts(rng, n):
        for k, r in enumerate(tr.grid):
            worst = max(worst, d(project(tr, k), spec(UnitaryTC(P.U(r)))))
    return worst < 1e-8, f"max node error {worst:.3g}"


def check_lift_lipschitz(rng, faults, n=10):
    d = _metric(faults)
    worst = -math.inf
    for P, tr in _random_lifts(rng, n):
        steps = step_displacements(tr)
        for k in range(tr.n_nodes - 1):
            S0, S1 = project(tr, k), project(tr, k + 1)
            worst = max(worst, steps[k] - d(S0, S1) - tr.n_tracks * 1e-8)
    return worst <= 0.0, f"max excess {worst:.3g}"


def check_tail_sums(rng, faults, n=10):
    for P, tr in _random_lifts(rng, n):
        tails = tail_sums(tr)
        if np.any(np.diff(tails) > TOL):
            return False, "tail sums not monotone"
    return True, "monotone"


def check_mu_independence(rng, faults, n=10):
    for _ in range(n):
        N = int(rng.integers(1, 6))
        P = paths.random_two_generator(N, rng, 0.5)
        m1 = mu_invariant(lift_path(unitary_path(P.U), step_tol=0.1))
        m2 = mu_invariant(lift_path(unitary_path(P.U), step_tol=0.02))
        if m1 != m2:
            return False, f"{m1.step} != {m2.step}"
    return True, "exact agreement"


def check_mu_integral(rng, faults, n=10):
    worst = 0.0
    for P, tr in _random_lifts(rng, n):
        worst = max(worst, abs(mu_integral(mu_invariant(tr)) - endpoint_sum(tr)))
    return worst < 1e-6, f"max |int mu - sum theta| {worst:.3g}"


def check_mu_jumps(rng, faults, n=10):
    for P, tr in _random_lifts(rng, n):
        m = mu_invariant(tr)
        allowed = set(m.start.points) | set(m.end.points)
        if not set(m.step.angles) <= allowed:
            return False, "jump outside the endpoint supports"
    return True, "jumps at endpoint angles"


def check_loops(rng, faults):
    for N in (1, 2, 3, 5):
        w = loop_constancy_check(lift_path(unitary_path(paths.loop(N).U)))
        if w != N:
            return False, f"N={N} loop winds {w}"
    return True, "mu = N"


def check_homotopy(rng, faults, n=4):
    K = random_hermitian(4, rng, 0.5)
    values = set()
    for s in np.linspace(0.0, 1.0, n):
        P = paths.loop_homotopy(2, K, float(s))
        values.add(loop_constancy_check(lift_path(unitary_path(P.U))))
    return values == {2}, f"winding numbers {sorted(values)}"


def check_spec_conjugation(rng, faults, n=50):
    d = _metric(faults)
    worst = 0.0
    for _ in range(n):
        N = int(rng.integers(1, 8))
        U, V = random_unitary(N, rng), random_unitary(N, rng)
        worst = max(worst, d(spec(UnitaryTC(U)), spec(UnitaryTC(V @ U @ V.conj().T))))
    return worst < 1e-8, f"max d {worst:.3g}"


def check_spec_embedding(rng, faults, n=50):
    d = _metric(faults)
    worst = 0.0
    for _ in range(n):
        N, extra = int(rng.integers(1, 6)), int(rng.integers(1, 4))
        U = random_unitary(N, rng)
        big = np.eye(N + extra, dtype=complex)
        big[:N, :N] = U
        worst = max(worst, d(spec(UnitaryTC(U)), spec(UnitaryTC(big))))
    return worst < 1e-8, f"max d {worst:.3g}"


def check_spec_continuity(rng, faults, n=100):
    worst = -math.inf
    for _ in range(n):
        N = int(rng.integers(1, 11))
        U1 = random_unitary(N, rng)
        U2 = U1 @ paths.exp_irH(random_hermitian(N, rng, 10 ** rng.uniform(-3, 0))).U(1.0)
        lhs, rhs = spec_continuity_check(UnitaryTC(U1), UnitaryTC(U2))
        worst = max(worst, lhs - rhs)
    return worst <= 1e-8, f"max lhs - rhs {worst:.3g}"


def check_velocity(rng, faults, n=10):
    worst_dev, worst_bound = 0.0, -math.inf
    for _ in range(n):
        N = int(rng.integers(2, 7))
        P = paths.random_two_generator(N, rng, 1.0)
        r0 = float(rng.uniform(0.2, 0.8))
        worst_dev = max(worst_dev, eigen_velocity_check(P.U, r0, 1e-4))
        total, norm1 = velocity_bound(P.U, r0, 1e-4, P.dU)
        worst_bound = max(worst_bound, total - norm1)
    ok = worst_dev < 1e-6 and worst_bound <= 1e-8
    return ok, f"max deviation {worst_dev:.3g}, max bound excess {worst_bound:.3g}"


def check_trace_norm_bases(rng, faults, n=50):
    worst = -math.inf
    for _ in range(n):
        N = int(rng.integers(1, 8))
        A = rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))
        Q = random_unitary(N, rng)
        diag = np.abs(np.einsum("ij,ik,kj->j", Q.conj(), A, Q)).sum()
        worst = max(worst, diag - trace_norm(A))
    return worst <= 1e-10, f"max excess {worst:.3g}"


def check_herglotz(rng, faults):
    worst = 0.0
    for model in (default_rank_one(), default_rank_two()):
        for lam in DEFAULT_LAMBDA_GRID:
            for z in (complex(lam), complex(lam, 0.1)):
                T = t0(model, z)
                worst = max(worst, -float(np.linalg.eigvalsh(T.imag_part).min()))
                worst = max(worst, float(np.max(np.abs(T.M - T.M.T))))
    return worst <= 1e-10, f"max violation {worst:.3g}"


def check_scattering(rng, faults):
    d = _metric(faults)
    worst = {"unitarity": 0.0, "integer": 0.0, "bk": 0.0, "det": 0.0, "spectra": 0.0}
    for model in (default_rank_one(), default_rank_two()):
        for lam in (-1.0, 0.5):
            for r in (0.5, 2.0):
                x = xi_decompose(model, lam, r)
                worst["unitarity"] = max(worst["unitarity"], unitarity_residual(tilde_s(model, lam, r)))
                worst["integer"] = max(worst["integer"], abs(x.xi_s - round(x.xi_s)))
                worst["bk"] = max(worst["bk"], x.bk_residual)
                worst["det"] = max(worst["det"], x.det_residual)
                worst["spectra"] = max(worst["spectra"], d(x.mu.end, x.mu_ac.end))
    ok = (worst["unitarity"] < 1e-8 and worst["integer"] < 1e-6 and worst["bk"] < 1e-6
          and worst["det"] < 1e-8 and worst["spectra"] < 1e-8)
    return ok, ", ".join(f"{k} {v:.3g}" for k, v in worst.items())


def check_csv_roundtrip(rng, faults):
    P = paths.random_two_generator(3, rng, 0.5)
    tr = lift_path(unitary_path(P.U))
    S = random_rigged(rng, CIRCLE, 5)
    with tempfile.TemporaryDirectory() as tmp:
        f = Path(tmp) / "track.csv"
        write_track_csv(tr, f)
        back = read_track_csv(f)
    err = float(np.max(np.abs(back.thetas - tr.thetas))) if tr.n_tracks else 0.0
    ok = err <= 1e-12 and RiggedSet.from_json(S.to_json()) == S
    return ok, f"max track error {err:.3g}"


CHECKS = [
    Check("metric_axioms", check_metric_axioms),
    Check("assignment_vs_brute_force", check_brute_force),
    Check("d_equals_rho1", check_d_rho1),
    Check("sum_subadditivity", check_sum_lemma),
    Check("important_estimate", check_important_estimate),
    Check("line_splitting", check_line_splitting),
    Check("truncation_continuity", check_truncation),
    Check("pair_cost_at_most_pi", check_sticky_cost),
    Check("lift_round_trip", check_lift_roundtrip),
    Check("lift_step_displacement", check_lift_lipschitz),
    Check("tail_sums_monotone", check_tail_sums),
    Check("mu_lift_independence", check_mu_independence),
    Check("mu_integral_identity", check_mu_integral),
    Check("mu_jumps_at_endpoints", check_mu_jumps),
    Check("loop_winding", check_loops),
    Check("loop_homotopy", check_homotopy),
    Check("spec_conjugation", check_spec_conjugation),
    Check("spec_embedding", check_spec_embedding),
    Check("spec_continuity", check_spec_continuity),
    Check("eigen_velocity", check_velocity),
    Check("trace_norm_diagonal", check_trace_norm_bases),
    Check("t0_herglotz_symmetry", check_herglotz),
    Check("scattering_suite", check_scattering),
    Check("csv_round_trip", check_csv_roundtrip),
]


def run_checks(seed: int = 0, faults=(), only=None):
    """Run the suite; returns a list of ``(name, ok, detail)``."""
    faults = frozenset(faults)
    out = []
    for i, c in enumerate(CHECKS):
        if only and c.name not in only:
            continue
        rng = np.random.default_rng([seed, i])
        try:
            ok, detail = c.fn(rng, faults)
        except Exception as exc:  # a crash is a failure of that property
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append((c.name, bool(ok), detail))
    return out
