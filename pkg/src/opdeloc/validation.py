"""Self-checks run by ``opdeloc validate`` and the acceptance tests.

Each check compares two independent routes (numerical pipeline against a
closed form, or fast path against the brute-force oracle) and returns a
:class:`Check`.  Statistical checks pass when every compared quantity lies
within ``n_sigma`` standard errors.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import battery, couplings, dense_oracle, ensemble, krylov, netgen, opspace, star_exact
from .trends import jackknife

STAR_SIGMA = 3.0
# differences below this are round-off, not sampling noise
ROUNDOFF = 1e-12


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.detail}"


def _zscore(mean, stderr, expected) -> float:
    mean, stderr, expected = (np.atleast_1d(np.asarray(a, dtype=float))
                              for a in (mean, stderr, expected))
    diff = np.maximum(np.abs(mean - expected) - ROUNDOFF, 0.0)
    exact = stderr == 0
    if np.any(exact & (diff > 0)):
        return np.inf
    z = np.where(exact, 0.0, diff / np.where(exact, 1.0, stderr))
    return float(z.max())


def _stat_check(name, mean, stderr, expected, n_sigma=STAR_SIGMA) -> Check:
    z = _zscore(mean, stderr, expected)
    return Check(name, z <= n_sigma, f"max |z| = {z:.2f} (limit {n_sigma})")


# exact star checks ---------------------------------------------------------

def star_exact_checks(L_values=(4, 8, 12), seed: int = 0,
                      times=np.linspace(0.0, 10.0, 201)) -> list[Check]:
    """Lanczos pipeline on star couplings against the three-site closed forms."""
    rng = np.random.default_rng(seed)
    checks = []
    for L in L_values:
        g = netgen.make_star(L)
        J = couplings.sample_couplings(g, rng)
        leaf = J.dense()[:L - 1, L - 1]
        worst_b = worst_phi = 0.0
        K_ok = True
        for s in range(1, L):
            ld = krylov.lanczos(J, opspace.SectorVector.basis(L, opspace.mask_of(range(s))))
            b1, b2 = star_exact.star_lanczos_coefficients(star_exact.StarParams(L, s=s, couplings=leaf))
            expected_b = np.array([b1, b2]) if b2 > 0 else np.array([b1])
            K_ok &= ld.K == len(expected_b) + 1
            if ld.K != len(expected_b) + 1:
                continue
            worst_b = max(worst_b, float(np.max(np.abs(ld.b - expected_b))))
            phi = krylov.evolve_amplitudes(ld, times).phi
            ref = np.stack(star_exact.star_wavefunctions(b1, b2, times), axis=1)[:, :ld.K]
            worst_phi = max(worst_phi, float(np.max(np.abs(phi - ref))))
        checks.append(Check(f"star L={L} Krylov dimension", K_ok,
                            "K=3 for s<L-1, K=2 for s=L-1"))
        checks.append(Check(f"star L={L} b1,b2", worst_b <= 1e-10, f"max err {worst_b:.2e}"))
        checks.append(Check(f"star L={L} phi_n(t)", worst_phi <= 1e-8, f"max err {worst_phi:.2e}"))
    return checks


# star ensemble -------------------------------------------------------------

@dataclass(frozen=True)
class StarTask:
    """Per-realization star observables, flattened into one row.

    Layout: for each size ``s``: ``b^2, b^4, phi_0(t)..., C_K(t)...``;
    then the x- and z-battery power curves.
    """

    sizes: tuple[int, ...]

    def __call__(self, graph, J, times):
        L = J.L
        parts = []
        for s in self.sizes:
            ld = krylov.lanczos(J, opspace.SectorVector.basis(L, opspace.mask_of(range(s))))
            amps = krylov.evolve_amplitudes(ld, times)
            b2 = ld.b[0] ** 2
            parts += [[b2, b2 ** 2], amps.phi[:, 0], krylov.k_complexity(amps).ck]
        for axis in ("x", "z"):
            parts.append(battery.charging_power(J, axis, times).power)
        return np.concatenate([np.atleast_1d(p) for p in parts])


def star_sizes(L: int) -> tuple[int, ...]:
    return tuple(sorted({1, L // 2, L - 2}))


def star_ensemble_checks(L_values=(4, 8, 12), realizations: int = 10_000, seed: int = 0,
                         threads: int = 1, times=np.linspace(0.0, 6.0, 121),
                         probe_times=(0.5, 1.0, 2.0, np.pi, 5.0)) -> list[Check]:
    times = np.asarray(times, dtype=float)
    probe = np.array([int(np.argmin(np.abs(times - t))) for t in probe_times])
    nt = times.size
    checks = []
    for L in L_values:
        sizes = star_sizes(L)
        spec = ensemble.EnsembleSpec(L, "star", realizations=realizations,
                                     master_seed=seed, times=times)
        res = ensemble.run_ensemble(spec, StarTask(sizes), threads=threads, keep_samples=True)
        mean, err = res.mean, res.stderr
        off = 0
        for s in sizes:
            b2 = slice(off, off + 1)
            b4 = slice(off + 1, off + 2)
            phi = slice(off + 2, off + 2 + nt)
            ck = slice(off + 2 + nt, off + 2 + 2 * nt)
            off += 2 + 2 * nt
            curves = star_exact.star_ensemble_curves(L, times, s=s)
            checks.append(_stat_check(f"star L={L} s={s} mean b^2", mean[b2], err[b2],
                                      star_exact.star_moments(1, s, L)))
            checks.append(_stat_check(f"star L={L} s={s} mean b^4", mean[b4], err[b4],
                                      star_exact.star_moments(2, s, L)))
            checks.append(_stat_check(f"star L={L} s={s} mean phi_0", mean[phi][probe],
                                      err[phi][probe], curves.phi0[probe]))
            checks.append(_stat_check(f"star L={L} s={s} mean C_K", mean[ck][probe],
                                      err[ck][probe], curves.ck[probe]))
        px = slice(off, off + nt)
        pz = slice(off + nt, off + 2 * nt)
        x_curves = star_exact.star_ensemble_curves(L, times, axis="x")
        checks.append(_stat_check(f"star L={L} x-battery mean power", mean[px][probe],
                                  err[px][probe], x_curves.power[probe]))
        samples = res.samples
        for axis, sl, expected in (
                ("x", px, x_curves.p_max),
                ("z", pz, star_exact.star_ensemble_curves(L, times, axis="z").p_max),
                ("z (direct evaluation)", pz, star_exact.star_z_battery_derived(L, times).p_max)):
            pm, pm_err = jackknife(
                lambda m: battery.PowerSeries.from_energy(times, m * times).p_max, samples[:, sl])
            checks.append(_stat_check(f"star L={L} P_max {axis}", pm, pm_err, expected))
    return checks


# oracle equivalence --------------------------------------------------------

def sign_rule_checks(L_values=(4, 6, 8), seed: int = 0) -> list[Check]:
    rng = np.random.default_rng(seed)
    checks = []
    for L in L_values:
        J = couplings.sample_couplings(netgen.make_complete(L), rng)
        worst = 0.0
        for s in range(L + 1):
            T = opspace.liouvillian_matrix(J, s).toarray()
            M = dense_oracle.dense_superoperator_sector(J, s, check_leakage=L <= 6)
            worst = max(worst, float(np.max(np.abs(T - M))))
        checks.append(Check(f"sign rule L={L} all sectors", worst <= 1e-10, f"max err {worst:.2e}"))
    return checks


def bandwidth_checks(L_values=(4, 6, 8, 10), seed: int = 0) -> list[Check]:
    rng = np.random.default_rng(seed)
    checks = []
    for L in L_values:
        J = couplings.sample_couplings(netgen.make_complete(L), rng)
        err = abs(couplings.bandwidth(J) - dense_oracle.dense_bandwidth(J))
        checks.append(Check(f"bandwidth L={L}", err <= 1e-10, f"err {err:.2e}"))
    return checks


def autocorrelation_checks(L_values=(4, 6, 8), seed: int = 0,
                           times=np.linspace(0.0, 10.0, 101)) -> list[Check]:
    """Principal-minor autocorrelation against Lanczos evolution in the sector."""
    rng = np.random.default_rng(seed)
    checks = []
    for L in L_values:
        J = couplings.rescale_to_unit_bandwidth(
            couplings.sample_couplings(netgen.make_complete(L), rng))
        worst = 0.0
        for s in range(1, L + 1):
            for _ in range(2):
                S = opspace.mask_of(rng.choice(L, size=s, replace=False))
                ld = krylov.lanczos(J, opspace.SectorVector.basis(L, S))
                phi0 = krylov.evolve_amplitudes(ld, times).phi[:, 0]
                det = opspace.free_autocorrelation(J, S, times)
                worst = max(worst, float(np.max(np.abs(phi0 - det))))
        checks.append(Check(f"determinant autocorrelation L={L}", worst <= 1e-8,
                            f"max err {worst:.2e}"))
    return checks


def bridge_checks(L_values=(6, 8), realizations: int = 2000, seed: int = 0, threads: int = 1,
                  axis: str = "x", times=np.linspace(0.0, 6.0, 61),
                  probe_times=(0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 5.0, 6.0)) -> list[Check]:
    """Averaged direct-evolution power against the return-amplitude power.

    Both routes share each realization, so the comparison uses the
    per-realization difference and its standard error.
    """
    times = np.asarray(times, dtype=float)
    probe = np.array([int(np.argmin(np.abs(times - t))) for t in probe_times])
    checks = []
    for L in L_values:
        spec = ensemble.EnsembleSpec(L, "complete", realizations=realizations,
                                     master_seed=seed, times=times)
        res = ensemble.run_ensemble(spec, ensemble.BridgeTask(axis), threads=threads,
                                    keep_samples=True)
        diff = res.samples[:, 0, probe] - res.samples[:, 1, probe]
        n = len(diff)
        checks.append(_stat_check(f"bridge identity L={L} {axis}-battery", diff.mean(axis=0),
                                  diff.std(axis=0, ddof=1) / np.sqrt(n), 0.0))
    return checks


def run_suite(name: str, realizations: int | None = None, seed: int = 0,
              threads: int = 1) -> list[Check]:
    if name == "star":
        return star_exact_checks(seed=seed) + star_ensemble_checks(
            realizations=realizations or 2000, seed=seed, threads=threads)
    if name == "oracle":
        return (sign_rule_checks(seed=seed) + bandwidth_checks(seed=seed)
                + autocorrelation_checks(seed=seed)
                + bridge_checks(realizations=realizations or 500, seed=seed, threads=threads))
    raise ValueError(f"unknown suite {name!r}")
