from math import factorial

import numpy as np
import pytest

from opdeloc import battery as B
from opdeloc import couplings as C
from opdeloc import dense_oracle as D
from opdeloc import ensemble, netgen, star_exact
from opdeloc import opspace as O


def _unit(L, seed=0, family="complete"):
    rng = np.random.default_rng(seed)
    return C.rescale_to_unit_bandwidth(C.sample_couplings(netgen.make_graph(family, L), rng))


def test_power_vanishes_linearly_at_small_t():
    t = np.array([0.0, 1e-3, 2e-3, 4e-3])
    ps = B.charging_power(_unit(8, 1), "x", t)
    assert ps.power[0] == 0.0 and ps.energy[0] == pytest.approx(0.0, abs=1e-15)
    slope = ps.power[1:] / t[1:]
    assert np.allclose(slope, slope[0], rtol=1e-4)


def test_power_series_invariants():
    t = np.linspace(0, 6, 61)
    ps = B.charging_power(_unit(6, 2), "z", t)
    assert np.allclose(ps.power[1:], ps.energy[1:] / t[1:])
    assert ps.p_max >= ps.power.max() - 1e-12


@pytest.mark.parametrize("axis", ["x", "z"])
def test_fast_and_reference_paths_agree(axis):
    J = _unit(8, 3)
    t = np.linspace(0, 10, 101)
    fast = B.charging_power(J, axis, t, method="determinant").power
    ref = B.charging_power(J, axis, t, method="krylov").power
    assert np.max(np.abs(fast - ref)) < 1e-8


def test_charging_power_rejects_bad_input():
    raw = C.sample_couplings(netgen.make_complete(6), np.random.default_rng(0))
    with pytest.raises(ValueError, match="bandwidth"):
        B.charging_power(raw, "x", [0.0, 1.0])
    with pytest.raises(ValueError):
        B.charging_power(C.rescale_to_unit_bandwidth(raw), "y", [0.0, 1.0])
    with pytest.raises(ValueError):
        B.return_amplitude(C.rescale_to_unit_bandwidth(raw), "x", [1.0], method="magic")


def test_direct_evolution_matches_bridge_on_single_z_realization():
    # for the z-battery the identity already holds realization by realization
    J = _unit(6, 4)
    t = np.linspace(0, 5, 26)
    assert np.allclose(D.dense_evolution_power(J, "z", t).power,
                       B.charging_power(J, "z", t).power, atol=1e-12)


def test_max_power_on_known_profile():
    t = np.round(np.arange(0, 10.0001, 0.05), 10)
    energy = 1 - np.cos(t)
    ps = B.PowerSeries.from_energy(t, energy)
    assert ps.t_star == pytest.approx(2.33112, abs=1e-5)
    assert ps.p_max == pytest.approx(0.724611, abs=1e-6)
    assert ps.t_star == pytest.approx(star_exact.T_PEAK, abs=1e-6)


def test_max_power_monotone_decreasing():
    t = np.linspace(0, 5, 11)
    ps = B.PowerSeries(t, np.exp(-t) * t, np.exp(-t), np.nan, np.nan)
    assert B.max_power(ps) == (pytest.approx(np.exp(-0.5)), 0.5)
    with pytest.raises(ValueError):
        B.max_power(B.PowerSeries(np.zeros(1), np.zeros(1), np.zeros(1), np.nan, np.nan))


def test_power_series_output_formats():
    ps = B.PowerSeries.from_energy(np.linspace(0, 4, 9), 1 - np.cos(np.linspace(0, 4, 9)),
                                   {"L": 8})
    text = ps.to_csv()
    assert text.startswith("# L=8\n") and "t,E,P\n" in text
    assert '"p_max"' in ps.summary_json()


# perturbative series ---------------------------------------------------------

def _pairings(items):
    if not items:
        yield []
        return
    for i in range(1, len(items)):
        for rest in _pairings(items[1:i] + items[i + 1:]):
            yield [(items[0], items[i])] + rest


def _wick_chain(A, x, n):
    """Gaussian average of ``x^T T^n x`` for ``T = sum_e J_e A_e``, unit variances."""
    total = 0.0
    for P in _pairings(list(range(n))):
        partner = {i: j for i, j in P} | {j: i for i, j in P}
        state, open_ = x.copy(), []
        for pos in range(n):
            if partner[pos] > pos:
                state = np.einsum("...i,lji->...lj", state, A)
                open_.append(pos)
            else:
                ax = open_.index(partner[pos])
                state = np.moveaxis(state, ax, -2)
                open_.pop(ax)
                state = np.einsum("...li,lji->...j", state, A)
        total += state @ x
    return total


def _wick_coefficients(L):
    """Exact ``t^{2m-1}`` coefficients of the averaged x-battery power, mu = 1."""
    g = netgen.make_complete(L)
    unit = np.eye(g.n_edges)
    moments = np.zeros(4)
    for s, (vec, weight) in O.battery_operator("x", L).sector_components().items():
        A = np.array([O.liouvillian_matrix(C.CouplingMatrix.from_graph(g, unit[e]), s).toarray()
                      for e in range(g.n_edges)])
        for m in range(1, 5):
            moments[m - 1] += weight * (-1) ** m * _wick_chain(A, vec.amplitudes, 2 * m)
    # phi_0 = sum_m (-1)^m t^{2m} ||T^m v||^2 / (2m)!, variance 1/L per edge
    return np.array([L / 2 * (-1) ** (m + 1) * moments[m - 1] / L ** m / factorial(2 * m)
                     for m in range(1, 5)])


def test_leading_coefficient():
    assert B.perturbative_coefficients(4, 1.0)[0] == pytest.approx(0.75)


@pytest.mark.parametrize("L", [4, 6])
def test_corrected_series_matches_wick_oracle(L):
    exact = _wick_coefficients(L)
    assert np.allclose(B.perturbative_coefficients(L, 1.0, corrected=True), exact,
                       rtol=1e-12, atol=0)
    reference = B.perturbative_coefficients(L, 1.0)
    assert np.allclose(reference[:3], exact[:3], rtol=1e-12)
    # the default t^7 term has the wrong sign and magnitude
    assert reference[3] > 0 > exact[3]


def test_series_mu_scaling_and_origin():
    c1 = B.perturbative_coefficients(8, 1.0)
    c2 = B.perturbative_coefficients(8, 2.0)
    assert np.allclose(c2, c1 / 2.0 ** np.array([2, 4, 6, 8]))
    ps = B.perturbative_power(8, 3.0, np.linspace(0, 4, 41))
    assert ps.power[0] == 0.0 and np.isfinite(ps.p_max)


@pytest.mark.parametrize("bad", [lambda: B.perturbative_coefficients(5, 1.0),
                                 lambda: B.perturbative_coefficients(2, 1.0),
                                 lambda: B.perturbative_coefficients(8, 0.0)])
def test_series_rejects_bad_input(bad):
    with pytest.raises(ValueError):
        bad()


def test_corrected_series_tracks_ensemble_power():
    t = np.round(np.arange(0, 6.0001, 0.05), 10)
    spec = ensemble.EnsembleSpec(8, "complete", realizations=300, master_seed=9, times=t)
    mean = ensemble.run_ensemble(spec, ensemble.BatteryTask("x")).mean
    mu = ensemble.run_ensemble(ensemble.EnsembleSpec(8, "complete", realizations=300,
                                                     master_seed=9, rescale=False,
                                                     times=t[:1]),
                               ensemble.BandwidthTask()).mean[0]
    t_star = B.PowerSeries.from_energy(t, mean * t).t_star
    sel = (t > 0) & (t <= t_star)
    series = B.perturbative_power(8, mu, t, corrected=True).power
    assert np.max(np.abs(series[sel] / mean[sel] - 1)) < 0.06


# bandwidth fit -------------------------------------------------------------------

def test_bandwidth_fit_two_points_exact():
    fit = B.bandwidth_fit([(4, 1.0), (8, 3.0)])
    assert fit.slope == pytest.approx(0.5) and fit.intercept == pytest.approx(-1.0)
    assert np.allclose(fit.residuals, 0) and fit(6) == pytest.approx(2.0)


def test_bandwidth_fit_degenerate():
    with pytest.raises(ValueError):
        B.bandwidth_fit([(8, 1.0), (8, 2.0)])


def test_bandwidth_grows_with_L():
    samples = []
    for L in (8, 12, 16):
        spec = ensemble.EnsembleSpec(L, "complete", realizations=100, master_seed=1,
                                     rescale=False, times=np.zeros(1))
        samples.append((L, ensemble.run_ensemble(spec, ensemble.BandwidthTask()).mean[0]))
    fit = B.bandwidth_fit(samples)
    assert fit.slope > 0 and fit.residuals.shape == (3,)


# ensemble-level properties -------------------------------------------------------

def test_averaged_energy_non_negative_and_x_over_z_grows():
    t = np.round(np.arange(0, 8.0001, 0.05), 10)
    ratios = []
    for L in (6, 10, 14):
        pm = {}
        for axis in "xz":
            spec = ensemble.EnsembleSpec(L, "complete", realizations=100, master_seed=2, times=t)
            mean = ensemble.run_ensemble(spec, ensemble.BatteryTask(axis)).mean
            assert np.all(mean * t >= -1e-12)
            pm[axis] = B.PowerSeries.from_energy(t, mean * t).p_max
        ratios.append(pm["x"] / pm["z"])
    assert ratios[0] < ratios[1] < ratios[2]


def test_star_x_battery_average():
    t = np.array([0.5, 1.0, 2.0, np.pi])
    spec = ensemble.EnsembleSpec(6, "star", realizations=3000, master_seed=3, times=t)
    res = ensemble.run_ensemble(spec, ensemble.BatteryTask("x"))
    expected = star_exact.star_ensemble_curves(6, t, axis="x").power
    assert np.all(np.abs(res.mean - expected) < 3 * res.stderr)
