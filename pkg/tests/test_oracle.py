"""Tests for the surrogate amplifier: grids, device instantiation, amplify."""

import numpy as np
import pytest

from edfagain.numerics import RngStream, dbm_to_mw, mw_to_dbm
from edfagain.oracle import (
    P_IN_MAX_DBM,
    P_IN_MIN_DBM,
    AmplifierDevice,
    FrequencyGrid,
    MakeParams,
    PsdProfile,
    amplify,
    base_gain_offset_db,
    base_gain_slope,
    device_from_dict,
    device_gain_profile,
    device_to_dict,
    make_device,
)

GRID = FrequencyGrid()


def flat_profile(level_dbm: float, grid: FrequencyGrid = GRID) -> PsdProfile:
    return PsdProfile(grid, np.full(grid.n_channels, level_dbm))


def random_profile(rng: RngStream, total_dbm: float, grid: FrequencyGrid = GRID, spread: float = 6.0) -> PsdProfile:
    powers = rng.normal(-25.0, spread, size=grid.n_channels)
    prof = PsdProfile(grid, powers)
    return PsdProfile(grid, powers + (total_dbm - prof.total_power_dbm()))


def test_grid_defaults():
    assert GRID.n_channels == 83
    f = GRID.frequencies()
    assert f[0] == 191.5
    assert f[-1] == 196.25
    assert np.all(np.diff(f) > 0)
    assert np.allclose(np.diff(f), GRID.spacing_thz)


def test_grid_validation_and_round_trip():
    with pytest.raises(ValueError):
        FrequencyGrid(n_channels=1)
    with pytest.raises(ValueError):
        FrequencyGrid(f_start_thz=196.0, f_stop_thz=191.0)
    assert FrequencyGrid.from_dict(GRID.to_dict()) == GRID


def test_profile_total_power_flat():
    # A flat profile at -10*log10(83) dBm per channel totals exactly 0 dBm.
    level = -10.0 * np.log10(83.0)
    prof = flat_profile(level)
    assert abs(prof.total_power_dbm()) < 1e-12
    assert abs(prof.total_power_mw() - 1.0) < 1e-12


def test_profile_shape_validation():
    with pytest.raises(ValueError):
        PsdProfile(GRID, np.zeros(82))


def test_make_device_deterministic():
    make = MakeParams()
    d1 = make_device(make, GRID, "A1", 77)
    d2 = make_device(make, GRID, "A1", 77)
    assert np.array_equal(d1.a_db, d2.a_db)
    assert np.array_equal(d1.b, d2.b)
    assert d1.hf_slope_dev_db_per_thz == d2.hf_slope_dev_db_per_thz
    # the id labels the unit; the seed alone fixes the draws
    d3 = make_device(make, GRID, "other", 77)
    assert np.array_equal(d1.a_db, d3.a_db)
    d4 = make_device(make, GRID, "A1", 78)
    assert not np.array_equal(d1.a_db, d4.a_db)


def test_zero_sigma_collapses_to_base_curves():
    make = MakeParams(sigma_dev_db=0.0)
    dev = make_device(make, GRID, "A1", 1)
    assert np.allclose(dev.a_db, base_gain_offset_db(make, GRID), atol=1e-15)
    assert np.allclose(dev.b, base_gain_slope(make, GRID), atol=1e-15)
    assert dev.hf_slope_dev_db_per_thz == 0.0
    other = make_device(make, GRID, "B7", 999)
    assert np.array_equal(dev.a_db, other.a_db)
    assert np.array_equal(dev.b, other.b)


def test_base_curves_shapes():
    make = MakeParams()
    ripple = base_gain_offset_db(make, GRID)
    assert np.max(np.abs(ripple)) <= sum(make.ripple_amps_db) + 1e-12
    slope = base_gain_slope(make, GRID)
    f = GRID.frequencies()
    f_mid = 0.5 * (191.5 + 196.25)
    assert np.allclose(slope, 1.0 + make.tilt_per_thz * (f - f_mid))


def test_hf_deviation_only_above_edge():
    """Two units of a make whose only perturbation is the high-band slope
    must agree exactly on and below the edge frequency."""
    make = MakeParams(sigma_dev_db=0.5, b_dev_ratio=0.0, hf_dev_ratio_per_thz=2.0)
    f = GRID.frequencies()
    d1 = make_device(make, GRID, "u1", 5)
    d2 = make_device(make, GRID, "u2", 6)
    diff = d1.a_db - d2.a_db
    below = f <= make.hf_edge_thz
    # below the edge, the difference is pure iid offset noise; above it there
    # is an extra linear-ramp component. Remove the offset noise by rebuilding
    # with sigma scaled but the hf draw preserved, via the hf ramp formula.
    ramp1 = np.where(f > make.hf_edge_thz, d1.hf_slope_dev_db_per_thz * (f - make.hf_edge_thz), 0.0)
    assert np.all(ramp1[below] == 0.0)
    assert np.all(ramp1[~below] != 0.0)
    assert not np.allclose(diff[~below], diff[below][: (~below).sum()])


def test_units_disagree_most_in_high_band():
    """At the default perturbation scale, the outputs of two random units
    differ noticeably more above the high-band edge than below it; this is
    the oracle-level structure the cross-device evaluation later picks up.
    Pooled over several unit pairs so single small slope draws cannot hide
    the effect."""
    make = MakeParams()
    f = GRID.frequencies()
    root = RngStream(3301, ("hf-disagreement",))
    sq = np.zeros(GRID.n_channels)
    n = 0
    for pair in range(8):
        d1 = make_device(make, GRID, "u1", 100 + 2 * pair)
        d2 = make_device(make, GRID, "u2", 101 + 2 * pair)
        for i in range(15):
            prof = random_profile(root.child(pair, i), 0.0)
            diff = amplify(d1, prof, 18.0).powers_dbm - amplify(d2, prof, 18.0).powers_dbm
            sq += diff**2
            n += 1
    sq /= n
    hi = float(sq[f > make.hf_edge_thz].mean())
    lo = float(sq[f <= make.hf_edge_thz].mean())
    assert hi > 1.5 * lo


def test_make_params_validation_and_round_trip():
    with pytest.raises(ValueError):
        MakeParams(sigma_dev_db=-0.1)
    with pytest.raises(ValueError):
        MakeParams(noise_sigma_db=-1.0)
    with pytest.raises(ValueError):
        MakeParams(ripple_amps_db=(0.5,), ripple_cycles=(1.0, 2.0), ripple_phases_rad=(0.0,))
    make = MakeParams(shb_gamma_db=1.5, noise_sigma_db=0.02)
    assert MakeParams.from_dict(make.to_dict()) == make


def test_amplify_matches_step_by_step_formula():
    """Re-derive the output with explicit numpy expressions."""
    make = MakeParams(shb_gamma_db=2.0)
    dev = make_device(make, GRID, "A1", 31)
    rng = RngStream(400, ("oracle-test",))
    for trial in range(25):
        p_out = float(rng.uniform(12.0, 22.0))
        prof = random_profile(rng.child(trial), float(rng.uniform(-7.0, 8.0)))
        out = amplify(dev, prof, p_out)

        lin = 10.0 ** (prof.powers_dbm / 10.0)
        p_in_total = 10.0 * np.log10(lin.sum())
        g_avg = p_out - p_in_total
        x = lin / lin.sum()
        gain = dev.a_db + dev.b * g_avg - dev.shb_gamma_db * x
        raw = prof.powers_dbm + gain
        corr = p_out - 10.0 * np.log10(np.sum(10.0 ** (raw / 10.0)))
        assert np.allclose(out.powers_dbm, raw + corr, atol=1e-12)


def test_amplify_conserves_output_power():
    """The leveled total equals the target within float rounding."""
    make = MakeParams(shb_gamma_db=2.0)
    dev = make_device(make, GRID, "A1", 9)
    rng = RngStream(7, ("conserve",))
    worst = 0.0
    for trial in range(300):
        prof = random_profile(rng.child(trial), float(rng.uniform(-10.0, 8.0)))
        p_out = float(rng.uniform(10.0, 22.0))
        out = amplify(dev, prof, p_out)
        worst = max(worst, abs(out.total_power_dbm() - p_out))
    assert worst < 1e-9


def test_amplify_shift_invariant_for_unit_slope_device():
    """With b = 1 everywhere and no shb term, raising the input by c dB at
    fixed target power leaves the output untouched: the average gain drops by
    exactly c and the leveling step absorbs the rest."""
    dev = AmplifierDevice(
        device_id="flat",
        seed=0,
        grid=GRID,
        a_db=base_gain_offset_db(MakeParams(), GRID),
        b=np.ones(GRID.n_channels),
        hf_slope_dev_db_per_thz=0.0,
    )
    rng = RngStream(88, ("shift",))
    prof = random_profile(rng, -5.0)
    shifted = PsdProfile(GRID, prof.powers_dbm + 4.0)
    out_a = amplify(dev, prof, 18.0)
    out_b = amplify(dev, shifted, 18.0)
    assert np.allclose(out_a.powers_dbm, out_b.powers_dbm, atol=1e-9)


def test_amplify_rejects_bad_inputs():
    dev = make_device(MakeParams(), GRID, "A1", 3)
    with pytest.raises(ValueError):
        amplify(dev, flat_profile(0.0), 18.0)  # total = 0 + 10log10(83) > 10 dBm
    with pytest.raises(ValueError):
        amplify(dev, flat_profile(-60.0), 18.0)  # total below -15 dBm
    with pytest.raises(ValueError):
        amplify(dev, PsdProfile(GRID, np.full(83, np.nan)), 18.0)
    with pytest.raises(ValueError):
        amplify(dev, random_profile(RngStream(1), 0.0), np.inf)
    other_grid = FrequencyGrid(n_channels=50)
    prof = PsdProfile(other_grid, np.full(50, -20.0))
    with pytest.raises(ValueError):
        amplify(dev, prof, 18.0)


def test_amplify_envelope_bounds_are_usable():
    dev = make_device(MakeParams(), GRID, "A1", 3)
    for total in (P_IN_MIN_DBM, P_IN_MAX_DBM):
        prof = flat_profile(total - 10.0 * np.log10(83.0))
        out = amplify(dev, prof, total + 12.0)
        assert abs(out.total_power_dbm() - (total + 12.0)) < 1e-9


def test_amplify_noise_post_leveling():
    make = MakeParams(noise_sigma_db=0.05)
    dev = make_device(make, GRID, "A1", 12)
    prof = random_profile(RngStream(5), -2.0)
    clean = amplify(dev, prof, 18.0)
    noisy1 = amplify(dev, prof, 18.0, rng=RngStream(1, ("n",)))
    noisy2 = amplify(dev, prof, 18.0, rng=RngStream(1, ("n",)))
    noisy3 = amplify(dev, prof, 18.0, rng=RngStream(2, ("n",)))
    assert np.array_equal(noisy1.powers_dbm, noisy2.powers_dbm)
    assert not np.array_equal(noisy1.powers_dbm, noisy3.powers_dbm)
    resid = noisy1.powers_dbm - clean.powers_dbm
    assert 0.0 < np.std(resid) < 0.2
    # noise lands after leveling, so the noisy total drifts off target
    assert abs(noisy1.total_power_dbm() - 18.0) > 1e-9
    # and with rng omitted the clean path stays exact
    assert abs(clean.total_power_dbm() - 18.0) < 1e-9


def test_device_gain_profile_tracks_average_gain():
    dev = make_device(MakeParams(), GRID, "A1", 21)
    prof = random_profile(RngStream(64), 0.0)
    g = device_gain_profile(dev, prof, 17.0)
    assert g.shape == (83,)
    # power-weighted mean gain approximates the 17 dB average gain; ripple
    # and leveling keep it from being exact
    w = dbm_to_mw(prof.powers_dbm)
    w = w / w.sum()
    assert abs(float(np.sum(w * g)) - 17.0) < 0.5


def test_device_round_trip():
    dev = make_device(MakeParams(shb_gamma_db=2.0, noise_sigma_db=0.01), GRID, "A2", 5)
    back = device_from_dict(device_to_dict(dev))
    assert back.device_id == dev.device_id
    assert back.seed == dev.seed
    assert back.grid == dev.grid
    assert np.array_equal(back.a_db, dev.a_db)
    assert np.array_equal(back.b, dev.b)
    assert back.hf_slope_dev_db_per_thz == dev.hf_slope_dev_db_per_thz
    assert back.shb_gamma_db == dev.shb_gamma_db
    assert back.noise_sigma_db == dev.noise_sigma_db
