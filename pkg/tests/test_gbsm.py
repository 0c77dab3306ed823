import numpy as np
import pytest

from mrpchan.antenna import AntennaArray
from mrpchan.core import (
    SPEED_OF_LIGHT,
    ChannelDomainError,
    MalformedInputError,
    RandomStream,
    RpEntry,
    wrap180,
)
from mrpchan.gbsm import (
    AngleKind,
    PathSet,
    assemble_subchannel,
    draw_lsps,
    gen_cluster_angles,
    gen_cluster_delays,
    gen_cluster_powers,
    lsps_from_normals,
    render_cir,
)
from mrpchan.scenario import load_scenario


def test_lsps_at_the_medians(scenario):
    lsp = lsps_from_normals(scenario, [0.0, 0.0, 0.0, 0.0])
    assert lsp.ds_s == pytest.approx(10**scenario.lg_ds_mu)
    assert lsp.asd_deg == pytest.approx(10**1.62)
    assert lsp.zsd_deg == pytest.approx(10**1.08)
    assert lsp.sf_linear == 1.0


def test_lsp_spreads_are_clipped(scenario):
    lsp = lsps_from_normals(scenario, [0.0, 10.0, 10.0, 0.0])
    assert lsp.asd_deg == scenario.asd_max_deg
    assert lsp.zsd_deg == scenario.zsd_max_deg


def test_draw_lsps_is_deterministic(scenario):
    assert draw_lsps(scenario, RandomStream(3)) == draw_lsps(scenario, RandomStream(3))


def test_cluster_delays(scenario, stream):
    delays = gen_cluster_delays(30e-9, scenario, stream)
    assert delays.shape == (scenario.n_clusters,)
    assert delays[0] == 0.0
    assert np.all(np.diff(delays) >= 0)


def test_cluster_delays_need_positive_spread(scenario, stream):
    with pytest.raises(ChannelDomainError):
        gen_cluster_delays(0.0, scenario, stream)


def test_cluster_powers_are_normalized(scenario, stream):
    delays = gen_cluster_delays(30e-9, scenario, stream.child(0))
    powers = gen_cluster_powers(delays, 30e-9, scenario, stream.child(1))
    assert powers.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.all(powers > 0)


def test_cluster_powers_decay_without_shadowing(stream):
    sc = load_scenario("inh_nlos", 28.0, {"cluster_shadow_db": 0})
    delays = np.array([0.0, 10e-9, 20e-9])
    powers = gen_cluster_powers(delays, 30e-9, sc, stream)
    assert np.all(np.diff(powers) < 0)


@pytest.mark.parametrize("kind", [AngleKind.AZIMUTH, "zenith"])
def test_cluster_angles_stay_in_range(scenario, stream, kind):
    powers = np.linspace(1.0, 0.001, 19)
    angles = gen_cluster_angles(60.0, powers, 90.0, kind, scenario, stream)
    assert angles.shape == (19,)
    upper = 360.0 if AngleKind(kind) is AngleKind.AZIMUTH else 180.0
    assert np.all((angles >= 0) & (angles <= upper))


def test_cluster_angles_need_positive_spread(scenario, stream):
    with pytest.raises(ChannelDomainError):
        gen_cluster_angles(0.0, np.ones(3), 0.0, "azimuth", scenario, stream)


def test_cluster_angles_collapse_to_center_for_tiny_spread(scenario, stream):
    powers = np.linspace(1.0, 0.001, 19)
    angles = gen_cluster_angles(1e-9, powers, 90.0, "azimuth", scenario, stream)
    np.testing.assert_allclose(angles, 90.0, atol=1e-6)


def test_cluster_angles_follow_the_center(scenario, stream):
    powers = np.linspace(1.0, 0.001, 19)
    a = gen_cluster_angles(40.0, powers, 10.0, "azimuth", scenario, stream)
    b = gen_cluster_angles(40.0, powers, 100.0, "azimuth", scenario, stream)
    np.testing.assert_allclose(wrap180(b - a), 90.0, atol=1e-9)


def test_subchannel_invariants(scenario, stream):
    entry = RpEntry(6.5, 130.0, 90.0)
    sub = assemble_subchannel(2, entry, scenario, stream)
    paths = sub.paths
    n, m = scenario.n_clusters, scenario.m_rays

    assert paths.size == n * m
    assert paths.power_lin.sum() == pytest.approx(1.0, abs=1e-9)
    np.testing.assert_array_equal(paths.aoa_deg, paths.aod_deg)
    np.testing.assert_array_equal(paths.zoa_deg, paths.zod_deg)
    np.testing.assert_array_equal(paths.zod_deg, 90.0)
    np.testing.assert_array_equal(paths.doppler_hz, 0.0)
    assert paths.abs_delay_s.min() == pytest.approx(6.5 / SPEED_OF_LIGHT, rel=1e-12)
    assert np.all(paths.rp_index == 2)
    assert sorted(set(paths.cluster_index)) == list(range(n))
    assert paths.phases.shape == (n * m, 4)
    assert np.all((paths.phases >= 0) & (paths.phases < 2 * np.pi))
    assert sub.pl_db == scenario.pathloss.gain_db(28.0, 6.5)
    assert sub.excess_delay_s == 0.0


def test_subchannel_zenith_spread(scenario_3d, stream):
    sub = assemble_subchannel(0, (6.5, 0.0, 90.0), scenario_3d, stream)
    zod = sub.paths.zod_deg
    assert zod.std() > 0
    assert np.all((zod >= 0) & (zod <= 180))
    np.testing.assert_array_equal(sub.paths.zoa_deg, zod)


def test_subchannel_excess_delay(stream):
    sc = load_scenario("inh_nlos", 28.0, {"excess_delay_enabled": True})
    sub = assemble_subchannel(0, (3.0, 0.0, 90.0), sc, stream)
    assert sub.excess_delay_s > 0
    assert sub.paths.abs_delay_s.min() == pytest.approx(
        3.0 / SPEED_OF_LIGHT + sub.excess_delay_s
    )


def test_subchannel_is_deterministic(scenario):
    a = assemble_subchannel(0, (5.0, 10.0, 90.0), scenario, RandomStream(11))
    b = assemble_subchannel(0, (5.0, 10.0, 90.0), scenario, RandomStream(11))
    for column_a, column_b in zip(a.paths, b.paths):
        np.testing.assert_array_equal(column_a, column_b)


def test_path_records(scenario, stream):
    sub = assemble_subchannel(1, (5.0, 0.0, 90.0), scenario, stream)
    records = list(sub.paths.records())
    assert len(records) == sub.paths.size
    assert records[0].rp_index == 1
    assert records[0].aoa_deg == records[0].aod_deg
    assert len(records[0].phases) == 4


def test_path_set_concat_requires_input():
    with pytest.raises(MalformedInputError):
        PathSet.concat([])


def test_render_cir_power(scenario, stream):
    sub = assemble_subchannel(0, (5.0, 0.0, 90.0), scenario, stream)
    single = AntennaArray.single()
    taps = render_cir([sub], single, single, 28.0)
    assert taps.coefficients.shape == (1, 1, sub.paths.size)
    np.testing.assert_allclose(
        np.abs(taps.coefficients[0, 0]) ** 2, sub.paths.power_lin, rtol=1e-9
    )
    np.testing.assert_array_equal(taps.delays_s, sub.paths.abs_delay_s)


def test_render_cir_array_elements_share_magnitude(scenario, stream):
    sub = assemble_subchannel(0, (5.0, 0.0, 90.0), scenario, stream)
    array = AntennaArray.uniform_linear(4, scenario.wavelength_m / 2)
    taps = render_cir([sub], array, AntennaArray.single(), 28.0, amplitude_scales=[2])
    assert taps.coefficients.shape == (1, 4, sub.paths.size)
    magnitudes = np.abs(taps.coefficients[0])
    np.testing.assert_allclose(magnitudes, magnitudes[[0]].repeat(4, axis=0))
    np.testing.assert_allclose(magnitudes[0] ** 2, 4 * sub.paths.power_lin)


def test_render_cir_scale_mismatch(scenario, stream):
    sub = assemble_subchannel(0, (5.0, 0.0, 90.0), scenario, stream)
    single = AntennaArray.single()
    with pytest.raises(MalformedInputError):
        render_cir([sub], single, single, 28.0, amplitude_scales=[1.0, 2.0])


def boresight_subchannel(scenario, stream, doppler_hz=0.0):
    sub = assemble_subchannel(0, (5.0, 0.0, 90.0), scenario, stream)
    size = sub.paths.size
    paths = sub.paths._replace(
        aod_deg=np.zeros(size),
        zod_deg=np.full(size, 90.0),
        doppler_hz=np.full(size, doppler_hz),
    )
    return sub._replace(paths=paths)


def test_render_cir_half_wavelength_elements_are_in_antiphase(scenario, stream):
    sub = boresight_subchannel(scenario, stream)
    array = AntennaArray.uniform_linear(2, SPEED_OF_LIGHT / 28e9 / 2)
    taps = render_cir([sub], array, AntennaArray.single(), 28.0)
    ratio = taps.coefficients[0, 1] / taps.coefficients[0, 0]
    np.testing.assert_allclose(ratio, -1.0, atol=1e-9)


def test_render_cir_doppler_phase_is_linear_in_time(scenario, stream):
    sub = boresight_subchannel(scenario, stream, doppler_hz=100.0)
    single = AntennaArray.single()
    start = render_cir([sub], single, single, 28.0).coefficients
    for t in (1e-3, 2.5e-3):
        later = render_cir([sub], single, single, 28.0, t=t).coefficients
        np.testing.assert_allclose(
            later / start, np.exp(2j * np.pi * 100.0 * t), rtol=1e-9
        )
