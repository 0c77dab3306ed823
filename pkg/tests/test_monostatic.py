import math

import numpy as np
import pytest

from mrpchan.antenna import AntennaArray
from mrpchan.core import MalformedInputError, RandomStream, RpPlacement
from mrpchan.gbsm import assemble_subchannel
from mrpchan.monostatic import (
    aggregate_pl,
    average_placement,
    compose_channel,
    equal_distance_for_pl,
    render_channel_cir,
)

PL_TARGET_DB = -80.8125


@pytest.mark.parametrize(
    "q, aods",
    [
        (1, (0.0,)),
        (2, (0.0, 180.0)),
        (3, (0.0, 120.0, 240.0)),
        (4, (0.0, 90.0, 180.0, 270.0)),
        (5, (0.0, 72.0, 144.0, 216.0, 288.0)),
    ],
)
def test_average_placement(scenario, q, aods):
    p = average_placement(q, PL_TARGET_DB, 28.0)
    assert p.aod_deg == pytest.approx(aods)
    assert p.zod_deg == (90.0,) * q
    assert len(set(p.distances_m)) == 1
    pl = aggregate_pl([scenario.pathloss.gain_db(28.0, d) for d in p.distances_m])
    assert pl == pytest.approx(PL_TARGET_DB, abs=1e-9)


def test_equal_distance_grows_with_q():
    distances = [equal_distance_for_pl(q, PL_TARGET_DB, 28.0) for q in range(1, 6)]
    assert distances == sorted(distances)


def test_q_copies_law(scenario):
    single = scenario.pathloss.gain_db(28.0, 7.0)
    for q in range(1, 6):
        assert aggregate_pl([single] * q) == pytest.approx(
            single + 10 * math.log10(q), abs=1e-12
        )


def test_weights_sum_to_one(scenario, stream):
    p = average_placement(3, PL_TARGET_DB, 28.0)
    ch = compose_channel(p, scenario, stream)
    assert ch.weighted_paths.power_lin.sum() == pytest.approx(1.0, abs=1e-9)
    assert ch.pl_total_db == pytest.approx(PL_TARGET_DB, abs=1e-9)
    assert len(ch.subchannels) == 3
    assert ch.weighted_paths.size == 3 * scenario.n_clusters * scenario.m_rays


def test_weights_follow_pl_shares(scenario, stream):
    p = RpPlacement((4.0, 8.0), (0.0, 180.0), (90.0, 90.0))
    ch = compose_channel(p, scenario, stream)
    paths = ch.weighted_paths
    near = paths.power_lin[paths.rp_index == 0].sum()
    far = paths.power_lin[paths.rp_index == 1].sum()
    # 38.3 dB per decade: one octave is 11.53 dB
    assert 10 * math.log10(near / far) == pytest.approx(38.3 * math.log10(2))


def test_shadow_fading_weighting(scenario, stream):
    p = average_placement(2, PL_TARGET_DB, 28.0)
    plain = compose_channel(p, scenario, stream)
    with_sf = compose_channel(p, scenario, stream, include_sf=True)
    sf = np.array([sub.lsp.sf_linear for sub in with_sf.subchannels])
    rp1 = with_sf.weighted_paths.rp_index == 1
    expected = 0.5 * sf[1] / sf.sum()
    assert with_sf.weighted_paths.power_lin[rp1].sum() == pytest.approx(expected)
    assert plain.weighted_paths.power_lin[rp1].sum() == pytest.approx(0.5)
    assert with_sf.sf_total_db == pytest.approx(10 * math.log10(sf.sum()))


def test_adding_an_rp_keeps_the_others(scenario):
    stream = RandomStream(99)
    two = compose_channel(
        RpPlacement((5.0, 6.0), (0.0, 90.0), (90.0, 90.0)), scenario, stream
    )
    three = compose_channel(
        RpPlacement((5.0, 6.0, 7.0), (0.0, 90.0, 200.0), (90.0, 90.0, 90.0)),
        scenario,
        stream,
    )
    for a, b in zip(two.subchannels, three.subchannels):
        assert a.lsp == b.lsp
        np.testing.assert_array_equal(a.paths.aod_deg, b.paths.aod_deg)
        np.testing.assert_array_equal(a.paths.abs_delay_s, b.paths.abs_delay_s)


def sorted_weighted_paths(channel):
    paths = channel.weighted_paths
    order = np.lexsort((paths.aod_deg, paths.abs_delay_s))
    return paths.abs_delay_s[order], paths.aod_deg[order], paths.power_lin[order]


@pytest.mark.parametrize("order", [(0, 1, 2), (2, 0, 1), (1, 2, 0), (2, 1, 0)])
def test_rp_order_does_not_change_the_channel(scenario, order):
    stream = RandomStream(99)
    p = RpPlacement((5.0, 6.0, 7.0), (0.0, 120.0, 240.0), (90.0, 90.0, 90.0))
    reference = compose_channel(p, scenario, stream)
    shuffled = compose_channel(p.permuted(order), scenario, stream, rp_keys=order)
    assert shuffled.pl_total_db == pytest.approx(reference.pl_total_db)
    for a, b in zip(sorted_weighted_paths(reference), sorted_weighted_paths(shuffled)):
        np.testing.assert_allclose(a, b, rtol=1e-12)


def test_rp_keys(scenario):
    stream = RandomStream(99)
    p = RpPlacement((5.0,), (0.0,), (90.0,))
    keyed = compose_channel(p, scenario, stream, rp_keys=[4])
    default = compose_channel(p, scenario, stream)
    direct = assemble_subchannel(0, p.entries()[0], scenario, stream.child(4))
    assert keyed.subchannels[0].lsp == direct.lsp
    assert keyed.subchannels[0].lsp != default.subchannels[0].lsp
    with pytest.raises(MalformedInputError):
        compose_channel(p, scenario, stream, rp_keys=[0, 1])


def test_compose_is_deterministic(scenario):
    p = average_placement(2, PL_TARGET_DB, 28.0)
    a = compose_channel(p, scenario, RandomStream(5))
    b = compose_channel(p, scenario, RandomStream(5))
    for column_a, column_b in zip(a.weighted_paths, b.weighted_paths):
        np.testing.assert_array_equal(column_a, column_b)


def test_channel_cir_power(scenario, stream):
    p = average_placement(2, PL_TARGET_DB, 28.0)
    ch = compose_channel(p, scenario, stream)
    single = AntennaArray.single()
    taps = render_channel_cir(ch, 28.0, single, single)
    expected = sum(
        10 ** (sub.pl_db / 10) * sub.lsp.sf_linear for sub in ch.subchannels
    )
    total = np.sum(np.abs(taps.coefficients) ** 2)
    assert total == pytest.approx(expected, rel=1e-9)
