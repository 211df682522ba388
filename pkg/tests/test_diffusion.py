import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from padic_heat.diffusion import (
    StateWindow,
    build_increment_law,
    draw_on_sphere,
    empirical_vs_exact,
    homogeneity_check,
    leading_pattern_check,
    path_rng,
    sample_radii,
    simulate,
)
from padic_heat.errors import WindowTooSmallError
from padic_heat.heat_kernel import KernelParams, sphere_mass, z_tent
from padic_heat.padic_core import PAdicPoint, sphere_volume

PR = KernelParams(2, 1, 1.0, 1.0)


def test_law_accounts_for_all_mass():
    for pr in (PR, KernelParams(3, 2, 0.5, 0.5), KernelParams(5, 1, 2.0, 1.0)):
        law = build_increment_law(pr, 0.3)
        assert law.pmf.sum() + law.clipped_mass == pytest.approx(1.0, abs=1e-14)
        assert law.clipped_mass < 1e-9
        m = int(law.support[len(law.support) // 2])
        assert law.prob(m) == pytest.approx(z_tent(m, 0.3, pr) * float(sphere_volume(pr.p, pr.n, m)), rel=1e-14)
        assert law.prob(law.m_hi + 1) == 0.0


def test_law_shifts_under_time_scaling():
    # radius scales like t^{1/alpha}: time p^alpha t moves every sphere out by one
    t = 0.2
    a = build_increment_law(PR, t, window=(-20, 20), max_clipped=1e-5)
    b = build_increment_law(PR, t * 2.0, window=(-19, 21), max_clipped=1e-5)
    assert a.clipped_mass == pytest.approx(b.clipped_mass, rel=1e-12)
    assert np.allclose(a.pmf, b.pmf, rtol=1e-12, atol=1e-300)


def test_fixed_window_too_narrow():
    with pytest.raises(WindowTooSmallError):
        build_increment_law(PR, 1.0, window=(-1, 1))
    with pytest.raises(WindowTooSmallError):
        build_increment_law(PR, 1.0, state_window=(-3, 3))


def test_sphere_draws_have_the_requested_radius():
    win = StateWindow(3, 2)
    rng = path_rng(5, 0)
    for m in (-4, 0, 3):
        for _ in range(20):
            d, _ = draw_on_sphere(m, win, rng)
            assert win.to_point(d).radius_exp() == m


def test_leading_pattern_is_uniform():
    law = build_increment_law(KernelParams(3, 2, 1.0, 1.0), 1.0)
    assert leading_pattern_check(0, law, 4000, seed=11) > 0.01


def test_zero_steps_returns_start():
    x0 = PAdicPoint.from_rationals(2, [5])
    ts = simulate(PR, 0.5, 0, 3, seed=1, x0=x0)
    assert ts.states.shape[1] == 1
    assert all((tr.points()[0] - x0).is_zero for tr in ts)


def test_simulation_is_deterministic_and_thread_invariant():
    a = simulate(PR, 0.5, 3, 50, seed=42)
    b = simulate(PR, 0.5, 3, 50, seed=42)
    c = simulate(PR, 0.5, 3, 50, seed=42, workers=4)
    assert np.array_equal(a.states, b.states) and np.array_equal(a.states, c.states)
    assert not np.array_equal(a.states, simulate(PR, 0.5, 3, 50, seed=43).states)


def test_increment_radii_follow_the_law():
    ts = simulate(PR, 0.5, 2, 3000, seed=9)
    assert empirical_vs_exact(ts, ts.law).p_value > 0.01
    # stored digits reproduce the drawn radii
    r = ts.displacement_radii(0, 1)
    assert np.array_equal(r, ts.radii[:, 0])


def test_increments_do_not_depend_on_the_state():
    ts = simulate(PR, 0.5, 2, 4000, seed=3)
    assert homogeneity_check(ts) > 0.01


def test_trajectory_records(tmp_path):
    ts = simulate(KernelParams(3, 1, 1.0, 1.0), 0.1, 2, 2, seed=0)
    path = tmp_path / "out.jsonl"
    ts.write_jsonl(str(path))
    recs = [json.loads(line) for line in path.read_text().splitlines()]
    assert len(recs) == 6
    assert recs[0]["radius_exp"] is None and recs[0]["step"] == 0
    assert [r["t"] for r in recs[:3]] == pytest.approx([0.0, 0.1, 0.2])


@settings(max_examples=10)
@given(st.integers(0, 2**32), st.integers(1, 5))
def test_sample_radii_stay_in_support(seed, k):
    law = build_increment_law(PR, 0.1 * k)
    r = sample_radii(law, 50, seed)
    assert r.min() >= law.m_lo and r.max() <= law.m_hi


@given(st.sampled_from([2, 3]), st.integers(1, 2), st.floats(0.01, 5.0))
def test_pmf_matches_sphere_masses(p, n, t):
    pr = KernelParams(p, n, 1.0, 1.0)
    law = build_increment_law(pr, t)
    assert np.allclose(law.pmf, sphere_mass(law.support, t, pr), rtol=1e-14, atol=0)
