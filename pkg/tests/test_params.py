"""Mass geometry, neutral trim, and config file round trips.

Numeric expectations were computed independently from the moment-balance
definitions (first-moment quotient for h_g, Archimedes balance for the
neutral trim weight) and are frozen here at full precision.
"""

import math

import numpy as np
import pytest

from blimp_invert.params import (
    BlimpParams,
    derive_geometry,
    load_params,
    neutral_extra_weight,
    params_from_dict,
    params_to_dict,
    replace,
    save_params,
    validate_neutral,
)


def test_default_geometry_frozen_values():
    g = derive_geometry(BlimpParams())
    assert g.m_h == pytest.approx(0.026790, abs=1e-12)
    assert g.m_rb == pytest.approx(0.18374, abs=1e-12)
    assert g.r_tb == pytest.approx(0.30, abs=1e-15)
    assert g.h_g == pytest.approx(0.18346304560792426, abs=1e-12)
    assert g.r_zb == pytest.approx(0.11653695439207573, abs=1e-12)


def test_geometry_lambda_splits_trim_weight():
    # moving trim weight off the envelope top lowers c_g and grows the arm
    g = derive_geometry(replace(BlimpParams(), lam=0.6))
    assert g.m_rb == pytest.approx(0.18374, abs=1e-12)
    assert g.h_g == pytest.approx(0.15804669641885272, abs=1e-12)
    assert g.r_zb == pytest.approx(0.14195330358114727, abs=1e-12)


def test_geometry_light_trim_weight():
    g = derive_geometry(replace(BlimpParams(), m_w=0.005))
    assert g.m_rb == pytest.approx(0.16539, abs=1e-12)
    assert g.h_g == pytest.approx(0.14279581595017835, abs=1e-12)
    assert g.r_zb == pytest.approx(0.15720418404982164, abs=1e-12)


def test_arm_monotone_in_lambda():
    arms = [
        derive_geometry(replace(BlimpParams(), lam=lam)).r_zb
        for lam in np.linspace(0.0, 1.0, 11)
    ]
    assert all(a > b for a, b in zip(arms, arms[1:]))


def test_neutral_extra_weight_value():
    # Archimedes balance: rho_air V = m_t + m_bat + m_e + m_h + m_w
    w = neutral_extra_weight(BlimpParams())
    assert w == pytest.approx(0.02336, abs=1e-9)
    assert abs(w - 0.02335) < 1e-4  # within 0.1 g of the build target


def test_default_file_is_neutral():
    p = BlimpParams()
    assert abs(p.m_w - neutral_extra_weight(p)) < 1e-4
    validate_neutral(p)


def test_validate_neutral_rejects_imbalance():
    with pytest.raises(ValueError):
        validate_neutral(replace(BlimpParams(), m_w=0.005))


def test_geometry_rejects_bad_inputs():
    base = BlimpParams()
    with pytest.raises(ValueError):
        derive_geometry(replace(base, lam=1.5))
    with pytest.raises(ValueError):
        derive_geometry(replace(base, m_e=-0.01))
    with pytest.raises(ValueError):
        derive_geometry(replace(base, m_t=0.0, m_bat=0.0, m_e=0.0, m_w=0.0))


def test_dict_round_trip():
    p = replace(BlimpParams(), m_w=0.0200, lam=0.75, g_m=2.0)
    q = params_from_dict(params_to_dict(p))
    assert p == q


def test_yaml_round_trip(tmp_path):
    p = replace(BlimpParams(), m_w=neutral_extra_weight(BlimpParams()))
    path = tmp_path / "params.yaml"
    save_params(p, path)
    q = load_params(path)
    assert p == q


def test_unknown_keys_rejected():
    d = params_to_dict(BlimpParams())
    d["masses"]["typo_key"] = 1.0
    with pytest.raises(ValueError, match="typo_key"):
        params_from_dict(d)
    d = params_to_dict(BlimpParams())
    d["not_a_section"] = {}
    with pytest.raises(ValueError, match="not_a_section"):
        params_from_dict(d)
    d = params_to_dict(BlimpParams())
    d["thrusters"][0]["spin"] = 1
    with pytest.raises(ValueError, match="spin"):
        params_from_dict(d)


def test_load_rejects_off_neutral_when_required(tmp_path):
    path = tmp_path / "params.yaml"
    save_params(replace(BlimpParams(), m_w=0.005), path)
    with pytest.raises(ValueError, match="not neutral"):
        load_params(path)
    save_params(replace(BlimpParams(), m_w=0.005, require_neutral=False), path)
    q = load_params(path)
    assert q.m_w == pytest.approx(0.005)
