import math

import pytest

import lefschetz as lf


def p2():
    return lf.parse_config("[group]\nname = p2\n[gamma]\nword = r\n[schedule]\nt = 0.2, 0.1\nradius = 6\n")


def test_config_roundtrip():
    cfg = p2()
    assert cfg.group == "p2"
    assert cfg.t == [0.2, 0.1]
    assert lf.parse_config(cfg.text()).text() == cfg.text()


def test_config_error_is_value_error():
    with pytest.raises(lf.ConfigError):
        lf.parse_config("[nowhere]\nx = 1\n")
    with pytest.raises(ValueError):
        lf.parse_config("[schedule]\nt = 0.1, 0.2\n")


def test_fixed_point_side():
    r = lf.rhs(p2())
    assert abs(r["value"] - (-0.5j)) < 1e-12
    assert r["components"] == 1


def test_degree0_matches_fixed_point_side():
    d = lf.lefschetz0(p2())
    assert len(d["points"]) == 2
    assert abs(d["mean"] - (-0.5j)) < 1e-4
    for p in d["points"]:
        assert abs(p["pairing"]["value"] - 2 * p["supertrace"]["value"]) < 1e-6


def test_constants_and_getzler():
    c = lf.constants(1)
    assert c["alpha"] == "1/6"
    assert abs(c["c_qn"] - 1j / (2 * math.pi)) < 1e-15
    assert lf.getzler_order("[Q, f]") == -5


def test_verify_selector():
    items = lf.verify("getzler,constants")
    assert items and all(i["pass"] for i in items)
    with pytest.raises(lf.ConfigError):
        lf.verify("nonsense")
