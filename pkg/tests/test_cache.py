import numpy as np
import pytest

from poincare_kernel.cache import (
    MAGIC,
    cached_enumerate,
    group_key,
    load_basis,
    load_group,
    read_arrays,
    save_basis,
    save_group,
    write_arrays,
)
from poincare_kernel.errors import CacheIntegrityError, ConfigError
from poincare_kernel.quadrature import torus_rule
from poincare_kernel.quotient import ArrayFamily, ThetaFamily, build_basis, quotient_kernel


def test_array_roundtrip(tmp_path):
    arrs = {"x": np.arange(5.0), "z": np.array([1 + 2j, -3j]), "i": np.arange(6, dtype=np.int32).reshape(2, 3)}
    write_arrays(tmp_path / "a.pkc", "test", {"k": 1}, arrs)
    kind, meta, back = read_arrays(tmp_path / "a.pkc")
    assert kind == "test" and meta == {"k": 1}
    for k in arrs:
        assert back[k].dtype == arrs[k].dtype and np.array_equal(back[k], arrs[k])


def test_flat_group_roundtrip(tmp_path, flat):
    elems = flat.enumerate(0j, 18.5)
    assert len(elems) > 1000
    save_group(tmp_path / "g.pkc", flat, elems, 18.5)
    space, back, meta = load_group(tmp_path / "g.pkc")
    assert space == flat and meta["radius"] == 18.5
    assert np.array_equal(back.m, elems.m) and np.array_equal(back.n, elems.n)
    assert np.array_equal(back.displacement, elems.displacement)


def test_mobius_group_roundtrip(tmp_path, disc):
    elems = disc.enumerate(0j, 6.0)
    save_group(tmp_path / "g.pkc", disc, elems, 6.0)
    _, back, _ = load_group(tmp_path / "g.pkc")
    assert np.array_equal(back.a, elems.a) and np.array_equal(back.b, elems.b)
    assert np.array_equal(back.apply(0.1j), elems.apply(0.1j))


@pytest.mark.parametrize("damage", ["truncate", "flip", "magic"])
def test_corruption_detected(tmp_path, flat, damage):
    p = tmp_path / "g.pkc"
    save_group(p, flat, flat.enumerate(0j, 5.0), 5.0)
    data = bytearray(p.read_bytes())
    if damage == "truncate":
        data = data[:-7]
    elif damage == "flip":
        data[-3] ^= 0xFF
    else:
        data[:len(MAGIC)] = b"X" * len(MAGIC)
    p.write_bytes(bytes(data))
    with pytest.raises(CacheIntegrityError):
        load_group(p)


def test_cached_enumerate_reuses_file(tmp_path, flat):
    a = cached_enumerate(flat, 4.0, directory=tmp_path)
    files = list(tmp_path.glob("group-*.pkc"))
    assert len(files) == 1 and group_key(flat, 4.0) in files[0].name
    b = cached_enumerate(flat, 4.0, directory=tmp_path)
    assert np.array_equal(a.m, b.m) and len(a) == 49


def test_cache_dir_from_environment(tmp_path, monkeypatch, flat):
    monkeypatch.setenv("POINCARE_KERNEL_CACHE", str(tmp_path / "env"))
    cached_enumerate(flat, 2.0)
    assert len(list((tmp_path / "env").glob("*.pkc"))) == 1


def test_basis_roundtrip(tmp_path, flat):
    b = build_basis(ThetaFamily(flat, 3), torus_rule(1j, 16))
    save_basis(tmp_path / "b.pkc", b)
    back = load_basis(tmp_path / "b.pkc")
    assert back.rank == 3
    z, w = 0.1 + 0.2j, 0.6 + 0.3j
    assert quotient_kernel(z, w, back).unit == quotient_kernel(z, w, b).unit


def test_basis_of_unknown_family_refused(tmp_path, flat):
    fam = ArrayFamily(lambda z: np.ones((1, len(z))), 1, 1)
    fam.space = flat
    save_basis(tmp_path / "b.pkc", build_basis(fam, torus_rule(1j, 4)))
    with pytest.raises(ConfigError):
        load_basis(tmp_path / "b.pkc")
