"""Spectrum cache: round trip, corruption detection, key separation."""

import struct

import numpy as np
import pytest

from midaxis.cache import SpectrumCache
from midaxis.errors import CacheError
from midaxis.rotor import example_geometry


@pytest.fixture
def cache(tmp_path):
    return SpectrumCache(tmp_path / "cache")


def test_round_trip_bit_exact(cache):
    g = example_geometry()
    vals = np.random.default_rng(3).normal(0.0, 1e6, 257)
    vals.sort()
    cache.store("sc0", 1234, g, (-1e6, 1e6), vals)
    back = cache.load("sc0", 1234, g, (-1e6, 1e6))
    assert back is not None
    assert np.array_equal(back, vals)
    assert back.dtype == np.float64


def test_miss_returns_none(cache):
    assert cache.load("sc0", 99, example_geometry(), (0.0, 1.0)) is None


def test_distinct_keys_do_not_collide(cache):
    g = example_geometry()
    a = np.array([1.0, 2.0])
    b = np.array([3.0, 4.0])
    cache.store("sc0", 10, g, (0.0, 1.0), a)
    cache.store("sc1", 10, g, (0.0, 1.0), b)
    cache.store("sc0", 11, g, (0.0, 1.0), b)
    cache.store("sc0", 10, g, (0.0, 2.0), b)
    assert np.array_equal(cache.load("sc0", 10, g, (0.0, 1.0)), a)


def test_corruption_detected(cache):
    g = example_geometry()
    vals = np.linspace(0.0, 1.0, 32)
    path = cache.store("sc0", 7, g, (0.0, 1.0), vals)
    blob = bytearray(path.read_bytes())
    blob[100] ^= 0xFF  # flip one payload byte
    path.write_bytes(bytes(blob))
    with pytest.raises(CacheError):
        cache.load("sc0", 7, g, (0.0, 1.0))


def test_truncation_detected(cache):
    g = example_geometry()
    path = cache.store("sc0", 8, g, (0.0, 1.0), np.linspace(0.0, 1.0, 32))
    blob = path.read_bytes()
    path.write_bytes(blob[: len(blob) // 2])
    with pytest.raises(CacheError):
        cache.load("sc0", 8, g, (0.0, 1.0))


def test_bad_magic_detected(cache):
    g = example_geometry()
    path = cache.store("sc0", 9, g, (0.0, 1.0), np.linspace(0.0, 1.0, 8))
    blob = bytearray(path.read_bytes())
    blob[:4] = b"NOPE"
    # keep the trailer CRC consistent so only the magic check can fire
    import zlib

    blob[-4:] = struct.pack("<I", zlib.crc32(bytes(blob[:-4])))
    path.write_bytes(bytes(blob))
    with pytest.raises(CacheError):
        cache.load("sc0", 9, g, (0.0, 1.0))


def test_geometry_rounding_tolerates_last_ulp(cache):
    from midaxis.rotor import RotorGeometry

    g1 = example_geometry()
    g2 = RotorGeometry(np.nextafter(g1.A1, 100.0), g1.A2, g1.A3)
    vals = np.array([1.0, 2.0, 3.0])
    cache.store("sc0", 5, g1, (0.0, 1.0), vals)
    assert np.array_equal(cache.load("sc0", 5, g2, (0.0, 1.0)), vals)
