import numpy as np
import pytest

from adamas.errors import BitsMismatchError, DimensionMismatchError, SelectionError
from adamas.kv_cache import KvCache
from adamas.pipeline import AdamasConfig, encode, encode_rows


def filled(rng, n, d=16, bits=2):
    cache = KvCache(d, bits, capacity=2)
    K, V = rng.standard_normal((2, n, d))
    cfg = AdamasConfig(bits=bits)
    for k, v in zip(K, V):
        cache.update(k, v, encode(k, cfg))
    return cache, K, V


def test_update_on_empty_cache(rng):
    cache = KvCache(16)
    k = rng.standard_normal(16)
    assert cache.update(k, k, encode(k)) == 1
    assert cache.seq_len == 1


def test_insertion_order_survives_growth(rng):
    cache, K, V = filled(rng, 3)
    assert len(cache) == 3
    np.testing.assert_array_equal(cache.keys, K)
    np.testing.assert_array_equal(cache.values, V)
    np.testing.assert_array_equal(cache.code_words, encode_rows(K))


def test_views_stay_valid_after_append(rng):
    cache, K, _ = filled(rng, 5)
    view = cache.keys
    k = rng.standard_normal(16)
    cache.update(k, k, encode(k))
    np.testing.assert_array_equal(view, K)
    assert not view.flags.writeable


def test_gather_full_and_single(rng):
    cache, K, V = filled(rng, 4)
    k_all, v_all = cache.gather([0, 1, 2, 3])
    np.testing.assert_array_equal(k_all, K)
    np.testing.assert_array_equal(v_all, V)
    k2, v2 = cache.gather([2])
    np.testing.assert_array_equal(k2[0], K[2])
    np.testing.assert_array_equal(v2[0], V[2])


def test_gather_random_subset_matches_dense_copy(rng):
    K, V = rng.standard_normal((2, 1000, 32))
    cache = KvCache(32)
    cache.extend(K, V, encode_rows(K))
    idx = np.sort(rng.choice(1000, 64, replace=False))
    k, v = cache.gather(idx)
    np.testing.assert_array_equal(k, K.copy()[idx])
    np.testing.assert_array_equal(v, V.copy()[idx])


@pytest.mark.parametrize("bad", [[3, 1], [1, 1], [-1], [4]])
def test_gather_rejects_bad_indices(rng, bad):
    cache, *_ = filled(rng, 4)
    with pytest.raises(SelectionError):
        cache.gather(bad)


def test_update_validation(rng):
    cache = KvCache(16, 2)
    k = rng.standard_normal(16)
    with pytest.raises(DimensionMismatchError):
        cache.update(k[:8], k[:8], encode(k))
    with pytest.raises(BitsMismatchError):
        cache.update(k, k, encode(k, AdamasConfig(bits=1)))
    with pytest.raises(DimensionMismatchError):
        cache.update(k, k, encode(k[:8]))


def test_extend_rejects_wrong_code_width(rng):
    K = rng.standard_normal((4, 16))
    with pytest.raises(BitsMismatchError):
        KvCache(16, 2).extend(K, K, encode_rows(K, AdamasConfig(bits=1)))


def test_code_overhead_is_one_sixteenth():
    assert KvCache(128, 2).code_overhead_ratio() == 1 / 16
    assert KvCache(128, 1).code_overhead_ratio() == 1 / 32


@pytest.mark.parametrize("bits", [1, 2, 3])
def test_snapshot_round_trip(tmp_path, rng, bits):
    K, V = rng.standard_normal((2, 37, 32)).astype(np.float32)
    cache = KvCache(32, bits)
    cache.extend(K, V, encode_rows(K, AdamasConfig(bits=bits)))
    path = tmp_path / "cache.adkv"
    cache.save(path)
    back = KvCache.load(path)
    assert (back.seq_len, back.head_dim, back.bits) == (37, 32, bits)
    np.testing.assert_array_equal(back.keys, K)
    np.testing.assert_array_equal(back.values, V)
    np.testing.assert_array_equal(back.code_words, cache.code_words)


def test_snapshot_header_layout(tmp_path):
    cache = KvCache(16, 2)
    path = tmp_path / "empty.adkv"
    cache.save(path)
    raw = path.read_bytes()
    assert raw == b"ADKV" + (1).to_bytes(4, "little") + (0).to_bytes(4, "little") + (16).to_bytes(4, "little") + b"\x02"
    assert KvCache.load(path).seq_len == 0


def test_snapshot_rejects_corruption(tmp_path, rng):
    cache, *_ = filled(rng, 3)
    path = tmp_path / "c.adkv"
    cache.save(path)
    raw = path.read_bytes()
    (tmp_path / "magic").write_bytes(b"XXXX" + raw[4:])
    (tmp_path / "short").write_bytes(raw[:-1])
    for name in ("magic", "short"):
        with pytest.raises(ValueError):
            KvCache.load(tmp_path / name)
