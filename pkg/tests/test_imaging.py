import numpy as np
import pytest

from mdlan.bench import f_measure, gen_synthetic_video
from mdlan.core import load_mdm1
from mdlan.imaging import (
    ImageStack, decompose_stack, foreground_mask, load_stack, read_pnm, save_components,
    save_stack, stack_from_matrix, write_pnm,
)
from mdlan.solver import DecompositionResult, SolverConfig


def _pgm_bytes(h, w, pixels):
    return f"P5\n{w} {h}\n255\n".encode() + bytes(pixels)


def test_single_pgm_raster_order(tmp_path):
    (tmp_path / "a.pgm").write_bytes(_pgm_bytes(2, 2, [0, 255, 10, 20]))
    st = load_stack(tmp_path)
    assert (st.h, st.w, st.channels, st.frames) == (2, 2, 1, 1)
    np.testing.assert_array_equal(st.data[0][:, 0], [0, 255, 10, 20])


def test_ppm_channels(tmp_path, rng):
    for j in range(3):
        write_pnm(tmp_path / f"f{j}.ppm", rng.integers(0, 256, size=(4, 5, 3)))
    st = load_stack(tmp_path)
    assert st.channels == 3 and len(st.data) == 3
    assert all(d.shape == (20, 3) for d in st.data)


def test_lexicographic_order(tmp_path):
    for name, val in [("b.pgm", 2), ("a.pgm", 1), ("c.pgm", 3)]:
        (tmp_path / name).write_bytes(_pgm_bytes(1, 1, [val]))
    st = load_stack(tmp_path)
    assert st.names == ["a.pgm", "b.pgm", "c.pgm"]
    np.testing.assert_array_equal(st.data[0][0], [1, 2, 3])


def test_roundtrip_bit_identical(tmp_path, rng):
    src = stack_from_matrix(rng.integers(0, 256, size=(30, 4)).astype(float), 5, 6)
    save_stack(src, tmp_path / "a")
    first = load_stack(tmp_path / "a")
    save_stack(first, tmp_path / "b")
    second = load_stack(tmp_path / "b")
    np.testing.assert_array_equal(first.data[0], src.data[0])
    np.testing.assert_array_equal(second.data[0], first.data[0])
    for f in sorted((tmp_path / "a").iterdir()):
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()


def test_mixed_sizes_name_offender(tmp_path):
    (tmp_path / "a.pgm").write_bytes(_pgm_bytes(2, 2, [0] * 4))
    (tmp_path / "b.pgm").write_bytes(_pgm_bytes(3, 2, [0] * 6))
    with pytest.raises(ValueError, match="b.pgm"):
        load_stack(tmp_path)


def test_unsupported_formats(tmp_path):
    (tmp_path / "a.pgm").write_bytes(b"P2\n2 1\n255\n0 1\n")
    with pytest.raises(ValueError, match="P5/P6"):
        load_stack(tmp_path)
    (tmp_path / "a.pgm").write_bytes(b"P5\n1 1\n65535\n\x01\x02")
    with pytest.raises(ValueError, match="8-bit"):
        read_pnm(tmp_path / "a.pgm")


def test_empty_directory(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_stack(tmp_path)
    with pytest.raises(FileNotFoundError):
        load_stack(tmp_path / "missing")


def test_stack_validation():
    with pytest.raises(ValueError):
        ImageStack(2, 2, 2, [np.zeros((4, 1))] * 2)
    with pytest.raises(ValueError):
        ImageStack(2, 2, 1, [np.zeros((5, 1))])


def test_vectorization_bijection(rng):
    img = rng.integers(0, 256, size=(7, 3)).astype(float)
    st = stack_from_matrix(img.ravel()[:, None], 7, 3)
    np.testing.assert_array_equal(st.frame(0), img)


def test_foreground_mask():
    assert not foreground_mask(np.zeros((3, 3))).any()
    E = np.zeros((4, 4))
    E.flat[[0, 3, 5, 6, 9, 12, 15]] = [1, -2, 3, -4, 5, 0.5, -0.1]
    assert foreground_mask(E).sum() == 7
    assert not foreground_mask(E, np.abs(E).max()).any()
    with pytest.raises(ValueError):
        foreground_mask(E, -1)


def test_identical_frames_rank1():
    frame = np.linspace(20, 200, 48).reshape(6, 8).round()
    st = stack_from_matrix(np.tile(frame.ravel()[:, None], (1, 5)), 6, 8)
    res = decompose_stack(st)[0]
    assert res.rank_est == 1
    assert np.abs(res.E).max() <= 1e-6 * 200


def test_decompose_stack_channels_independent(rng):
    Y, _ = gen_synthetic_video(12, 16, 8, 3, 0.0, 4)
    Z = np.roll(Y, 5, axis=1)
    st = ImageStack(12, 16, 3, [Y, Z, Y.copy()])
    out = decompose_stack(st, jobs=2)
    swapped = decompose_stack(ImageStack(12, 16, 3, [Z, Y, Y.copy()]))
    np.testing.assert_array_equal(out[0].X, swapped[1].X)
    np.testing.assert_array_equal(out[1].E, swapped[0].E)
    np.testing.assert_array_equal(out[0].X, out[2].X)
    with pytest.raises(ValueError, match="image_shape"):
        decompose_stack(st, SolverConfig(image_shape=(16, 12)))


def test_f_measure_from_support():
    Y, truth = gen_synthetic_video(24, 32, 16, 6, 0.0, 3)
    res = decompose_stack(stack_from_matrix(Y, 24, 32))[0]
    mask = foreground_mask(res.E)
    tp = np.sum(mask & truth)
    want = 2 * tp / (mask.sum() + truth.sum())
    assert f_measure(mask, truth) == pytest.approx(want)


def test_save_components(tmp_path):
    X = np.array([[300.0, 0.0], [-5.0, 0.0], [127.6, 0.0], [0.4, 0.0]])
    E = np.array([[0.0, -2.0], [1.0, 0.0], [0.0, 0.0], [0.0, 0.5]])
    res = DecompositionResult(X, E, 1, 3, 1, "converged")
    save_components(res, (2, 2), tmp_path)
    low0 = read_pnm(tmp_path / "low_0000.pgm").ravel()
    np.testing.assert_array_equal(low0, np.clip(np.round(X[:, 0]), 0, 255))
    np.testing.assert_array_equal(low0, [255, 0, 128, 0])
    assert not read_pnm(tmp_path / "low_0001.pgm").any()
    np.testing.assert_array_equal(read_pnm(tmp_path / "sparse_0001.pgm").ravel(), [255, 0, 0, 64])
    np.testing.assert_array_equal(load_mdm1(tmp_path / "X.mdm1"), X)
    np.testing.assert_array_equal(load_mdm1(tmp_path / "E.mdm1"), E)
    with pytest.raises(ValueError):
        save_components(res, (3, 2), tmp_path)


def test_save_components_unwritable(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    res = DecompositionResult(np.zeros((4, 1)), np.zeros((4, 1)), 0, 0, 1, "converged")
    with pytest.raises(OSError):
        save_components(res, (2, 2), blocker / "sub")
