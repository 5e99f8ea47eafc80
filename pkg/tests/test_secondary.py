"""Round-trip of the offline feature extractor against the trainer's loader.

Builds a few PNG inputs, runs the extractor CLI (node), and checks that its
CSV satisfies the load_features contract and is byte-stable under a fixed
head seed.
"""

import shutil
import struct
import subprocess
import zlib
from pathlib import Path

import numpy as np
import pytest

from multiq.data import load_features

EXTRACT_JS = Path(__file__).resolve().parent.parent / "extractor" / "dist" / "src" / "extract.js"

pytestmark = pytest.mark.skipif(
    shutil.which("node") is None, reason="node is required for the extractor round trip"
)


def _png_chunk(kind: bytes, body: bytes) -> bytes:
    return struct.pack(">I", len(body)) + kind + body + struct.pack(
        ">I", zlib.crc32(kind + body) & 0xFFFFFFFF
    )


def write_png(path: Path, pixels: np.ndarray) -> None:
    """Minimal 8-bit RGB PNG writer (filter 0, no interlacing)."""
    height, width, _ = pixels.shape
    raw = b"".join(b"\x00" + pixels[y].astype(np.uint8).tobytes() for y in range(height))
    ihdr = struct.pack(">IIBBBBB", width, height, 8, 2, 0, 0, 0)
    path.write_bytes(
        b"\x89PNG\r\n\x1a\n"
        + _png_chunk(b"IHDR", ihdr)
        + _png_chunk(b"IDAT", zlib.compress(raw, 9))
        + _png_chunk(b"IEND", b"")
    )


def _make_images(directory: Path) -> None:
    directory.mkdir()
    rng = np.random.default_rng(0)
    write_png(directory / "img_black.png", np.zeros((48, 48, 3), dtype=np.uint8))
    write_png(directory / "img_white.png", np.full((48, 48, 3), 255, dtype=np.uint8))
    write_png(directory / "img_noise.png", rng.integers(0, 256, size=(64, 80, 3), dtype=np.uint8).astype(np.uint8))


def _run_extractor(images: Path, out: Path, seed: int = 11) -> None:
    assert EXTRACT_JS.exists(), "extractor not built; run `npm run build` in extractor/"
    subprocess.run(
        ["node", str(EXTRACT_JS), "--images", str(images), "--out", str(out), "--dim", "20", "--seed", str(seed)],
        check=True,
        capture_output=True,
        text=True,
    )


def test_extractor_roundtrip_acceptance(tmp_path):
    images = tmp_path / "images"
    _make_images(images)

    first = tmp_path / "features_a.csv"
    second = tmp_path / "features_b.csv"
    _run_extractor(images, first)
    _run_extractor(images, second)

    # Fixed head seed: byte-identical output.
    assert first.read_bytes() == second.read_bytes()

    # Loads through the trainer's parser with the expected dimension.
    table = load_features(first, expected_dim=20)
    assert len(table) == 3
    assert set(table.vectors) == {"img_black", "img_white", "img_noise"}
    for vector in table.vectors.values():
        assert vector.shape == (20,)
        assert np.isfinite(vector).all()
    assert np.linalg.norm(table.vectors["img_black"] - table.vectors["img_white"]) > 0
    angles = table.angles("img_noise")
    assert (np.abs(angles) <= np.pi).all()
    print("\nACCEPTANCE PASS: extractor round trip: dim-20 CSV loads cleanly and reruns are byte-identical", flush=True)


def test_extractor_skips_broken_images(tmp_path):
    images = tmp_path / "images"
    _make_images(images)
    (images / "broken.png").write_bytes(b"not a png")
    out = tmp_path / "features.csv"
    _run_extractor(images, out)
    table = load_features(out, expected_dim=20)
    assert len(table) == 3
    report = out.with_suffix(".csv.skipped.txt")
    assert report.exists() and "broken.png" in report.read_text()
