"""Smoke test of the dasc Python module. Run after building it with maturin or pip."""

import math
import tempfile
from pathlib import Path

import numpy as np

import dasc


def texture(w, h):
    y, x = np.mgrid[0:h, 0:w].astype(float)
    return 0.5 + 0.2 * np.sin(0.9 * x + 0.3 * y) + 0.15 * np.cos(0.4 * x - 1.1 * y) + 0.1 * np.sin(0.23 * x * y)


def main():
    cfg = dasc.Config(dasc__dim=16, dasc__support_size=15, grid__n_rho=2, grid__n_theta=8, grid__radius=5)
    cfg.set("slic.superpixels", 12)
    cfg.set("slic.compactness", 40)
    assert cfg.get("dasc.dim") == "16"

    img = texture(48, 40)
    pats = dasc.Patterns.random(cfg)
    assert len(pats) == 16

    fast = dasc.compute_dasc(img, pats, cfg)
    oracle = dasc.compute_dasc(img, pats, cfg, oracle=True)
    assert (fast.width, fast.height, fast.dim) == (48, 40, 16)
    assert fast.max_abs_diff(oracle) < 1e-6
    norm = math.sqrt(sum(v * v for v in fast.get(10, 10)))
    assert abs(norm - 1.0) < 1e-9

    # descriptors ignore a positive affine change of intensity
    box = dasc.Config(dasc__dim=16, dasc__support_size=15, grid__n_rho=2, grid__n_theta=8, grid__radius=5,
                      dasc__weighting="box")
    d1 = dasc.compute_dasc(img, pats, box)
    d2 = dasc.compute_dasc(0.3 * img + 0.2, pats, box)
    assert d1.max_abs_diff(d2) < 1e-6

    disp = dasc.match_stereo(fast, fast, 4)
    assert dasc.bad_pixel_rate(disp, disp) == 0.0
    flow = dasc.match_flow(fast, fast, 2)
    assert np.all(np.array(flow.u()) == 0) and np.all(np.array(flow.v()) == 0)
    assert dasc.endpoint_error(flow, flow) == 0.0

    kps = dasc.detect_wmsd(img) or [dasc.Keypoint(24, 20, 1.5, 0.3)]
    sp = dasc.segment_superpixels(img, cfg)
    fields = dasc.propagate_fields(img, sp, kps, cfg)
    assert len(fields) == sp.count and any(fields.constrained)
    gi = dasc.compute_gi_dasc(img, sp, fields, pats, cfg)
    assert gi.dim == 16

    labels = sp.labels()
    moved = dasc.transfer_labels(flow, labels)
    assert dasc.label_transfer_error(moved, labels) == 0.0

    rng = np.random.default_rng(0)
    pairs = []
    for i in range(40):
        a = rng.random((15, 15))
        b = a.copy() if i % 2 == 0 else rng.random((15, 15))
        pairs.append((a, b, i % 2 == 0))
    top, weights, bias = dasc.learn_patterns(pairs, 4, config=cfg)
    assert len(top) == 4 and len(weights) == len(dasc.Patterns.candidates(cfg))

    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        fast.save(tmp / "d.bin")
        assert dasc.Descriptors.load(tmp / "d.bin").max_abs_diff(fast) < 1e-6  # stored as f32
        flow.save(tmp / "f.flo")
        assert dasc.Flow.load(tmp / "f.flo").u() == flow.u()
        top.save(tmp / "p.txt")
        assert dasc.Patterns.load(tmp / "p.txt").pairs() == top.pairs()
        cfg.save(tmp / "run.cfg")
        assert repr(dasc.Config.load(tmp / "run.cfg")) == repr(cfg)
        try:
            dasc.load_image(tmp / "missing.png")
        except OSError:
            pass
        else:
            raise AssertionError("missing file must raise OSError")

    print(f"smoke test ok: {len(kps)} keypoints, {sp.count} superpixels")


if __name__ == "__main__":
    main()
