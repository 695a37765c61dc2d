"""Smoke test for the magedge_py extension.

Uses an installed magedge_py if present (``maturin develop -m crates/py/Cargo.toml``),
otherwise loads the library from ``target/release`` after
``cargo build --release -p magedge-py --features extension-module``.
"""

import json
import math
import os
import shutil
import sys
import tempfile

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def load():
    try:
        import magedge_py

        return magedge_py
    except ImportError:
        pass
    for name in ("libmagedge_py.so", "libmagedge_py.dylib", "magedge_py.dll"):
        lib = os.path.join(ROOT, "target", "release", name)
        if os.path.exists(lib):
            tmp = tempfile.mkdtemp()
            ext = ".pyd" if name.endswith(".dll") else ".so"
            shutil.copy(lib, os.path.join(tmp, "magedge_py" + ext))
            sys.path.insert(0, tmp)
            import magedge_py

            return magedge_py
    sys.exit("magedge_py not built; see the module docstring")


def main():
    mg = load()

    p = mg.Params(2.0, 8.0, 0.3, flux=0.25)
    lo, hi = p.band_window()
    assert abs(lo - 2.05) < 1e-12 and abs(hi - 2.3) < 1e-12
    basis = mg.Basis.auto(p, hi)
    print(p, basis)

    # far from both walls the fiber sits on the Landau levels
    levels = mg.fiber_levels(p, basis, 0.0, 2, walls="none")
    assert abs(levels[0] - 2.0) < 1e-2 and abs(levels[1] - 6.0) < 3e-2, levels

    scan = dict(mg.flux_scan(p, basis, [0.0, 0.25]))
    assert scan[0.0] < 1e-8 and scan[0.25] > 1e-3, scan

    states = mg.window_spectrum(p, basis, 0, lo, hi)
    assert states and all(r <= 1e-9 for (_, _, _, r) in states)

    report = json.loads(mg.theorem1(p, basis, [0]))
    rec = report["records"][0]
    assert rec["n_left"] + rec["n_right"] + rec["n_bulk"] == rec["window_count"]

    pairs = mg.match_spectra([1.0, 2.0], [1.01, 2.02, 5.0], 0.1)
    assert [(i, j) for i, j, _ in pairs] == [(0, 0), (1, 1)]

    pts = [(L, math.exp(-0.5 * math.sqrt(L))) for L in (9.0, 12.0, 16.0)]
    slope, _, _ = mg.fit_decay(pts, "sqrt")
    assert abs(slope + 0.5) < 1e-6

    try:
        mg.Params(1.0, 8.0, 0.3).validate_band_experiment()
    except ValueError as e:
        assert "B > 4·V0" in str(e)
    else:
        raise AssertionError("expected ValueError")

    with tempfile.TemporaryDirectory() as out:
        cfg = json.dumps({"B": 2, "L": 8, "V0": 0.3, "seeds": 1})
        n = mg.run("theorem1", cfg, out)
        assert n >= 4 and os.path.exists(os.path.join(out, "manifest.json"))
        assert mg.run("self-test", "{}", out) == n

    print("smoke test passed")


if __name__ == "__main__":
    main()
