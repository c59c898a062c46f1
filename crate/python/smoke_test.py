"""Smoke test for the pymccm extension.

Build with `maturin develop -m crates/python/Cargo.toml`, or
`cargo build --release -p mccm-python` and put `libpymccm.so` on the path as
`pymccm.so`.
"""

import math
import sys

import pymccm


def close(a, b, tol=1e-9):
    return abs(a - b) <= tol


def main():
    b = 3
    lb = math.log(b)
    w = pymccm.WeightModel.lognormal(math.sqrt(0.25 * lb))
    assert close(w.moment(1.0), 1.0, 1e-12)
    spec = pymccm.ModelSpec(w, b)
    assert close(spec.fourier_dimension(), 0.75)
    assert close(spec.hausdorff_dimension(), 0.875)

    report = pymccm.ModelSpec(pymccm.WeightModel.two_point(0.5), 4).report()
    assert report["salem"] is True
    assert close(report["d_f"], 0.5) and close(report["d_h"], 0.5)

    degenerate = pymccm.ModelSpec(pymccm.WeightModel.two_point(0.1), 4).report()
    assert degenerate["nondegenerate"] is False and degenerate["d_f"] is None

    field = pymccm.sample_field(spec, 6, seed=11)
    assert len(field) == b**6 and field.depth == 6
    deeper = pymccm.sample_field(spec, 7, seed=11)
    assert field.refine(1).masses == deeper.masses

    coeffs = field.spectrum(64)
    assert len(coeffs) == 65
    assert close(coeffs[0].real, field.total_mass(), 1e-12)
    assert all(abs(c) <= abs(coeffs[0]) * (1 + 1e-12) for c in coeffs)
    assert pymccm.spectrum(spec, 6, 64, seed=11) == coeffs

    try:
        pymccm.WeightModel.two_point(1.5)
    except ValueError:
        pass
    else:
        raise AssertionError("x > 1 accepted")

    print(f"pymccm {pymccm.__version__}: smoke test passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
