"""Smoke test for the ultri_py extension module.

Build the module first, e.g. `maturin develop -m crates/python/Cargo.toml`,
or `cargo build --release -p ultri-python --features extension-module` and
copy target/release/libultri_py.so to ultri_py.so somewhere on PYTHONPATH.
"""

import json

import ultri_py as u


def main():
    exp = u.generate(6, 2, "loop", extra=3, seed_config=1, seed_ensemble=2, seed_shuffle=3)
    data = exp.dataset
    assert len(data) == 3 + 3 * 3 + 3, len(data)
    assert len(exp.walks) == len(data)

    again = u.DataSet.from_json(data.to_json())
    assert again.values == data.values

    rec = u.reconstruct(data)
    report = u.verify(exp.truth, rec.configuration)
    assert report.matched and report.scale == 1, report.max_residual
    assert rec.certificate_residual < 1e-9

    doubled = u.generate(5, 2, "path", seed_config=4, scale=2)
    rec2 = u.reconstruct(doubled.dataset)
    assert u.verify(doubled.truth, rec2.configuration).scale == 2

    try:
        u.reconstruct(u.DataSet(2, 1, "path", [1.0, 2.0 ** 0.5, 3.0 ** 0.5, 5.0 ** 0.5]))
        raise AssertionError("noise should not reconstruct")
    except u.NoBaseFound:
        pass

    assert u.canonical_matrix("base", 2)[2] == [1, 1, 1, 0, 0, 0]
    assert not u.membership([1.0] * 6, "identity", 2)[0]
    assert u.find_integer_relation([3.0, 4.0, 5.0], 2) is not None
    assert abs(u.cayley_menger_det([1.0, 1.0, 2.0, 2.0, 1.0, 1.0], 2)) < 1e-12

    print(json.dumps({
        "points": len(rec.configuration),
        "explained": rec.explained_count,
        "residual": report.max_residual,
    }))
    print("ok")


if __name__ == "__main__":
    main()
